#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "extremal/expression.hpp"

using namespace extremal;

TEST_CASE("arithmetic and precedence", "[expression]") {
    CHECK(parse_expression("2 + 3*4^2")(0.0) == Catch::Approx(50.0));
    CHECK(parse_expression("2*t^3")(2.0) == Catch::Approx(16.0));
    CHECK(parse_expression("2^3^2")(0.0) == Catch::Approx(512.0));  // right associative
    CHECK(parse_expression("(2^3)^2")(0.0) == Catch::Approx(64.0));
    CHECK(parse_expression("10 - 4 - 3")(0.0) == Catch::Approx(3.0));  // left associative
    CHECK(parse_expression("12 / 4 / 3")(0.0) == Catch::Approx(1.0));
    CHECK(parse_expression("0 - t")(2.5) == Catch::Approx(-2.5));  // no unary minus
    CHECK(parse_expression("t^2.5")(4.0) == Catch::Approx(32.0));
    CHECK(parse_expression("t^t")(2.0) == Catch::Approx(4.0));
}

TEST_CASE("function evaluation matches closed forms", "[expression]") {
    ScalarExpression e("exp(t) * (3 + 2*cos(t))");
    for (double t : {0.0, 0.3, 1.3, 4.0, 10.0})
        CHECK(e(t) == Catch::Approx(std::exp(t) * (3.0 + 2.0 * std::cos(t))).epsilon(1e-14));

    ScalarExpression trig("sin(t)^2 + cos(t)^2");
    CHECK(trig(0.7734) == Catch::Approx(1.0).epsilon(1e-14));

    ScalarExpression hyp("cosh(t)^2 - sinh(t)^2");
    CHECK(hyp(2.0) == Catch::Approx(1.0).epsilon(1e-12));

    CHECK(parse_expression("ln(exp(t))")(3.7) == Catch::Approx(3.7).epsilon(1e-14));
}

TEST_CASE("derivative via duals", "[expression]") {
    ScalarExpression e("exp(t) * (3 + 2*cos(t))");
    for (double t : {0.1, 0.7, 2.0, 5.0}) {
        const double exact = std::exp(t) * (3.0 + 2.0 * std::cos(t) - 2.0 * std::sin(t));
        CHECK(e.derivative(t) == Catch::Approx(exact).epsilon(1e-12));
    }
    // d/dt t^t = t^t (ln t + 1)
    ScalarExpression tt("t^t");
    CHECK(tt.derivative(2.0) == Catch::Approx(4.0 * (std::log(2.0) + 1.0)).epsilon(1e-12));
}

TEST_CASE("second derivative via central differences", "[expression]") {
    // derivative of a cubic is quadratic, so the central difference is exact
    CHECK(parse_expression("t^3").second_derivative(2.0) == Catch::Approx(12.0).epsilon(1e-9));
    CHECK(parse_expression("exp(t)").second_derivative(1.0) ==
          Catch::Approx(std::exp(1.0)).epsilon(1e-7));
    // near t = 0 the stencil shrinks to stay inside the domain
    CHECK(parse_expression("t^2").second_derivative(1e-5) == Catch::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("print round-trips through the parser", "[expression]") {
    for (const char* src : {"exp(t) * (3 + 2*cos(t))", "t^2 + 3*t + 3*cos(t) + 4",
                            "(1+t)^3", "t^t", "1/(1+t)"}) {
        ScalarExpression a(src);
        ScalarExpression b(a.print());
        for (double t : {0.0, 0.5, 1.0, 3.0, 7.0}) {
            // t^t is undefined at t = 0 (variable exponent needs a positive base)
            if (t == 0.0 && std::string_view(src) == "t^t") continue;
            CHECK(b(t) == Catch::Approx(a(t)).epsilon(1e-14));
        }
    }
}

TEST_CASE("syntax errors", "[expression]") {
    CHECK_THROWS_AS(parse_expression("exp("), SyntaxError);
    CHECK_THROWS_AS(parse_expression("2 +"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("(t"), SyntaxError);
    CHECK_THROWS_AS(parse_expression("t 2"), SyntaxError);   // trailing input
    CHECK_THROWS_AS(parse_expression("sin t"), SyntaxError); // missing parenthesis
    CHECK_THROWS_AS(parse_expression(""), SyntaxError);
    CHECK_THROWS_AS(parse_expression("1..2"), SyntaxError);
}

TEST_CASE("unknown identifiers", "[expression]") {
    CHECK_THROWS_AS(parse_expression("foo(t)"), UnknownIdentifier);
    CHECK_THROWS_AS(parse_expression("x + 1"), UnknownIdentifier);
    CHECK_THROWS_AS(parse_expression("tan(t)"), UnknownIdentifier);
}

TEST_CASE("domain guards", "[expression]") {
    ScalarExpression e("exp(t)");
    CHECK_THROWS_AS(e(-1.0), DomainError);
    CHECK_THROWS_AS(e(1000.0), DomainError);  // overflow -> non-finite value
    CHECK_THROWS_AS(parse_expression("ln(t)")(0.0), DomainError);
    CHECK_THROWS_AS(parse_expression("1/(t-1)")(1.0), DomainError);
    CHECK_THROWS_AS(parse_expression("t^t")(0.0), DomainError);  // 0^0 with variable exponent
    CHECK_THROWS_AS(parse_expression("exp(t)").derivative(-0.5), DomainError);
}
