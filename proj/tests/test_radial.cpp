#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "extremal/certificate.hpp"
#include "extremal/radial.hpp"

using namespace extremal;
using Catch::Approx;

namespace {

ContinuationConfig cap30() {
    ContinuationConfig c;
    c.sup_norm_cap = 30.0;
    return c;
}

// Bratu reference for n = 1 (u'(0) = 0, u(1) = 0): the one-parameter
// family gives lambda(theta) = 2 theta^2 / cosh^2(theta); lambda* is its
// maximum.  Built independently of the solver.
double bratu_lambda_star() {
    auto lam = [](double th) { return 2.0 * th * th / std::pow(std::cosh(th), 2); };
    double a = 0.5, b = 2.0;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    for (int it = 0; it < 200; ++it) {
        if (lam(x1) < lam(x2)) {
            a = x1;
            x1 = x2;
            x2 = a + gr * (b - a);
        } else {
            b = x2;
            x2 = x1;
            x1 = b - gr * (b - a);
        }
    }
    return lam(0.5 * (a + b));
}

const Branch& branch_n2() {
    static Branch br = [] {
        RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
        return continue_branch(prob, cap30());
    }();
    return br;
}

}  // namespace

TEST_CASE("operator discretization is exact on quadratics", "[radial]") {
    RadialProblem prob(Nonlinearity::builtin("exp"), 3.0, 257);
    std::vector<double> u(prob.N);
    for (int i = 0; i < prob.N; ++i) u[i] = 1.0 - prob.r(i) * prob.r(i);
    auto out = apply_operator(prob, u);
    // -u'' - (n-1)/r u' = 2 + 2(n-1) = 2n = 6, including the r = 0 row
    for (int i = 0; i < prob.N - 1; ++i) CHECK(out[i] == Approx(6.0).margin(1e-10));
    CHECK(out[prob.N - 1] == 0.0);

    CHECK_THROWS_AS(apply_operator(prob, std::vector<double>(11, 0.0)), BadParameter);
    CHECK(singular_substitution_defect(10.0, 16.0) == 0.0);
    CHECK(singular_substitution_defect(10.0, 15.5) == Approx(0.5));
    CHECK_THROWS_AS(RadialProblem(Nonlinearity::builtin("exp"), 0.5, 2049), BadParameter);
    CHECK_THROWS_AS(RadialProblem(Nonlinearity::builtin("exp"), 2.0, 32), BadParameter);
}

TEST_CASE("newton solve against the n=2 shooting value", "[radial]") {
    RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
    std::vector<double> u = newton_solve(prob, 1.0, {});
    // u(0) = 2 ln(c) with c from matching the closed Liouville form;
    // reference value obtained by high-order shooting
    CHECK(u[0] == Approx(0.31669436764).margin(5e-5));
    CHECK(u.back() == 0.0);
    for (std::size_t i = 1; i < u.size(); ++i) CHECK(u[i] <= u[i - 1] + 1e-12);

    // unscaled equation defect
    auto out = apply_operator(prob, u);
    for (int i = 0; i < prob.N - 1; ++i)
        CHECK(std::abs(out[i] - std::exp(u[i])) < 1e-6);

    // a wrong-length guess is replaced by the zero seed: same answer
    std::vector<double> u2 = newton_solve(prob, 1.0, std::vector<double>(5, 0.0));
    CHECK(u2 == u);

    CHECK_THROWS_AS(newton_solve(prob, 2.5, {}), NoConvergence);  // above lambda*
}

TEST_CASE("vanishing lambda reproduces the linearization", "[radial]") {
    RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
    const double lam = 1e-6;
    std::vector<double> u = newton_solve(prob, lam, {});
    // -Lap u = lam to first order: u = lam (1 - r^2) / (2n)
    double worst = 0.0;
    for (int i = 0; i < prob.N; ++i) {
        const double ref = lam * (1.0 - prob.r(i) * prob.r(i)) / 4.0;
        worst = std::max(worst, std::abs(u[i] - ref));
    }
    CHECK(worst / (lam / 4.0) < 1e-6);
}

TEST_CASE("fold location for n = 2 and n = 1", "[radial]") {
    const Branch& br = branch_n2();
    REQUIRE_FALSE(br.points.empty());
    CHECK(br.fold_detected);
    CHECK(br.termination == Termination::fold);
    CHECK(std::abs(br.lambda_star() - 2.0) < 1e-3);
    CHECK(br.lambda_star_bracket.second - br.lambda_star_bracket.first < 5e-4);
    CHECK(br.lambda_star_bracket.first == Approx(br.points.back().lambda));

    RadialProblem p1(Nonlinearity::builtin("exp"), 1.0, 2049);
    Branch b1 = continue_branch(p1, cap30());
    CHECK(b1.fold_detected);
    CHECK(std::abs(b1.lambda_star() - bratu_lambda_star()) < 2e-4);
}

TEST_CASE("lambda_star converges at second order in h", "[radial]") {
    ContinuationConfig cfg = cap30();
    cfg.lambda_min_step = 1e-9;  // resolve the bracket far below the h^2 error
    auto star = [&](double n, int N) {
        RadialProblem prob(Nonlinearity::builtin("exp"), n, N);
        return continue_branch(prob, cfg).lambda_star();
    };
    for (double n : {1.0, 2.0, 3.0}) {
        const double s513 = star(n, 513), s1025 = star(n, 1025), s2049 = star(n, 2049);
        double ref;
        if (n == 1.0)
            ref = bratu_lambda_star();
        else if (n == 2.0)
            ref = 2.0;
        else
            ref = s2049 + (s2049 - s1025) / 3.0;  // Richardson from the two finest
        const double ratio = (s513 - ref) / (s1025 - ref);
        CAPTURE(n, s513, s1025, s2049, ref);
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.0);
        CHECK(std::abs(s2049 - ref) < std::abs(s513 - ref));
    }
}

TEST_CASE("linearized eigenvalues against closed forms", "[radial]") {
    // n = 1, u = 0, lambda = 0: first eigenvalue of -u'' with u'(0)=0,
    // u(1)=0 is (pi/2)^2
    RadialProblem p1(Nonlinearity::builtin("exp"), 1.0, 2049);
    std::vector<double> zero(p1.N, 0.0);
    EigenResult e1 = smallest_eigenvalue(p1, 0.0, zero);
    CHECK(e1.mu1 == Approx(M_PI * M_PI / 4.0).epsilon(1e-6));
    CHECK(e1.phi[0] == 1.0);
    CHECK(e1.phi.back() == 0.0);
    for (int i = 0; i < p1.N - 1; ++i) CHECK(e1.phi[i] > -1e-12);

    // n = 3, lambda -> 0: mu1 -> pi^2 (radial ball eigenvalue)
    RadialProblem p3(Nonlinearity::builtin("exp"), 3.0, 2049);
    std::vector<double> u3 = newton_solve(p3, 1e-4, {});
    CHECK(smallest_eigenvalue(p3, 1e-4, u3).mu1 == Approx(M_PI * M_PI).epsilon(1e-4));

    // n = 2: j_{0,1}^2, at the discretization's O(h^2) accuracy
    RadialProblem p2(Nonlinearity::builtin("exp"), 2.0, 2049);
    std::vector<double> z2(p2.N, 0.0);
    CHECK(smallest_eigenvalue(p2, 0.0, z2).mu1 == Approx(5.7831859629467).epsilon(2e-3));

    CHECK_THROWS_AS(smallest_eigenvalue(p2, 0.0, std::vector<double>(7, 0.0)), BadParameter);
}

TEST_CASE("minimal branch invariants for n = 2", "[radial]") {
    const Branch& br = branch_n2();
    const auto& pts = br.points;
    REQUIRE(pts.size() >= 8);
    for (std::size_t k = 0; k < pts.size(); ++k) {
        const SolutionPoint& p = pts[k];
        CHECK(p.mu1 > 0.0);
        CHECK(p.residual < 1e-12);
        CHECK(p.u.back() == 0.0);
        for (std::size_t i = 1; i < p.u.size(); ++i) CHECK(p.u[i] <= p.u[i - 1] + 1e-12);
        if (k > 0) {
            CHECK(p.lambda > pts[k - 1].lambda);
            CHECK(p.sup_norm > pts[k - 1].sup_norm);
            CHECK(p.mu1 <= pts[k - 1].mu1 + 1e-9);
        }
    }
    CHECK(br.mu1_max() == Approx(pts.front().mu1));

    // stability has decayed at the fold: compare with mu1 at lambda = 1
    RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
    std::vector<double> u1 = newton_solve(prob, 1.0, {});
    const double mu_at_1 = smallest_eigenvalue(prob, 1.0, u1).mu1;
    CHECK(pts.back().mu1 < 0.05 * mu_at_1);
}

TEST_CASE("energy identity at every converged point", "[radial]") {
    auto check_branch = [](const Nonlinearity& nl, double n) {
        RadialProblem prob(nl, n, 2049);
        Branch br = continue_branch(prob, cap30());
        REQUIRE_FALSE(br.points.empty());
        double worst = 0.0;
        for (const auto& p : br.points) {
            const double lhs = p.dirichlet_energy;
            const double rhs = p.lambda * p.uf_integral;
            worst = std::max(worst,
                             std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
        }
        CAPTURE(nl.name(), n);
        CHECK(worst < 1e-6);
        return br;
    };
    check_branch(Nonlinearity::builtin("exp"), 3.0);
    check_branch(Nonlinearity::builtin("power", {{"p", 2.0}}), 3.0);

    const Branch& b2 = branch_n2();
    double worst = 0.0;
    for (const auto& p : b2.points)
        worst = std::max(worst, std::abs(p.dirichlet_energy - p.lambda * p.uf_integral) /
                                    std::max(p.dirichlet_energy, 1e-300));
    CHECK(worst < 1e-6);
}

TEST_CASE("stability identities for polynomial weights", "[radial]") {
    RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
    const SolutionPoint& last = branch_n2().points.back();
    // g(t) = t reduces to the energy identity; g(t) = t^2 is an
    // independent weight
    CHECK(stability_identity_check(prob, last, ScalarExpression("t")) < 1e-6);
    CHECK(stability_identity_check(prob, last, ScalarExpression("t^2")) < 1e-6);
    CHECK_THROWS_AS(stability_identity_check(prob, last, ScalarExpression("t + 1")),
                    BadParameter);
}

TEST_CASE("quadratic form is nonnegative on the minimal branch", "[radial]") {
    RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
    const auto& pts = branch_n2().points;
    const SolutionPoint& mid = pts[pts.size() / 2];
    const SolutionPoint& last = pts.back();

    EigenResult eig = smallest_eigenvalue(prob, mid.lambda, mid.u);
    CHECK(stability_form(prob, mid, eig.phi) > -1e-8);

    // concrete admissible test functions phi = u and phi = u^2
    CHECK(stability_form(prob, last, last.u) > 0.0);
    std::vector<double> usq(last.u.size());
    for (std::size_t i = 0; i < usq.size(); ++i) usq[i] = last.u[i] * last.u[i];
    CHECK(stability_form(prob, last, usq) > 0.0);

    CHECK_THROWS_AS(stability_form(prob, last, std::vector<double>(3, 0.0)), BadParameter);
}

TEST_CASE("pseudo-solutions past the fold are rejected", "[radial]") {
    RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
    const Branch& br = branch_n2();
    const double past = br.lambda_star_bracket.first + 1e-3;  // beyond lambda*
    CHECK_THROWS_AS(newton_solve(prob, past, br.points.back().u), NoConvergence);
}

TEST_CASE("norm tracking along branches", "[radial]") {
    // gamma = sigma = 0 integrates the pure weight r^{n-1}: 1/n
    {
        RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
        Branch br = branch_n2();  // copy: track_norms mutates the points
        auto rows = track_norms(prob, br, 0.0, 0.0);
        REQUIRE(rows.size() == br.points.size());
        for (const auto& row : rows) {
            CHECK(row.f_gamma == Approx(0.5).margin(1e-12));
            CHECK(row.ftilde_sigma == Approx(0.5).margin(1e-12));
            CHECK(std::isnan(row.e_l1));
        }
        CHECK(br.points.front().tracked_norms.count("f_gamma") == 1);
        CHECK(br.points.front().tracked_norms.count("E_l1") == 0);
    }
    {
        RadialProblem prob(Nonlinearity::builtin("exp"), 3.0, 2049);
        Branch br = continue_branch(prob, cap30());
        auto rows = track_norms(prob, br, 0.0, 0.0);
        CHECK(rows.front().f_gamma == Approx(1.0 / 3.0).margin(1e-5));
    }
    // with a certificate engine the E column switches on once sup u
    // passes the anchor t0 = 1.  beta1 = 0.6 keeps xi below f'/f from t0
    // on, so E > 0 on the whole window and the integral has a fixed sign.
    {
        RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
        Branch br = branch_n2();
        TestFunctionXi xi = TestFunctionXi::thm11(Nonlinearity::builtin("exp"), 0.6, 1.0, 20.0);
        CertificateEngine eng(xi, 1e-10);
        auto rows = track_norms(prob, br, 1.0, 0.0, &eng);
        CHECK(rows.front().e_l1 == 0.0);  // sup u < t0: empty region
        CHECK(rows.back().e_l1 > 0.0);
        CHECK(br.points.back().tracked_norms.count("E_l1") == 1);
    }
    // the L^gamma norm of f(u) grows toward lambda* (n = 9, gamma from
    // the exponent table at (0.99, 1.01))
    {
        RadialProblem prob(Nonlinearity::builtin("exp"), 9.0, 2049);
        Branch br = continue_branch(prob, cap30());
        REQUIRE(br.fold_detected);
        const double gamma = gamma_exponents(0.99, 1.01).gamma;
        auto rows = track_norms(prob, br, gamma, 0.0);
        const double half = br.lambda_star() / 2.0;
        std::size_t mid = 0;
        for (std::size_t k = 0; k < rows.size(); ++k)
            if (std::abs(rows[k].lambda - half) < std::abs(rows[mid].lambda - half)) mid = k;
        const double ratio =
            std::pow(rows.back().f_gamma / rows[mid].f_gamma, 1.0 / gamma);
        CAPTURE(gamma, rows[mid].lambda, ratio);
        CHECK(ratio > 1.5);
        CHECK(ratio < 3.0);
    }
    {
        RadialProblem prob(Nonlinearity::builtin("exp"), 2.0, 2049);
        Branch br = branch_n2();
        CHECK_THROWS_AS(track_norms(prob, br, 0.5, 1.0), BadParameter);   // sigma > gamma
        CHECK_THROWS_AS(track_norms(prob, br, 1.0, -0.1), BadParameter);  // sigma < 0
    }
}

TEST_CASE("dimension sweep across the critical dimension", "[radial]") {
    auto rows = sweep_dimension(Nonlinearity::builtin("exp"), {2.0, 10.0}, 2049, cap30(), 2);
    REQUIRE(rows.size() == 2);

    CHECK(rows[0].n == 2.0);
    CHECK(rows[0].fold_detected);
    CHECK(rows[0].termination == Termination::fold);
    CHECK(std::abs(rows[0].lambda_star() - 2.0) < 1e-3);
    CHECK(rows[0].error.empty());

    CHECK(rows[1].n == 10.0);
    CHECK_FALSE(rows[1].fold_detected);
    CHECK(rows[1].termination == Termination::failure);
    CHECK(rows[1].lambda_ok > 15.9);
    CHECK(rows[1].lambda_ok < 16.0);
    CHECK(rows[1].note.find("saturated") != std::string::npos);
    CHECK(rows[1].error.empty());

    // a bad dimension is captured per row, not thrown
    auto bad = sweep_dimension(Nonlinearity::builtin("exp"), {0.5}, 2049, cap30(), 1);
    REQUIRE(bad.size() == 1);
    CHECK_FALSE(bad[0].error.empty());
}
