#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <string_view>

#include "dual.hpp"
#include "errors.hpp"

namespace extremal {

// Parsed arithmetic expression in one variable t, per the grammar
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := base ("^" factor)?
//   base   := number | "t" | func "(" expr ")" | "(" expr ")"
//   func   in {exp, ln, sin, cos, sinh, cosh}
// There is no unary minus in the grammar; write 0-t if you need one.
//
// Evaluation is templated over the scalar type so the same tree serves plain
// doubles and (nested) dual numbers.

enum class ExprKind { Constant, Variable, Add, Sub, Mul, Div, Pow, Func };
enum class ExprFunc { Exp, Ln, Sin, Cos, Sinh, Cosh };

struct ExprNode {
    ExprKind kind;
    double value = 0.0;         // Constant
    ExprFunc func = ExprFunc::Exp;  // Func
    std::unique_ptr<ExprNode> lhs, rhs;  // binary ops; Func uses lhs
};

namespace detail {

inline bool has_variable(const ExprNode& n) {
    switch (n.kind) {
        case ExprKind::Constant: return false;
        case ExprKind::Variable: return true;
        case ExprKind::Func: return has_variable(*n.lhs);
        default: return has_variable(*n.lhs) || has_variable(*n.rhs);
    }
}

template <class T>
T eval_node(const ExprNode& n, const T& t) {
    switch (n.kind) {
        case ExprKind::Constant: return T(n.value);
        case ExprKind::Variable: return t;
        case ExprKind::Add: return eval_node(*n.lhs, t) + eval_node(*n.rhs, t);
        case ExprKind::Sub: return eval_node(*n.lhs, t) - eval_node(*n.rhs, t);
        case ExprKind::Mul: return eval_node(*n.lhs, t) * eval_node(*n.rhs, t);
        case ExprKind::Div: {
            T denom = eval_node(*n.rhs, t);
            if (value_of(denom) == 0.0) throw DomainError("division by zero");
            return eval_node(*n.lhs, t) / denom;
        }
        case ExprKind::Pow: {
            T base = eval_node(*n.lhs, t);
            if (!has_variable(*n.rhs)) {
                // real exponent: valid for negative bases with integer p, etc.
                double p = eval_node(*n.rhs, 0.0);
                using std::pow;
                return pow(base, p);
            }
            if (value_of(base) <= 0.0)
                throw DomainError("power with variable exponent requires positive base");
            using std::exp;
            using std::log;
            return exp(eval_node(*n.rhs, t) * log(base));
        }
        case ExprKind::Func: {
            T a = eval_node(*n.lhs, t);
            using std::cos;
            using std::cosh;
            using std::exp;
            using std::log;
            using std::sin;
            using std::sinh;
            switch (n.func) {
                case ExprFunc::Exp: return exp(a);
                case ExprFunc::Ln:
                    if (value_of(a) <= 0.0)
                        throw DomainError("ln of nonpositive value");
                    return log(a);
                case ExprFunc::Sin: return sin(a);
                case ExprFunc::Cos: return cos(a);
                case ExprFunc::Sinh: return sinh(a);
                case ExprFunc::Cosh: return cosh(a);
            }
        }
    }
    throw Error("corrupt expression tree");
}

inline double deep_value(double x) { return x; }
template <class T>
double deep_value(const Dual<T>& x) { return deep_value(x.v); }

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void print_node(const ExprNode& n, std::string& out) {
    switch (n.kind) {
        case ExprKind::Constant: out += format_number(n.value); return;
        case ExprKind::Variable: out += 't'; return;
        case ExprKind::Func: {
            static const char* names[] = {"exp", "ln", "sin", "cos", "sinh", "cosh"};
            out += names[static_cast<int>(n.func)];
            out += '(';
            print_node(*n.lhs, out);
            out += ')';
            return;
        }
        default: {
            static const char ops[] = {'+', '-', '*', '/', '^'};
            out += '(';
            print_node(*n.lhs, out);
            out += ops[static_cast<int>(n.kind) - static_cast<int>(ExprKind::Add)];
            print_node(*n.rhs, out);
            out += ')';
            return;
        }
    }
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    std::unique_ptr<ExprNode> run() {
        auto e = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw SyntaxError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }
    bool consume(char c) {
        if (peek_is(c)) { ++pos_; return true; }
        return false;
    }

    std::unique_ptr<ExprNode> parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (consume('+')) lhs = make_binary(ExprKind::Add, std::move(lhs), parse_term());
            else if (consume('-')) lhs = make_binary(ExprKind::Sub, std::move(lhs), parse_term());
            else return lhs;
        }
    }
    std::unique_ptr<ExprNode> parse_term() {
        auto lhs = parse_factor();
        for (;;) {
            if (consume('*')) lhs = make_binary(ExprKind::Mul, std::move(lhs), parse_factor());
            else if (consume('/')) lhs = make_binary(ExprKind::Div, std::move(lhs), parse_factor());
            else return lhs;
        }
    }
    std::unique_ptr<ExprNode> parse_factor() {
        auto base = parse_base();
        if (consume('^'))  // right associative
            return make_binary(ExprKind::Pow, std::move(base), parse_factor());
        return base;
    }
    std::unique_ptr<ExprNode> parse_base() {
        skip_ws();
        if (pos_ >= text_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            if (!consume(')')) throw SyntaxError("expected ')'", pos_);
            return e;
        }
        throw SyntaxError(std::string("unexpected character '") + c + "'", pos_);
    }
    std::unique_ptr<ExprNode> parse_number() {
        const char* begin = text_.data() + pos_;
        const char* end = text_.data() + text_.size();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc{} || ptr == begin)
            throw SyntaxError("malformed number", pos_);
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        auto n = std::make_unique<ExprNode>();
        n->kind = ExprKind::Constant;
        n->value = v;
        return n;
    }
    std::unique_ptr<ExprNode> parse_identifier() {
        std::size_t start = pos_;
        while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::string_view name = text_.substr(start, pos_ - start);
        if (name == "t") {
            auto n = std::make_unique<ExprNode>();
            n->kind = ExprKind::Variable;
            return n;
        }
        ExprFunc func;
        if (name == "exp") func = ExprFunc::Exp;
        else if (name == "ln") func = ExprFunc::Ln;
        else if (name == "sin") func = ExprFunc::Sin;
        else if (name == "cos") func = ExprFunc::Cos;
        else if (name == "sinh") func = ExprFunc::Sinh;
        else if (name == "cosh") func = ExprFunc::Cosh;
        else throw UnknownIdentifier(std::string(name), start);
        if (!consume('(')) throw SyntaxError("expected '(' after function name", pos_);
        auto arg = parse_expr();
        if (!consume(')')) throw SyntaxError("expected ')'", pos_);
        auto n = std::make_unique<ExprNode>();
        n->kind = ExprKind::Func;
        n->func = func;
        n->lhs = std::move(arg);
        return n;
    }
    static std::unique_ptr<ExprNode> make_binary(ExprKind k, std::unique_ptr<ExprNode> l,
                                                 std::unique_ptr<ExprNode> r) {
        auto n = std::make_unique<ExprNode>();
        n->kind = k;
        n->lhs = std::move(l);
        n->rhs = std::move(r);
        return n;
    }
};

}  // namespace detail

class ScalarExpression {
public:
    ScalarExpression() = default;
    explicit ScalarExpression(std::string_view text)
        : root_(detail::Parser(text).run()), source_(text) {}

    // Evaluation for t >= 0 (the declared domain).  Any non-finite result is a
    // DomainError rather than a silent NaN.
    double operator()(double t) const { return eval<double>(t); }

    template <class T>
    T eval(double t) const {
        if (t < 0.0) throw DomainError("expression domain is t >= 0");
        T r;
        if constexpr (std::is_same_v<T, double>)
            r = detail::eval_node<double>(*root_, t);
        else
            r = detail::eval_node<T>(*root_, T::variable(t));
        if (!std::isfinite(detail::deep_value(r)))
            throw DomainError("non-finite expression value");
        return r;
    }

    // d/dt via forward duals
    double derivative(double t) const {
        if (t < 0.0) throw DomainError("expression domain is t >= 0");
        Dual<double> r = detail::eval_node<Dual<double>>(*root_, Dual<double>::variable(t));
        if (!std::isfinite(r.d)) throw DomainError("non-finite derivative");
        return r.d;
    }

    // d2/dt2 via central differences with h = max(1e-4, 1e-4*t); the grammar
    // is smooth so this is accurate enough for the tau indicators.
    double second_derivative(double t) const {
        double h = std::max(1e-4, 1e-4 * t);
        if (t - h < 0.0) h = t / 2;
        if (h == 0.0) h = 1e-4;
        double lo = t >= h ? t - h : 0.0;
        return (derivative(t + h) - derivative(lo)) / (t + h - lo);
    }

    std::string print() const {
        std::string out;
        detail::print_node(*root_, out);
        return out;
    }

    const std::string& source() const noexcept { return source_; }
    bool empty() const noexcept { return !root_; }

private:
    std::shared_ptr<const ExprNode> root_;
    std::string source_;
};

inline ScalarExpression parse_expression(std::string_view text) {
    return ScalarExpression(text);
}

}  // namespace extremal
