#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expression.hpp"
#include "quadrature.hpp"

namespace extremal {

// Analytic limit pair for the beta indicator (1.4).  `approximate` marks
// values quoted from a source rather than derived from the exact derivative;
// see example_1_2 below.
struct BetaPair {
    double minus = 0.0;
    double plus = 0.0;
    bool approximate = false;
};

struct HypothesisReport {
    bool f0_positive = false;
    double f0 = 0.0;
    std::vector<double> monotonicity_violations;  // sample points with f' < 0
    bool superlinear_trend = false;               // f(t)/t grew over the last decade
    double trend_ratio = 0.0;                     // (f(T)/T) / (10 f(T/10)/T)
    bool satisfied() const {
        return f0_positive && monotonicity_violations.empty() && superlinear_trend;
    }
};

// A nonlinearity f together with f', f'' and the antiderivative F(t) = int_0^t f.
// All evaluators reject t < 0.  Closed forms are wired for the catalog entries;
// expression-backed instances fall back to duals (f'), central differences
// (f'') and cached adaptive quadrature (F).
class Nonlinearity {
public:
    using Fn = std::function<double(double)>;

    Nonlinearity() = default;

    Nonlinearity(std::string name, Fn f, Fn fprime, Fn fprime2, Fn bigF)
        : name_(std::move(name)),
          f_(std::move(f)),
          fp_(std::move(fprime)),
          fpp_(std::move(fprime2)),
          F_(std::move(bigF)) {
        if (!f_ || !fp_ || !F_) throw BadParameter("nonlinearity needs f, f' and F");
    }

    double eval_f(double t) const {
        check_domain(t);
        return f_(t);
    }
    double eval_fprime(double t) const {
        check_domain(t);
        return fp_(t);
    }
    double eval_fprime2(double t) const {
        check_domain(t);
        if (!fpp_)
            throw SecondDerivativeUnavailable("no second derivative for '" + name_ + "'");
        return fpp_(t);
    }
    double eval_F(double t) const {
        check_domain(t);
        return F_(t);
    }

    const std::string& name() const noexcept { return name_; }
    const std::map<std::string, double>& params() const noexcept { return params_; }

    std::optional<BetaPair> analytic_beta() const noexcept { return analytic_beta_; }

    bool has_paper_beta_indicator() const noexcept { return static_cast<bool>(paper_beta_); }
    // The tail indicator quoted in the source for example_1_2 (computed there
    // from f' = e^u (3 + 2 cos u - sin u), which drops a factor of 2 on the
    // sin term; kept verbatim for comparison against the quoted limits).
    double paper_beta_indicator(double u) const {
        if (!paper_beta_)
            throw UnknownName("no quoted beta indicator for '" + name_ + "'");
        return paper_beta_(u);
    }

    // --- catalog ---------------------------------------------------------
    static Nonlinearity builtin(const std::string& name,
                                const std::map<std::string, double>& params = {}) {
        if (name == "exp") {
            Nonlinearity n(name, [](double t) { return std::exp(t); },
                           [](double t) { return std::exp(t); },
                           [](double t) { return std::exp(t); },
                           [](double t) { return std::expm1(t); });
            n.analytic_beta_ = BetaPair{1.0, 1.0, false};
            return n;
        }
        if (name == "power") {
            auto it = params.find("p");
            if (it == params.end()) throw BadParameter("power requires parameter p");
            const double p = it->second;
            if (!(p > 1.0)) throw BadParameter("power requires p > 1");
            Nonlinearity n(name,
                           [p](double t) { return std::pow(1.0 + t, p); },
                           [p](double t) { return p * std::pow(1.0 + t, p - 1.0); },
                           [p](double t) { return p * (p - 1.0) * std::pow(1.0 + t, p - 2.0); },
                           [p](double t) { return (std::pow(1.0 + t, p + 1.0) - 1.0) / (p + 1.0); });
            n.params_["p"] = p;
            n.analytic_beta_ = BetaPair{p / (p + 1.0), p / (p + 1.0), false};
            return n;
        }
        if (name == "example_1_1") {
            Nonlinearity n(name,
                           [](double t) { return t * t + 3.0 * t + 3.0 * std::cos(t) + 4.0; },
                           [](double t) { return 2.0 * t + 3.0 - 3.0 * std::sin(t); },
                           [](double t) { return 2.0 - 3.0 * std::cos(t); },
                           [](double t) {
                               return t * t * t / 3.0 + 1.5 * t * t + 3.0 * std::sin(t) + 4.0 * t;
                           });
            n.analytic_beta_ = BetaPair{2.0 / 3.0, 2.0 / 3.0, false};
            return n;
        }
        if (name == "example_1_2") {
            Nonlinearity n(name,
                           [](double t) { return std::exp(t) * (3.0 + 2.0 * std::cos(t)); },
                           [](double t) {
                               return std::exp(t) * (3.0 + 2.0 * std::cos(t) - 2.0 * std::sin(t));
                           },
                           [](double t) { return std::exp(t) * (3.0 - 4.0 * std::sin(t)); },
                           [](double t) {
                               return std::exp(t) * (3.0 + std::cos(t) + std::sin(t)) - 4.0;
                           });
            // limits quoted in the source, based on its misprinted f'
            n.analytic_beta_ = BetaPair{0.786244, 2.08846, true};
            n.paper_beta_ = [](double u) {
                const double c = std::cos(u), s = std::sin(u);
                return (3.0 + 2.0 * c - s) * (3.0 + c + s) / ((3.0 + 2.0 * c) * (3.0 + 2.0 * c));
            };
            return n;
        }
        throw UnknownName("unknown builtin nonlinearity '" + name + "'");
    }

    static Nonlinearity from_expression(const std::string& text, double quad_tol = 1e-12) {
        ScalarExpression e(text);
        auto F = std::make_shared<CachedAntiderivative>(
            [e](double s) { return e(s); }, 0.0, quad_tol);
        Nonlinearity n("expr:" + e.print(),
                       [e](double t) { return e(t); },
                       [e](double t) { return e.derivative(t); },
                       [e](double t) { return e.second_derivative(t); },
                       [F](double t) { return (*F)(t); });
        return n;
    }

    // --- hypothesis (H): f(0) > 0, f nondecreasing, superlinear growth ----
    HypothesisReport validate_hypothesis_H(double t_max, int samples = 512) const {
        if (!(t_max > 0.0) || samples < 8) throw BadParameter("bad hypothesis scan range");
        HypothesisReport rep;
        rep.f0 = eval_f(0.0);
        rep.f0_positive = rep.f0 > 0.0;
        const double tol = 1e-12;
        for (int i = 0; i <= samples; ++i) {
            const double t = t_max * i / samples;
            const double fp = eval_fprime(t);
            if (fp < -tol * std::max(1.0, std::abs(eval_f(t))))
                rep.monotonicity_violations.push_back(t);
        }
        const double thi = t_max, tlo = t_max / 10.0;
        rep.trend_ratio = (eval_f(thi) / thi) / (eval_f(tlo) / tlo);
        rep.superlinear_trend = rep.trend_ratio > 1.0;
        return rep;
    }

private:
    static void check_domain(double t) {
        if (!(t >= 0.0)) throw DomainError("nonlinearity domain is t >= 0");
    }

    std::string name_;
    std::map<std::string, double> params_;
    Fn f_, fp_, fpp_, F_;
    std::optional<BetaPair> analytic_beta_;
    Fn paper_beta_;
};

}  // namespace extremal
