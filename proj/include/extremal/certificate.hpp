#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "errors.hpp"
#include "nonlinearity.hpp"
#include "quadrature.hpp"

namespace extremal {

// Proof objects of Lemma 2.1 / Proposition 2.1: a test function xi with
//   xi <= f'/f  and  xi' + xi^2 >= 0  on [t0, inf),
// its exponential weight g, G = int (g')^2, and the energies H, E.

enum class XiKind { thm11, thm12_half };

// t0 selection: smallest grid point after which beta(t) stays inside
// (beta1, beta3) for a full decade.  The source only posits existence of t0;
// this makes (3.1) checkable.
inline std::optional<double> select_t0(const Nonlinearity& nl, double beta1, double beta3,
                                       double t_lo, double t_hi, int samples_per_decade = 64) {
    if (!(0.0 < t_lo && t_lo < t_hi && beta1 < beta3)) throw BadParameter("bad select_t0 range");
    const double decades = std::log10(t_hi / t_lo);
    const int m = std::max(16, static_cast<int>(std::ceil(decades * samples_per_decade)));
    std::vector<double> ts(m + 1), ok(m + 1);
    for (int j = 0; j <= m; ++j) {
        ts[j] = t_lo * std::pow(t_hi / t_lo, static_cast<double>(j) / m);
        const double b = beta_at(nl, ts[j]);
        ok[j] = (beta1 < b && b < beta3) ? 1.0 : 0.0;
    }
    for (int j = 0; j <= m; ++j) {
        if (!ok[j]) continue;
        if (ts[j] * 10.0 > t_hi) break;  // cannot certify a full decade
        bool clean = true;
        for (int k = j; k <= m && ts[k] <= 10.0 * ts[j]; ++k)
            if (!ok[k]) {
                clean = false;
                break;
            }
        if (clean) return ts[j];
    }
    return std::nullopt;
}

// xi(t) = c f/F with c = beta1 (thm11) or c = 1/2 (thm12_half).  Both give
//   xi' + xi^2 = c f'/F - c(1-c) (f/F)^2.
class TestFunctionXi {
public:
    // thm11: construction validates xi <= f'/f (i.e. beta(t) >= beta1) and
    // xi' + xi^2 >= 0 on a geometric grid over [t0, validate_t_max] and
    // throws PreconditionViolated at the first offending sample.
    static TestFunctionXi thm11(Nonlinearity nl, double beta1, double t0,
                                double validate_t_max, int samples = 256) {
        if (!(0.5 < beta1 && beta1 < 1.0))
            throw BadParameter("thm11 requires 1/2 < beta1 < 1");
        TestFunctionXi xi(std::move(nl), XiKind::thm11, beta1, t0);
        xi.validate(validate_t_max, samples, /*throwing=*/true);
        return xi;
    }

    // thm12_half: the same scan only records witnesses (the sign identity
    // (3.8) makes xi' + xi^2 < 0 exactly where beta < 1/2, which is a
    // reportable fact rather than a construction error).
    static TestFunctionXi thm12_half(Nonlinearity nl, double t0, double validate_t_max,
                                     int samples = 256) {
        TestFunctionXi xi(std::move(nl), XiKind::thm12_half, 0.5, t0);
        xi.validate(validate_t_max, samples, /*throwing=*/false);
        return xi;
    }

    XiKind kind() const noexcept { return kind_; }
    double coefficient() const noexcept { return c_; }
    double t0() const noexcept { return t0_; }
    const Nonlinearity& nonlinearity() const noexcept { return nl_; }

    double xi(double t) const {
        const double F = nl_.eval_F(t);
        if (!(F > 0.0)) throw DomainError("xi needs F(t) > 0");
        return c_ * nl_.eval_f(t) / F;
    }
    double xi_prime(double t) const {
        const double F = nl_.eval_F(t);
        if (!(F > 0.0)) throw DomainError("xi' needs F(t) > 0");
        const double r = nl_.eval_f(t) / F;
        return c_ * (nl_.eval_fprime(t) / F - r * r);
    }
    // xi' + xi^2 in closed form (cancellation-free compared with summing the two)
    double discriminant(double t) const {
        const double F = nl_.eval_F(t);
        if (!(F > 0.0)) throw DomainError("discriminant needs F(t) > 0");
        const double r = nl_.eval_f(t) / F;
        return c_ * nl_.eval_fprime(t) / F - c_ * (1.0 - c_) * r * r;
    }

    // sample points where xi > f'/f or xi' + xi^2 < 0 (thm12_half records
    // these instead of throwing)
    const std::vector<double>& violation_witnesses() const noexcept { return violations_; }

private:
    TestFunctionXi(Nonlinearity nl, XiKind kind, double c, double t0)
        : nl_(std::move(nl)), kind_(kind), c_(c), t0_(t0) {
        if (!(t0 > 0.0)) throw BadParameter("t0 must be positive");
    }

    void validate(double t_max, int samples, bool throwing) {
        if (!(t_max > t0_)) throw BadParameter("validate_t_max must exceed t0");
        // xi <= f'/f realizes the limit requirement beta1 < beta_minus, so
        // it is enforced on the tail decade only; xi' + xi^2 >= 0 is needed
        // globally (it sits under a square root).
        const double tail_from = std::max(t0_, t_max / 10.0);
        for (int j = 0; j <= samples; ++j) {
            const double t = t0_ * std::pow(t_max / t0_, static_cast<double>(j) / samples);
            const double f = nl_.eval_f(t);
            const double slack = 1e-12 * std::max(1.0, std::abs(nl_.eval_fprime(t) / f));
            const bool upper_ok = xi(t) <= nl_.eval_fprime(t) / f + slack;
            const double d = discriminant(t);
            const double dscale = std::abs(xi_prime(t)) + xi(t) * xi(t);
            const bool disc_ok = d >= -1e-14 * dscale;
            if (!disc_ok && throwing)
                throw PreconditionViolated(
                    "construction grid violates xi' + xi^2 >= 0 at t = " + std::to_string(t), t);
            if (!upper_ok && throwing && t >= tail_from)
                throw PreconditionViolated(
                    "construction grid violates xi <= f'/f (beta(t) < beta1) at t = " +
                        std::to_string(t),
                    t);
            if (!upper_ok || !disc_ok) violations_.push_back(t);
        }
    }

    Nonlinearity nl_;
    XiKind kind_;
    double c_;
    double t0_;
    std::vector<double> violations_;
};

struct FirstIntegralReport {
    double max_residual = 0.0;
    double argmax_t = 0.0;
    double C0 = 0.0;
    int samples = 0;
};

struct CertificateProfile {
    std::vector<double> t, xi, xi_prime, g, g_prime, G, H, E;
    double C0 = 0.0;
    double first_integral_residual = 0.0;  // max |G - xi g^2 - C0| / max(1, |G|), pointwise
    double he_identity_residual = 0.0;     // max |H - E + C0 f| / max(1, |E|), pointwise
};

// Evaluates g, G, H, E for any xi-like pair of callables; TestFunctionXi
// supplies the closed forms, and tests substitute perturbed callables as
// negative controls.
class CertificateEngine {
public:
    using Fn = std::function<double(double)>;

    CertificateEngine(Nonlinearity nl, Fn xi, Fn xi_prime, double t0, double quad_tol = 1e-10)
        : nl_(std::move(nl)), xi_(std::move(xi)), xip_(std::move(xi_prime)), t0_(t0) {
        if (!(t0 > 0.0)) throw BadParameter("t0 must be positive");
        auto xi_c = xi_;
        auto xip_c = xip_;
        log_g_ = std::make_shared<CachedAntiderivative>(
            [xi_c, xip_c](double s) { return xi_c(s) + sqrt_disc(xi_c, xip_c, s); }, t0,
            quad_tol);
        auto lg = log_g_;
        big_g_ = std::make_shared<CachedAntiderivative>(
            [xi_c, xip_c, lg](double s) {
                const double w = xi_c(s) + sqrt_disc(xi_c, xip_c, s);
                const double g = std::exp((*lg)(s));
                return w * w * g * g;
            },
            t0, quad_tol);
    }

    explicit CertificateEngine(const TestFunctionXi& xi, double quad_tol = 1e-10)
        : CertificateEngine(xi.nonlinearity(), [xi](double t) { return xi.xi(t); },
                            [xi](double t) { return xi.xi_prime(t); }, xi.t0(), quad_tol) {}

    double t0() const noexcept { return t0_; }
    const Nonlinearity& nonlinearity() const noexcept { return nl_; }

    double xi_at(double t) const { return xi_(t); }
    double xi_prime_at(double t) const { return xip_(t); }

    double g_at(double t) const {
        check_range(t);
        return std::exp((*log_g_)(t));
    }
    double g_prime_at(double t) const {
        check_range(t);
        return (xi_(t) + sqrt_disc(xi_, xip_, t)) * g_at(t);
    }
    double G_at(double t) const {
        check_range(t);
        return (*big_g_)(t);
    }
    double C0() const { return -xi_(t0_); }  // G(t0) - xi(t0) g(t0)^2 with G(t0)=0, g(t0)=1

    double H_at(double t) const {
        const double g = g_at(t);
        return g * g * nl_.eval_fprime(t) - G_at(t) * nl_.eval_f(t);
    }
    double E_at(double t) const {
        const double g = g_at(t);
        return g * g * (nl_.eval_fprime(t) - xi_(t) * nl_.eval_f(t));
    }

    // Eq (2.6): G(t) = xi(t) g(t)^2 + C0
    FirstIntegralReport verify_first_integral(double t_max, int samples = 256) const {
        if (!(t_max > t0_)) throw BadParameter("t_max must exceed t0");
        FirstIntegralReport rep;
        rep.C0 = C0();
        rep.samples = samples + 1;
        for (int j = 0; j <= samples; ++j) {
            const double t = t0_ * std::pow(t_max / t0_, static_cast<double>(j) / samples);
            const double G = G_at(t);
            const double g = g_at(t);
            const double r = std::abs(G - xi_(t) * g * g - rep.C0) / std::max(1.0, std::abs(G));
            if (r > rep.max_residual) {
                rep.max_residual = r;
                rep.argmax_t = t;
            }
        }
        return rep;
    }

    CertificateProfile profile(double t_max, int samples = 256) const {
        if (!(t_max > t0_)) throw BadParameter("t_max must exceed t0");
        CertificateProfile p;
        p.C0 = C0();
        for (int j = 0; j <= samples; ++j) {
            const double t = t0_ * std::pow(t_max / t0_, static_cast<double>(j) / samples);
            const double g = g_at(t), G = G_at(t), H = H_at(t), E = E_at(t);
            p.t.push_back(t);
            p.xi.push_back(xi_(t));
            p.xi_prime.push_back(xip_(t));
            p.g.push_back(g);
            p.g_prime.push_back(g_prime_at(t));
            p.G.push_back(G);
            p.H.push_back(H);
            p.E.push_back(E);
            const double r1 =
                std::abs(G - xi_(t) * g * g - p.C0) / std::max(1.0, std::abs(G));
            const double r2 = std::abs(H - E + p.C0 * nl_.eval_f(t)) / std::max(1.0, std::abs(E));
            p.first_integral_residual = std::max(p.first_integral_residual, r1);
            p.he_identity_residual = std::max(p.he_identity_residual, r2);
        }
        return p;
    }

private:
    static double sqrt_disc(const Fn& xi, const Fn& xip, double t) {
        const double d = xip(t) + xi(t) * xi(t);
        if (d >= 0.0) return std::sqrt(d);
        const double scale = std::abs(xip(t)) + xi(t) * xi(t);
        if (d >= -1e-14 * scale) return 0.0;  // closed-form cancellation noise
        throw NegativeDiscriminant(t, d);
    }
    void check_range(double t) const {
        if (!(t >= t0_)) throw DomainError("certificate functions are defined for t >= t0");
    }

    Nonlinearity nl_;
    Fn xi_, xip_;
    double t0_;
    std::shared_ptr<CachedAntiderivative> log_g_;
    std::shared_ptr<CachedAntiderivative> big_g_;
};

// ---- the section-3 growth chain ------------------------------------------

struct ChainCheck {
    bool holds = true;
    std::optional<double> witness_t;  // first failing sample
    double min_margin = std::numeric_limits<double>::infinity();  // log-space for the bounds
    double argmin_t = 0.0;
};

struct ChainReport {
    double beta1 = 0.0, beta3 = 0.0, t0 = 0.0, t_max = 0.0;
    double gamma = 0.0;           // exponent of (3.5)
    double c_3_3 = 0.0, c_3_4 = 0.0, c_3_5 = 0.0;  // constants fitted at t0 (log space)
    ChainCheck ineq_3_2_lower;    // xi' + xi^2 >= (2b1 - 1) f'/F
    ChainCheck ineq_3_2_upper;    // (2b1 - 1) f'/F >= ((2b1 - 1)/b3) (f'/f)^2
    ChainCheck ineq_3_3;          // E >= C F^{2b1-1} f^{2 + 2 sqrt(q)}
    ChainCheck ineq_3_4;          // F >= C f^{1/b3}
    ChainCheck ineq_3_5;          // E >= C f^gamma
    ChainCheck h_nonneg;          // H >= 0 from t1 onward
    double t1_h_nonneg = 0.0;     // first sample from which H stays >= 0
    // E/f -> infinity is certified by strictly increasing minima over dyadic
    // log windows; pointwise monotonicity is reported too but fails forever
    // for oscillatory entries (the periodic beta dip always beats the g^2
    // growth on one period), so it does not gate all_hold().
    ChainCheck e_over_f_nondecreasing;
    bool e_over_f_window_mins_increasing = false;
    double e_over_f_growth = 0.0;  // (E/f)(t_max) / (E/f)(t0)
    bool all_hold() const {
        return ineq_3_2_lower.holds && ineq_3_2_upper.holds && ineq_3_3.holds &&
               ineq_3_4.holds && ineq_3_5.holds && h_nonneg.holds &&
               e_over_f_window_mins_increasing;
    }
};

namespace detail {

inline void chain_update(ChainCheck& c, double margin, double t) {
    if (margin < c.min_margin) {
        c.min_margin = margin;
        c.argmin_t = t;
    }
    if (margin < 0.0 && c.holds) {
        c.holds = false;
        c.witness_t = t;
    }
}

}  // namespace detail

// Verifies (3.2)-(3.5) for a thm11 test function, with the constants of
// (3.3)-(3.5) fitted at t0 and the inequalities then checked in log space.
// Throws PreconditionViolated where beta(t) leaves (beta1, beta3) -- that is
// hypothesis (3.1).
inline ChainReport verify_growth_chain(const TestFunctionXi& xi, double beta3, double t_max,
                                       int samples = 512, double quad_tol = 1e-10) {
    if (xi.kind() != XiKind::thm11)
        throw BadParameter("verify_growth_chain needs a thm11 test function");
    const double b1 = xi.coefficient();
    if (!(beta3 > b1)) throw BadParameter("beta3 must exceed beta1");
    const double t0 = xi.t0();
    if (!(t_max > t0)) throw BadParameter("t_max must exceed t0");
    const Nonlinearity& nl = xi.nonlinearity();

    std::vector<double> ts(samples + 1);
    for (int j = 0; j <= samples; ++j) {
        ts[j] = t0 * std::pow(t_max / t0, static_cast<double>(j) / samples);
        const double b = beta_at(nl, ts[j]);
        if (!(b1 < b && b < beta3))
            throw PreconditionViolated("(3.1) fails: beta(t) = " + std::to_string(b) +
                                           " outside (" + std::to_string(b1) + ", " +
                                           std::to_string(beta3) + ") at t = " +
                                           std::to_string(ts[j]),
                                       ts[j]);
    }

    CertificateEngine eng(xi, quad_tol);
    ChainReport rep;
    rep.beta1 = b1;
    rep.beta3 = beta3;
    rep.t0 = t0;
    rep.t_max = t_max;
    const double q = (2.0 * b1 - 1.0) / beta3;
    rep.gamma = 2.0 + q + 2.0 * std::sqrt(q);
    const double p33 = 2.0 + 2.0 * std::sqrt(q);

    // constants fitted at the left endpoint (log space)
    const double E0 = eng.E_at(t0), F0 = nl.eval_F(t0), f0 = nl.eval_f(t0);
    rep.c_3_3 = std::log(E0) - (2.0 * b1 - 1.0) * std::log(F0) - p33 * std::log(f0);
    rep.c_3_4 = std::log(F0) - std::log(f0) / beta3;
    rep.c_3_5 = std::log(E0) - rep.gamma * std::log(f0);

    const double log_slack = 1e-9;
    double prev_eof = -1.0;
    int last_h_negative = -1;
    std::vector<double> eof_samples(samples + 1);
    for (int j = 0; j <= samples; ++j) {
        const double t = ts[j];
        const double f = nl.eval_f(t), fp = nl.eval_fprime(t), F = nl.eval_F(t);
        const double disc = xi.discriminant(t);
        detail::chain_update(rep.ineq_3_2_lower, disc - (2.0 * b1 - 1.0) * fp / F, t);
        detail::chain_update(rep.ineq_3_2_upper,
                             (2.0 * b1 - 1.0) * fp / F - q * (fp / f) * (fp / f), t);
        const double logE = std::log(eng.E_at(t));
        detail::chain_update(
            rep.ineq_3_3,
            logE - (rep.c_3_3 + (2.0 * b1 - 1.0) * std::log(F) + p33 * std::log(f)) + log_slack,
            t);
        detail::chain_update(rep.ineq_3_4,
                             std::log(F) - (rep.c_3_4 + std::log(f) / beta3) + log_slack, t);
        detail::chain_update(rep.ineq_3_5, logE - (rep.c_3_5 + rep.gamma * std::log(f)) + log_slack,
                             t);
        if (eng.H_at(t) < 0.0) last_h_negative = j;
        const double eof = eng.E_at(t) / f;
        eof_samples[j] = eof;
        if (prev_eof >= 0.0)
            detail::chain_update(rep.e_over_f_nondecreasing, eof - prev_eof * (1.0 - 1e-12), t);
        prev_eof = eof;
    }
    {
        const int nw = 8;
        std::vector<double> wmin(nw, std::numeric_limits<double>::infinity());
        for (int j = 0; j <= samples; ++j)
            wmin[std::min(nw - 1, j * nw / (samples + 1))] =
                std::min(wmin[std::min(nw - 1, j * nw / (samples + 1))], eof_samples[j]);
        rep.e_over_f_window_mins_increasing = true;
        for (int w = 1; w < nw; ++w)
            if (!(wmin[w] > wmin[w - 1])) rep.e_over_f_window_mins_increasing = false;
    }
    // t1 of Lemma 2.1's hypothesis (2.1): first sample from which H stays >= 0
    rep.h_nonneg.holds = last_h_negative < samples;
    rep.t1_h_nonneg = last_h_negative < 0 ? t0 : ts[std::min(last_h_negative + 1, samples)];
    if (!rep.h_nonneg.holds) rep.h_nonneg.witness_t = ts[last_h_negative];
    rep.e_over_f_growth = (eng.E_at(t_max) / nl.eval_f(t_max)) / (eng.E_at(t0) / nl.eval_f(t0));
    return rep;
}

}  // namespace extremal
