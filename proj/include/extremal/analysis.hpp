#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "nonlinearity.hpp"

namespace extremal {

// ---- pointwise indicators -------------------------------------------------

// beta(t) = f'(t) F(t) / f(t)^2, the indicator of (1.4)
inline double beta_at(const Nonlinearity& nl, double t) {
    const double f = nl.eval_f(t);
    if (!(f > 0.0)) throw DomainError("beta_at requires f(t) > 0");
    // ratio form (f'/f)(F/f) postpones overflow to where f itself overflows
    return (nl.eval_fprime(t) / f) * (nl.eval_F(t) / f);
}

// tau(t) = f(t) f''(t) / f'(t)^2, the convexity indicator of (1.3)
inline double tau_at(const Nonlinearity& nl, double t) {
    const double fp = nl.eval_fprime(t);
    if (!(fp > 0.0)) throw DomainError("tau_at requires f'(t) > 0");
    return nl.eval_f(t) * nl.eval_fprime2(t) / (fp * fp);
}

// ---- tail limit estimation ------------------------------------------------

enum class TailFlag { converged, oscillatory_periodic, inconclusive };

inline const char* to_string(TailFlag f) {
    switch (f) {
        case TailFlag::converged: return "converged";
        case TailFlag::oscillatory_periodic: return "oscillatory_periodic";
        case TailFlag::inconclusive: return "inconclusive";
    }
    return "?";
}

struct TailWindow {
    double t_lo = 0.0, t_hi = 0.0;
    double min = 0.0, max = 0.0;
};

struct BetaEstimate {
    double beta_minus = 0.0;
    double beta_plus = 0.0;
    std::pair<double, double> window{0.0, 0.0};  // final tail window
    int sample_count = 0;
    TailFlag convergence_flag = TailFlag::inconclusive;
    std::vector<TailWindow> tail_history;  // oldest first, last = final window
    bool overflow_guard = false;           // range truncated before t_end
};

namespace detail {

// Shared tail machinery for beta and tau: sample `ind` on a geometric grid,
// truncate at the first non-finite value (overflow guard), then compare the
// last three dyadic windows.
template <class Indicator>
BetaEstimate estimate_tail_limits(Indicator&& ind, double t_start, double t_end,
                                  int samples_per_decade) {
    if (!(0.0 < t_start && t_start < t_end)) throw BadParameter("need 0 < t_start < t_end");
    if (samples_per_decade < 16) throw BadParameter("samples_per_decade must be >= 16");

    BetaEstimate est;
    std::vector<double> ts, vals;
    const double decades = std::log10(t_end / t_start);
    const int m = std::max(3, static_cast<int>(std::ceil(decades * samples_per_decade)));
    for (int j = 0; j <= m; ++j) {
        const double t = t_start * std::pow(t_end / t_start, static_cast<double>(j) / m);
        double v;
        try {
            v = ind(t);
        } catch (const DomainError&) {
            est.overflow_guard = true;
            break;
        }
        if (!std::isfinite(v)) {
            est.overflow_guard = true;
            break;
        }
        ts.push_back(t);
        vals.push_back(v);
    }
    if (ts.size() < 8)
        throw PreconditionViolated("tail estimation has fewer than 8 usable samples");
    est.sample_count = static_cast<int>(ts.size());
    const double T = ts.back();

    // Dyadic windows [T/2^{k+1}, T/2^k]; when the sampled span is shorter
    // than a factor of 8 these would underflow t_start, so fall back to
    // equal thirds of the span.
    const bool dyadic = T / 8.0 >= ts.front();
    const double span3 = (T - ts.front()) / 3.0;
    for (int k = 2; k >= 0; --k) {
        TailWindow w;
        if (dyadic) {
            w.t_lo = T / std::pow(2.0, k + 1);
            w.t_hi = T / std::pow(2.0, k);
        } else {
            w.t_lo = ts.front() + (2 - k) * span3;
            w.t_hi = w.t_lo + span3;
        }
        w.min = std::numeric_limits<double>::infinity();
        w.max = -w.min;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (ts[i] >= w.t_lo && ts[i] <= w.t_hi) {
                w.min = std::min(w.min, vals[i]);
                w.max = std::max(w.max, vals[i]);
            }
        }
        if (!std::isfinite(w.min))
            throw PreconditionViolated("empty tail window; increase samples_per_decade");
        est.tail_history.push_back(w);
    }
    const TailWindow& w0 = est.tail_history.back();
    est.beta_minus = w0.min;
    est.beta_plus = w0.max;
    est.window = {w0.t_lo, w0.t_hi};

    // stabilization is judged on the final transition; the earlier window is
    // kept in tail_history for diagnostics
    const TailWindow& w1 = est.tail_history[est.tail_history.size() - 2];
    const double move = std::max(std::abs(w0.min - w1.min), std::abs(w0.max - w1.max));
    const double spread = w0.max - w0.min;
    if (move < 1e-3 && spread < 1e-3)
        est.convergence_flag = TailFlag::converged;
    else if (move < 1e-3)
        est.convergence_flag = TailFlag::oscillatory_periodic;
    else
        est.convergence_flag = TailFlag::inconclusive;
    return est;
}

}  // namespace detail

inline BetaEstimate estimate_beta_limits(const Nonlinearity& nl, double t_start, double t_end,
                                         int samples_per_decade = 32) {
    return detail::estimate_tail_limits([&nl](double t) { return beta_at(nl, t); }, t_start,
                                        t_end, samples_per_decade);
}

struct TauEstimate {
    double tau_minus = 0.0;
    double tau_plus = 0.0;
    TailFlag convergence_flag = TailFlag::inconclusive;
    bool overflow_guard = false;
    // the remark beta_minus >= 1/(2 - tau_minus), checked when tau_minus > 0
    bool relation_checked = false;
    bool relation_holds = false;
    double relation_lhs = 0.0;  // beta_minus used for the check
    double relation_rhs = 0.0;  // 1/(2 - tau_minus)
};

inline TauEstimate estimate_tau_limits(const Nonlinearity& nl, double t_start, double t_end,
                                       int samples_per_decade = 32) {
    BetaEstimate tau = detail::estimate_tail_limits([&nl](double t) { return tau_at(nl, t); },
                                                    t_start, t_end, samples_per_decade);
    TauEstimate est;
    est.tau_minus = tau.beta_minus;
    est.tau_plus = tau.beta_plus;
    est.convergence_flag = tau.convergence_flag;
    est.overflow_guard = tau.overflow_guard;
    if (est.tau_minus > 0.0 && est.tau_minus < 2.0) {
        est.relation_checked = true;
        BetaEstimate beta = estimate_beta_limits(nl, t_start, t_end, samples_per_decade);
        est.relation_lhs = beta.beta_minus;
        est.relation_rhs = 1.0 / (2.0 - est.tau_minus);
        est.relation_holds = est.relation_lhs >= est.relation_rhs - 1e-6;
    }
    return est;
}

// ---- dimension bounds -----------------------------------------------------

// Eq (1.5): n < 4 + 4((2b+ - 1)/(2b+) + sqrt((2b- - 1)/b+))
inline double dim_bound_general(double beta_minus, double beta_plus) {
    if (!(0.5 < beta_minus && beta_minus <= beta_plus && std::isfinite(beta_plus)))
        throw PreconditionViolated("dim_bound_general needs 1/2 < beta_minus <= beta_plus",
                                   beta_minus);
    return 4.0 + 4.0 * ((2.0 * beta_plus - 1.0) / (2.0 * beta_plus) +
                        std::sqrt((2.0 * beta_minus - 1.0) / beta_plus));
}

// Eq (1.6): n < 6 + (4/(2b+ - 1)) (1 - b+ + sqrt(b+ (2b- - 1))), for b+ < 1
inline double dim_bound_subunit(double beta_minus, double beta_plus) {
    if (!(0.5 < beta_minus && beta_minus <= beta_plus && beta_plus < 1.0))
        throw PreconditionViolated("dim_bound_subunit needs 1/2 < beta_minus <= beta_plus < 1",
                                   beta_plus);
    return 6.0 + (4.0 / (2.0 * beta_plus - 1.0)) *
                     (1.0 - beta_plus + std::sqrt(beta_plus * (2.0 * beta_minus - 1.0)));
}

struct GammaExponents {
    double gamma = 0.0;    // (3.5)
    double gamma_1 = 0.0;  // (3.6), normalized so that 2*gamma_1 = dim_bound_general
    std::optional<double> gamma_2;  // present iff beta_3 < 1; 2*gamma_2 = dim_bound_subunit
};

inline GammaExponents gamma_exponents(double beta_1, double beta_3) {
    if (!(0.5 < beta_1 && beta_1 <= beta_3 && std::isfinite(beta_3)))
        throw PreconditionViolated("gamma_exponents needs 1/2 < beta_1 <= beta_3", beta_1);
    GammaExponents g;
    const double q = (2.0 * beta_1 - 1.0) / beta_3;
    g.gamma = 2.0 + q + 2.0 * std::sqrt(q);
    g.gamma_1 = 0.5 * dim_bound_general(beta_1, beta_3);
    if (beta_3 < 1.0) g.gamma_2 = beta_3 / (2.0 * beta_3 - 1.0) * g.gamma_1;
    return g;
}

// ---- pointwise sufficient conditions (1.7), (1.8) -------------------------

struct ConditionReport {
    bool holds = false;
    std::optional<double> witness_t;  // first sample violating the inequality
    double min_margin = 0.0;          // min over samples of lhs - rhs
    double argmin_t = 0.0;
};

namespace detail {

template <class Rhs>
ConditionReport scan_condition(const Nonlinearity& nl, double t0, double t_max, Rhs&& rhs,
                               int samples_per_decade = 64) {
    if (!(0.0 < t0 && t0 < t_max)) throw BadParameter("need 0 < t0 < t_max");
    const double decades = std::log10(t_max / t0);
    const int m = std::max(8, static_cast<int>(std::ceil(decades * samples_per_decade)));
    ConditionReport rep;
    rep.holds = true;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= m; ++j) {
        const double t = t0 * std::pow(t_max / t0, static_cast<double>(j) / m);
        const double margin = beta_at(nl, t) - rhs(t);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.argmin_t = t;
        }
        if (margin < 0.0 && rep.holds) {
            rep.holds = false;
            rep.witness_t = t;
        }
    }
    return rep;
}

}  // namespace detail

// Eq (1.7): beta(t) >= 1/2 + eps t / f(t) on [t0, t_max]
inline ConditionReport check_h1_condition(const Nonlinearity& nl, double epsilon, double t0,
                                          double t_max) {
    if (!(epsilon > 0.0)) throw BadParameter("epsilon must be positive");
    return detail::scan_condition(nl, t0, t_max,
                                  [&](double t) { return 0.5 + epsilon * t / nl.eval_f(t); });
}

// Eq (1.8): beta(t) >= 1/2 + t^{-(2-delta)} on [t0, t_max], plus the
// order-(2-delta) superlinearity premise f(t)/t^{2-delta} -> infinity
// (checked as a growth trend over the last decade).
inline ConditionReport check_linfty_condition(const Nonlinearity& nl, double delta, double t0,
                                              double t_max) {
    if (!(delta > 0.0 && delta <= 1.0)) throw BadParameter("delta must lie in (0, 1]");
    ConditionReport rep = detail::scan_condition(
        nl, t0, t_max, [&](double t) { return 0.5 + std::pow(t, delta - 2.0); });
    const double g_hi = nl.eval_f(t_max) / std::pow(t_max, 2.0 - delta);
    const double g_lo = nl.eval_f(t_max / 10.0) / std::pow(t_max / 10.0, 2.0 - delta);
    if (!(g_hi > g_lo)) {
        if (rep.holds) {
            rep.holds = false;
            rep.witness_t = t_max;
        }
    }
    return rep;
}

// ---- the verdict ----------------------------------------------------------

enum class Conclusion {
    Linfty_by_1_5,
    Linfty_by_1_6,
    Linfty_by_cor_a,
    Linfty_by_cor_b,
    H1_only,
    Unknown
};

inline const char* to_string(Conclusion c) {
    switch (c) {
        case Conclusion::Linfty_by_1_5: return "Linfty_by_1_5";
        case Conclusion::Linfty_by_1_6: return "Linfty_by_1_6";
        case Conclusion::Linfty_by_cor_a: return "Linfty_by_cor_a";
        case Conclusion::Linfty_by_cor_b: return "Linfty_by_cor_b";
        case Conclusion::H1_only: return "H1_only";
        case Conclusion::Unknown: return "Unknown";
    }
    return "?";
}

inline bool is_linfty(Conclusion c) {
    return c == Conclusion::Linfty_by_1_5 || c == Conclusion::Linfty_by_1_6 ||
           c == Conclusion::Linfty_by_cor_a || c == Conclusion::Linfty_by_cor_b;
}

struct RegularityVerdict {
    double n = 0.0;
    double beta_minus = 0.0;
    double beta_plus = 0.0;
    double bound_general = std::numeric_limits<double>::quiet_NaN();
    std::optional<double> bound_subunit;
    Conclusion conclusion = Conclusion::Unknown;
    std::string notes;
};

namespace detail {

inline RegularityVerdict classify_impl(double n, double bm, double bp, bool beta_equal) {
    RegularityVerdict v;
    v.n = n;
    v.beta_minus = bm;
    v.beta_plus = bp;
    std::ostringstream notes;
    const bool admissible = 0.5 < bm && bm <= bp && std::isfinite(bp);
    if (admissible) {
        v.bound_general = dim_bound_general(bm, bp);
        if (bp < 1.0) v.bound_subunit = dim_bound_subunit(bm, bp);
    } else {
        notes << "bounds (1.5)/(1.6) not evaluable (need 1/2 < beta_minus <= beta_plus); ";
    }
    // rules in order; strict n < bound with no tolerance band
    if (admissible && n < v.bound_general) {
        v.conclusion = Conclusion::Linfty_by_1_5;
        notes << "n = " << n << " < " << v.bound_general << " = bound (1.5)";
    } else if (admissible && v.bound_subunit && n < *v.bound_subunit) {
        v.conclusion = Conclusion::Linfty_by_1_6;
        notes << "n = " << n << " < " << *v.bound_subunit << " = bound (1.6)";
    } else if (n <= 6.0) {
        v.conclusion = Conclusion::Linfty_by_cor_a;
        notes << "n = " << n << " <= 6";
    } else if ((beta_equal || bp < 0.7) && n <= 9.0) {
        v.conclusion = Conclusion::Linfty_by_cor_b;
        notes << "n = " << n << " <= 9 with "
              << (beta_equal ? "beta_minus = beta_plus" : "beta_plus < 7/10");
    } else if (bm > 0.5) {
        v.conclusion = Conclusion::H1_only;
        notes << "beta_minus = " << bm << " > 1/2: H1 bound only";
        if (std::isfinite(v.bound_general))
            notes << " (n = " << n << " not below bound " << v.bound_general << ")";
    } else {
        v.conclusion = Conclusion::Unknown;
        notes << "no rule applies";
    }
    v.notes = notes.str();
    return v;
}

}  // namespace detail

inline RegularityVerdict classify_regularity(double n, double beta_minus, double beta_plus) {
    return detail::classify_impl(n, beta_minus, beta_plus,
                                 std::abs(beta_plus - beta_minus) <= 1e-6);
}

// Numeric-estimate overload: the corollary (b) equality test is conservative
// and accepts only a converged estimate (the corollary is discontinuous in
// its hypothesis).
inline RegularityVerdict classify_regularity(double n, const BetaEstimate& est) {
    return detail::classify_impl(n, est.beta_minus, est.beta_plus,
                                 est.convergence_flag == TailFlag::converged);
}

}  // namespace extremal
