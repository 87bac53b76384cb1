#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace extremal {

// Adaptive Gauss-Kronrod (G7,K15) integration.  Node/weight constants are the
// QUADPACK dqk15 values.

namespace gk {

inline constexpr double xgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr double wgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

// One K15 panel on [a,b]; returns {K15, |K15-G7|}.
template <class F>
std::pair<double, double> panel(F&& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    const double fc = f(c);
    double resg = wg[3] * fc;
    double resk = wgk[7] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * xgk[j];
        const double fsum = f(c - x) + f(c + x);
        resk += wgk[j] * fsum;
        if (j % 2 == 1) resg += wg[(j - 1) / 2] * fsum;
    }
    return {h * resk, h * std::abs(resk - resg)};
}

}  // namespace gk

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
};

// Adaptive bisection.  A panel is accepted when its K15-G7 discrepancy fits
// inside its share of the absolute budget or hits the relative floor (a few
// ulps of the panel value); otherwise it is split, down to max_depth levels.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double abs_tol = 1e-12,
                                    int max_depth = 48) {
    if (!(abs_tol > 0.0)) throw BadParameter("abs_tol must be positive");
    QuadratureResult total;
    if (a == b) return total;
    const double sign = (b >= a) ? 1.0 : -1.0;
    if (sign < 0) std::swap(a, b);
    const double whole = b - a;
    const double eps = std::numeric_limits<double>::epsilon();

    struct Item {
        double a, b;
        int depth;
    };
    std::vector<Item> stack{{a, b, 0}};
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        auto [val, err] = gk::panel(f, it.a, it.b);
        if (!std::isfinite(val))
            throw QuadratureFailure("non-finite integrand on [" + std::to_string(it.a) + ", " +
                                    std::to_string(it.b) + "]");
        // the relative floor must sit above the noise in |K15-G7| coming from
        // the 15-digit weight tables (~3.5e-15 relative); 50 eps is the
        // conventional choice
        const double budget = std::max(abs_tol * (it.b - it.a) / whole, 50.0 * eps * std::abs(val));
        if (err <= budget || it.depth >= max_depth) {
            if (err > budget)
                throw QuadratureFailure("adaptive refinement exhausted at depth " +
                                        std::to_string(it.depth) + " near t = " +
                                        std::to_string(0.5 * (it.a + it.b)));
            total.value += val;
            total.error_estimate += err;
            ++total.panels;
        } else {
            const double m = 0.5 * (it.a + it.b);
            stack.push_back({m, it.b, it.depth + 1});
            stack.push_back({it.a, m, it.depth + 1});
        }
    }
    total.value *= sign;
    return total;
}

// Antiderivative t -> integral of f from t0 to t with checkpoint reuse, so a
// monotone scan of queries costs O(total span), not O(span^2).  Thread safe.
class CachedAntiderivative {
public:
    CachedAntiderivative() = default;
    CachedAntiderivative(std::function<double(double)> f, double t0, double abs_tol = 1e-12)
        : f_(std::move(f)), t0_(t0), abs_tol_(abs_tol) {
        cache_[t0] = 0.0;
    }

    double operator()(double t) const {
        std::lock_guard<std::mutex> lock(mutex_);
        // nearest checkpoint (integrating backwards is fine, the integral is signed)
        auto hi = cache_.upper_bound(t);
        auto near = hi;
        if (hi == cache_.end()) {
            near = std::prev(hi);
        } else if (hi != cache_.begin()) {
            auto lo = std::prev(hi);
            near = (t - lo->first <= hi->first - t) ? lo : hi;
        }
        double base_t = near->first;
        double acc = near->second;
        // long jumps are chunked so every segment becomes a checkpoint
        const double chunk = 1.0;
        while (std::abs(t - base_t) > chunk) {
            double next = base_t + (t > base_t ? chunk : -chunk);
            acc += integrate_adaptive(f_, base_t, next, abs_tol_ * chunk).value;
            cache_[next] = acc;
            base_t = next;
        }
        if (t != base_t)
            acc += integrate_adaptive(f_, base_t, t, abs_tol_ * std::max(std::abs(t - base_t), 1e-3)).value;
        return acc;
    }

    double origin() const noexcept { return t0_; }
    std::size_t checkpoint_count() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return cache_.size();
    }

private:
    std::function<double(double)> f_;
    double t0_ = 0.0;
    double abs_tol_ = 1e-12;
    mutable std::map<double, double> cache_;
    mutable std::mutex mutex_;
};

}  // namespace extremal
