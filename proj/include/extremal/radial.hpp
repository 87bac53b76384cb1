#pragma once

// Radial solver for  -u'' - (n-1)/r u' = lambda f(u)  on (0,1),
// u'(0) = 0, u(1) = 0, with natural (lambda-stepping) continuation
// along the minimal branch, fold bracketing and linearized stability.
//
// Discretization notes:
//  * uniform grid r_i = i h, h = 1/(N-1); second-order central
//    differences in the interior;
//  * at r = 0 the symmetric limit of the operator is -n u''(0), so the
//    first row uses -2n (u_1 - u_0)/h^2 (u_{-1} = u_1 by evenness);
//  * Newton works on the h^2-scaled residual, so newton_tol is a
//    grid-size-independent nodal defect measure;
//  * the linearized operator is symmetrized with the finite-volume
//    weights v_i ~ r_i^{n-1} (fractional n works the same way), which
//    makes the eigenproblem exactly self-adjoint on the grid.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expression.hpp"
#include "nonlinearity.hpp"
#include "quadrature.hpp"
#include "certificate.hpp"

namespace extremal {

/// The radial problem on the unit ball: nonlinearity, (real) dimension,
/// grid resolution.  n >= 1 may be fractional; N >= 64 nodes.
struct RadialProblem {
    Nonlinearity nl;
    double n = 2.0;
    int N = 2049;

    RadialProblem(Nonlinearity nonlin, double dim, int nodes)
        : nl(std::move(nonlin)), n(dim), N(nodes) {
        if (!(n >= 1.0) || !std::isfinite(n))
            throw BadParameter("RadialProblem: dimension n must be >= 1");
        if (N < 64)
            throw BadParameter("RadialProblem: need at least 64 grid nodes");
    }

    double h() const { return 1.0 / (N - 1); }
    double r(int i) const { return i * h(); }
};

/// Knobs for newton_solve / continue_branch.  lambda_initial == 0 means
/// "pick automatically": 1e-3 * mu_hat / f'(0) with mu_hat the first
/// Dirichlet eigenvalue of the discrete radial Laplacian.
struct ContinuationConfig {
    double lambda_initial = 0.0;
    double lambda_initial_step = 0.2;
    double lambda_min_step = 1e-4;
    double newton_tol = 1e-10;     // on the h^2-scaled residual
    int newton_max_iter = 50;
    double sup_norm_cap = 50.0;
    double eigen_tol = 1e-8;
    double lambda_cap = 1e4;
    double du_cap = 4.0;           // sup-norm cap on a single Newton update
    double fold_mu_ratio = 0.08;   // mu1 decay required to call a fold
    double step_growth = 1.5;
    double max_step_factor = 4.0;  // step never exceeds this * initial_step
};

/// One converged point of the branch.
struct SolutionPoint {
    double lambda = 0.0;
    std::vector<double> u;         // length N, u[N-1] == 0
    double sup_norm = 0.0;
    double mu1 = 0.0;              // smallest eigenvalue of the linearization
    double residual = 0.0;         // max nodal defect (h^2-scaled)
    double dirichlet_energy = 0.0; // int |u'|^2 r^{n-1}
    double uf_integral = 0.0;      // int u f(u) r^{n-1}
    std::map<std::string, double> tracked_norms;
};

enum class Termination { fold, sup_norm_cap, lambda_cap, failure };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::fold: return "fold";
        case Termination::sup_norm_cap: return "sup_norm_cap";
        case Termination::lambda_cap: return "lambda_cap";
        case Termination::failure: return "failure";
    }
    return "?";
}

/// Continuation output: points ordered by strictly increasing lambda.
/// lambda_star_bracket = (largest converged lambda, smallest failed
/// lambda); the second entry is +inf if no step ever failed.
struct Branch {
    std::vector<SolutionPoint> points;
    std::pair<double, double> lambda_star_bracket{
        0.0, std::numeric_limits<double>::infinity()};
    bool fold_detected = false;
    Termination termination = Termination::failure;
    std::string note;

    double lambda_star() const {
        return 0.5 * (lambda_star_bracket.first + lambda_star_bracket.second);
    }
    double mu1_max() const {
        double m = 0.0;
        for (const auto& p : points) m = std::max(m, p.mu1);
        return m;
    }
};

namespace detail {

// Nonlinearity access for solver internals.  Transient Newton iterates
// may poke slightly below t = 0; evaluating at max(t, 0) keeps the
// domain guard of Nonlinearity intact without derailing the iteration.
// A *converged* iterate is still required to be nonnegative (see
// newton_solve), so clamping cannot manufacture spurious solutions.
inline double f_clamped(const Nonlinearity& nl, double t) {
    return nl.eval_f(t > 0.0 ? t : 0.0);
}
inline double fp_clamped(const Nonlinearity& nl, double t) {
    return nl.eval_fprime(t > 0.0 ? t : 0.0);
}

// h^2-scaled residual on the unknowns u_0..u_{N-2} (u_{N-1} = 0).
inline void residual_h2(const RadialProblem& prob, double lambda,
                        const std::vector<double>& u, std::vector<double>& out) {
    const int N = prob.N;
    const double h = prob.h();
    const double h2 = h * h;
    const double n = prob.n;
    out.resize(static_cast<std::size_t>(N) - 1);
    out[0] = -2.0 * n * (u[1] - u[0]) - h2 * lambda * f_clamped(prob.nl, u[0]);
    for (int i = 1; i <= N - 2; ++i) {
        const double up = (i == N - 2) ? 0.0 : u[i + 1];
        const double adv = h * (n - 1.0) / (2.0 * prob.r(i));
        out[i] = -(up - 2.0 * u[i] + u[i - 1]) - adv * (up - u[i - 1])
                 - h2 * lambda * f_clamped(prob.nl, u[i]);
    }
}

// Tridiagonal Jacobian of residual_h2 (sub/diag/super), M = N-1 rows.
inline void jacobian_h2(const RadialProblem& prob, double lambda,
                        const std::vector<double>& u, std::vector<double>& sub,
                        std::vector<double>& diag, std::vector<double>& sup) {
    const int N = prob.N;
    const std::size_t M = static_cast<std::size_t>(N) - 1;
    const double h = prob.h();
    const double h2 = h * h;
    const double n = prob.n;
    sub.assign(M, 0.0);
    diag.assign(M, 0.0);
    sup.assign(M, 0.0);
    diag[0] = 2.0 * n - h2 * lambda * fp_clamped(prob.nl, u[0]);
    sup[0] = -2.0 * n;
    for (int i = 1; i <= N - 2; ++i) {
        const double adv = h * (n - 1.0) / (2.0 * prob.r(i));
        sub[i] = -1.0 + adv;
        diag[i] = 2.0 - h2 * lambda * fp_clamped(prob.nl, u[i]);
        if (i < N - 2) sup[i] = -1.0 - adv;
    }
}

// In-place Thomas solve; rhs becomes the solution.  The Jacobian is
// strictly diagonally dominant away from the fold, and in practice
// well-behaved up to it, so no pivoting.
inline void thomas_solve(std::vector<double> sub, std::vector<double> diag,
                         std::vector<double> sup, std::vector<double>& rhs) {
    const std::size_t M = diag.size();
    for (std::size_t i = 1; i < M; ++i) {
        const double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[M - 1] /= diag[M - 1];
    for (std::size_t i = M - 1; i-- > 0;)
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

// d/dr by central differences, one-sided second order at the ends.
inline std::vector<double> gradient_edge2(const std::vector<double>& u, double h) {
    const std::size_t N = u.size();
    std::vector<double> g(N);
    g[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < N; ++i) g[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
    g[N - 1] = (3.0 * u[N - 1] - 4.0 * u[N - 2] + u[N - 3]) / (2.0 * h);
    return g;
}

// Trapezoid rule of nodal values on the uniform grid.
inline double trapz(const std::vector<double>& y, double h) {
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * h;
}

}  // namespace detail

/// Apply the (unscaled) continuous operator discretization to u:
/// row 0 uses the symmetric limit -2n(u_1-u_0)/h^2, the last row
/// reports the Dirichlet value u_{N-1} itself.
inline std::vector<double> apply_operator(const RadialProblem& prob,
                                          const std::vector<double>& u) {
    if (static_cast<int>(u.size()) != prob.N)
        throw BadParameter("apply_operator: u has wrong length");
    const int N = prob.N;
    const double h = prob.h();
    const double n = prob.n;
    std::vector<double> out(u.size());
    out[0] = -2.0 * n * (u[1] - u[0]) / (h * h);
    for (int i = 1; i <= N - 2; ++i) {
        out[i] = -(u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
                 - (n - 1.0) / prob.r(i) * (u[i + 1] - u[i - 1]) / (2.0 * h);
    }
    out[N - 1] = u[N - 1];
    return out;
}

/// Residual |2(n-2) - lambda| of substituting the singular profile
/// u = -2 ln r into the continuous equation with f = e^u: both sides
/// scale as 1/r^2, so the defect is exactly this constant (0 at
/// lambda = 2(n-2), e.g. lambda = 16 for n = 10).
inline double singular_substitution_defect(double n, double lambda) {
    return std::abs(2.0 * (n - 2.0) - lambda);
}

namespace detail {

// One full Newton update (sup-norm capped); returns false on a
// non-finite correction.  R holds the residual on entry, garbage after.
inline bool newton_step(const RadialProblem& prob, double lambda,
                        std::vector<double>& u, std::vector<double>& R,
                        double du_cap, std::vector<double>& sub,
                        std::vector<double>& diag, std::vector<double>& sup) {
    jacobian_h2(prob, lambda, u, sub, diag, sup);
    for (double& v : R) v = -v;
    thomas_solve(sub, diag, sup, R);
    double dmax = 0.0;
    for (double v : R) {
        if (!std::isfinite(v)) return false;
        dmax = std::max(dmax, std::abs(v));
    }
    const double t = (dmax > du_cap) ? du_cap / dmax : 1.0;
    for (std::size_t i = 0; i < R.size(); ++i) u[i] += t * R[i];
    return true;
}

}  // namespace detail

/// Newton iteration at fixed lambda from the initial guess u_init.
/// Steps are taken full, capped in sup norm by config.du_cap (this is
/// what survives near-fold stiffness; a monotone line search stalls
/// there).  Throws NoConvergence after newton_max_iter iterations, on
/// non-finite iterates, or if the converged iterate dips below -1e-12
/// (a solution that left the physical cone).  Entries in [-1e-12, 0)
/// are clipped.
///
/// Once newton_tol is met the iterate is polished to the roundoff
/// floor and *required* to get there.  Rationale: a tolerance on the
/// h^2-scaled residual corresponds to tol/h^2 in equation units, so in
/// a lambda-band of width ~ tol/(h^2 f) beyond a fold the least-defect
/// iterate still passes the tol test ("pseudo-solution") and the
/// branch would overshoot the discrete fold by an amount *growing*
/// like N^2.  A genuine solution polishes quadratically to assembly
/// noise; a pseudo-solution stalls orders of magnitude above it.
inline std::vector<double> newton_solve(const RadialProblem& prob, double lambda,
                                        std::vector<double> u,
                                        const ContinuationConfig& config = {}) {
    const int N = prob.N;
    if (static_cast<int>(u.size()) != N) u.assign(static_cast<std::size_t>(N), 0.0);
    u[N - 1] = 0.0;
    std::vector<double> R, sub, diag, sup;
    auto max_residual = [&](const std::vector<double>& w) {
        detail::residual_h2(prob, lambda, w, R);
        double rmax = 0.0;
        for (double v : R) {
            if (!std::isfinite(v)) throw NoConvergence("newton_solve: residual overflow");
            rmax = std::max(rmax, std::abs(v));
        }
        return rmax;
    };
    for (int it = 0; it < config.newton_max_iter; ++it) {
        double rmax = max_residual(u);
        if (rmax <= config.newton_tol) {
            double sup_u = 0.0;
            for (double v : u) sup_u = std::max(sup_u, std::abs(v));
            const double floor_gate =
                std::max(64.0 * std::numeric_limits<double>::epsilon() * (1.0 + sup_u),
                         1e-4 * config.newton_tol);
            std::vector<double> best = u;
            double rbest = rmax;
            for (int extra = 0; extra < 6 && rbest > floor_gate; ++extra) {
                // R holds the residual of u on loop entry.
                if (!detail::newton_step(prob, lambda, u, R, config.du_cap, sub, diag, sup))
                    break;
                const double rnew = max_residual(u);
                if (rnew < rbest) {
                    rbest = rnew;
                    best = u;
                } else {
                    break;
                }
            }
            if (rbest > floor_gate)
                throw NoConvergence(
                    "newton_solve: residual stalls above the roundoff floor "
                    "(pseudo-solution past a fold)");
            u = std::move(best);
            double umin = 0.0;
            for (int i = 0; i < N - 1; ++i) umin = std::min(umin, u[i]);
            if (umin < -1e-12)
                throw NoConvergence("newton_solve: converged iterate not nonnegative");
            for (int i = 0; i < N - 1; ++i)
                if (u[i] < 0.0) u[i] = 0.0;
            return u;
        }
        // R still holds the residual of u here.
        if (!detail::newton_step(prob, lambda, u, R, config.du_cap, sub, diag, sup))
            throw NoConvergence("newton_solve: singular Jacobian");
    }
    throw NoConvergence("newton_solve: iteration cap reached");
}

/// Smallest eigenvalue of the linearized operator -Lap_n - lambda f'(u)
/// (Dirichlet at r=1, Neumann limit at r=0) together with its grid
/// eigenfunction in the symmetrized variables scaled back to nodal
/// values.  Finite-volume weights make the matrix exactly symmetric;
/// the eigenvalue is located by a Sturm-sequence bisection and the
/// eigenvector polished by shifted inverse iteration (deterministic
/// start), with a final Rayleigh quotient.
struct EigenResult {
    double mu1 = 0.0;
    std::vector<double> phi;  // length N, phi[N-1] = 0
};

inline EigenResult smallest_eigenvalue(const RadialProblem& prob, double lambda,
                                       const std::vector<double>& u,
                                       double eigen_tol = 1e-8) {
    const int N = prob.N;
    if (static_cast<int>(u.size()) != N)
        throw BadParameter("smallest_eigenvalue: u has wrong length");
    const double h = prob.h();
    const double h2 = h * h;
    const double n = prob.n;
    const std::size_t M = static_cast<std::size_t>(N) - 1;

    // Cell measures v_i and interface conductivities kappa_{i+1/2}.
    std::vector<double> v(M), kap(M), diag(M), off(M > 1 ? M - 1 : 0);
    v[0] = std::pow(0.5 * h, n) / (n * h);
    for (std::size_t i = 1; i < M; ++i) v[i] = std::pow(prob.r(static_cast<int>(i)), n - 1.0);
    for (std::size_t i = 0; i < M; ++i)
        kap[i] = std::pow(prob.r(static_cast<int>(i)) + 0.5 * h, n - 1.0);
    diag[0] = kap[0] / (h2 * v[0]) - lambda * detail::fp_clamped(prob.nl, u[0]);
    for (std::size_t i = 1; i < M; ++i)
        diag[i] = (kap[i] + kap[i - 1]) / (h2 * v[i])
                  - lambda * detail::fp_clamped(prob.nl, u[i]);
    for (std::size_t i = 0; i + 1 < M; ++i)
        off[i] = -kap[i] / (h2 * std::sqrt(v[i] * v[i + 1]));

    // Gershgorin enclosure.
    double lo = diag[0], hi = diag[0];
    for (std::size_t i = 0; i < M; ++i) {
        double rad = 0.0;
        if (i > 0) rad += std::abs(off[i - 1]);
        if (i + 1 < M) rad += std::abs(off[i]);
        lo = std::min(lo, diag[i] - rad);
        hi = std::max(hi, diag[i] + rad);
    }

    // Sturm count: number of eigenvalues below x.
    auto count_below = [&](double x) {
        int c = 0;
        double q = diag[0] - x;
        if (q < 0.0) ++c;
        for (std::size_t i = 1; i < M; ++i) {
            double denom = q;
            if (denom == 0.0) denom = 1e-300;
            q = (diag[i] - x) - off[i - 1] * off[i - 1] / denom;
            if (q < 0.0) ++c;
        }
        return c;
    };

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (hi - lo <= eigen_tol * std::max(1.0, std::abs(mid)) || mid == lo || mid == hi)
            break;
        if (count_below(mid) >= 1)
            hi = mid;
        else
            lo = mid;
    }
    const double mu_bis = 0.5 * (lo + hi);

    // Shifted inverse iteration for the eigenvector (and a Rayleigh
    // polish of the value).  The shift sits inside the bisection
    // bracket, so A - shift I is near-singular: exactly what inverse
    // iteration wants.  Pivot breakdowns are guarded, not pivoted.
    std::vector<double> x(M);
    for (std::size_t i = 0; i < M; ++i) x[i] = 1.0 / std::sqrt(1.0 + static_cast<double>(i));
    auto apply_a = [&](const std::vector<double>& y, std::vector<double>& out) {
        out.resize(M);
        for (std::size_t i = 0; i < M; ++i) {
            double s = diag[i] * y[i];
            if (i > 0) s += off[i - 1] * y[i - 1];
            if (i + 1 < M) s += off[i] * y[i + 1];
            out[i] = s;
        }
    };
    std::vector<double> ax;
    double rho = mu_bis, rho_prev = std::numeric_limits<double>::infinity();
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
        std::vector<double> d2(M), rhs = x;
        for (std::size_t i = 0; i < M; ++i) d2[i] = diag[i] - mu_bis;
        // LU sweep with breakdown guard
        std::vector<double> sup2(off.begin(), off.end());
        for (std::size_t i = 1; i < M; ++i) {
            double piv = d2[i - 1];
            if (std::abs(piv) < 1e-300) piv = (piv < 0.0 ? -1e-300 : 1e-300);
            const double w = off[i - 1] / piv;
            d2[i] -= w * sup2[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        {
            double piv = d2[M - 1];
            if (std::abs(piv) < 1e-300) piv = (piv < 0.0 ? -1e-300 : 1e-300);
            rhs[M - 1] /= piv;
        }
        for (std::size_t i = M - 1; i-- > 0;) {
            double piv = d2[i];
            if (std::abs(piv) < 1e-300) piv = (piv < 0.0 ? -1e-300 : 1e-300);
            rhs[i] = (rhs[i] - sup2[i] * rhs[i + 1]) / piv;
        }
        double nrm = 0.0;
        for (double vv : rhs) nrm += vv * vv;
        nrm = std::sqrt(nrm);
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw IterationCap("smallest_eigenvalue: inverse iteration broke down");
        for (std::size_t i = 0; i < M; ++i) x[i] = rhs[i] / nrm;
        apply_a(x, ax);
        double num = 0.0;
        for (std::size_t i = 0; i < M; ++i) num += x[i] * ax[i];
        rho = num;  // x has unit norm
        if (std::abs(rho - rho_prev) <= eigen_tol * std::max(1.0, std::abs(rho))) {
            ok = true;
            break;
        }
        rho_prev = rho;
    }
    if (!ok) throw IterationCap("smallest_eigenvalue: Rayleigh quotient did not settle");

    EigenResult res;
    res.mu1 = rho;
    // Undo the symmetrizing scaling: phi_i = x_i / sqrt(v_i); normalize
    // so that phi(0) = 1 and the sign is positive (ground state).
    res.phi.assign(static_cast<std::size_t>(N), 0.0);
    for (std::size_t i = 0; i < M; ++i) res.phi[i] = x[i] / std::sqrt(v[i]);
    if (res.phi[0] != 0.0) {
        const double s = res.phi[0];
        for (double& vv : res.phi) vv /= s;
    }
    return res;
}

namespace detail {

inline SolutionPoint make_point(const RadialProblem& prob, double lambda,
                                std::vector<double> u, double mu1) {
    SolutionPoint p;
    p.lambda = lambda;
    p.mu1 = mu1;
    const double h = prob.h();
    const int N = prob.N;
    std::vector<double> R;
    residual_h2(prob, lambda, u, R);
    for (double v : R) p.residual = std::max(p.residual, std::abs(v));
    p.sup_norm = *std::max_element(u.begin(), u.end());
    const auto g = gradient_edge2(u, h);
    std::vector<double> e(u.size()), uf(u.size());
    for (int i = 0; i < N; ++i) {
        const double w = std::pow(prob.r(i), prob.n - 1.0);
        e[i] = g[i] * g[i] * w;
        uf[i] = u[i] * f_clamped(prob.nl, u[i]) * w;
    }
    // r = 0 weight: r^{n-1} -> 0 for n > 1, 1 for n = 1.
    if (prob.n > 1.0) {
        e[0] = 0.0;
        uf[0] = 0.0;
    }
    p.dirichlet_energy = trapz(e, h);
    p.uf_integral = trapz(uf, h);
    p.u = std::move(u);
    return p;
}

}  // namespace detail

/// Natural continuation in lambda from a small starting value.  The
/// step grows by step_growth per success (capped), halves on failure,
/// and the run terminates when
///   * the step collapses below lambda_min_step  -> fold or failure,
///   * sup |u| reaches sup_norm_cap              -> sup_norm_cap,
///   * lambda reaches lambda_cap                 -> lambda_cap.
/// A collapse is only reported as a fold when mu1 at the last point has
/// decayed below fold_mu_ratio times the branch maximum; otherwise the
/// stall is a grid artifact (the discrete branch saturating near a
/// singular profile) and is reported as `failure` with a note.  Points
/// with mu1 < -1e-6 (past-fold captures) are rejected like failed steps.
inline Branch continue_branch(const RadialProblem& prob,
                              const ContinuationConfig& config = {}) {
    Branch br;
    const int N = prob.N;
    const double inf = std::numeric_limits<double>::infinity();

    double lambda0 = config.lambda_initial;
    if (!(lambda0 > 0.0)) {
        const std::vector<double> zero(static_cast<std::size_t>(N), 0.0);
        const double mu_hat = smallest_eigenvalue(prob, 0.0, zero, config.eigen_tol).mu1;
        const double fp0 = std::max(prob.nl.eval_fprime(0.0), 1e-6);
        lambda0 = 1e-3 * mu_hat / fp0;
    }

    // First foothold: solve from u = 0, halving lambda0 on failure.
    std::vector<double> u(static_cast<std::size_t>(N), 0.0);
    bool seeded = false;
    for (int attempt = 0; attempt < 60 && !seeded; ++attempt) {
        try {
            u = newton_solve(prob, lambda0, u, config);
            seeded = true;
        } catch (const NoConvergence&) {
            lambda0 *= 0.5;
            u.assign(static_cast<std::size_t>(N), 0.0);
        }
    }
    if (!seeded) {
        br.termination = Termination::failure;
        br.note = "no starting point: Newton failed down to lambda = " +
                  std::to_string(lambda0);
        return br;
    }

    double lambda = lambda0;
    double mu = smallest_eigenvalue(prob, lambda, u, config.eigen_tol).mu1;
    br.points.push_back(detail::make_point(prob, lambda, u, mu));

    double step = config.lambda_initial_step;
    const double step_cap = config.max_step_factor * config.lambda_initial_step;
    double lambda_fail = inf;

    while (true) {
        if (br.points.back().sup_norm >= config.sup_norm_cap) {
            br.termination = Termination::sup_norm_cap;
            break;
        }
        if (lambda >= config.lambda_cap) {
            br.termination = Termination::lambda_cap;
            break;
        }
        if (br.points.size() > 20000) {
            br.termination = Termination::failure;
            br.note = "point budget exhausted";
            break;
        }
        const double lambda_try = std::min(lambda + step, config.lambda_cap);
        bool accepted = false;
        try {
            auto u_new = newton_solve(prob, lambda_try, u, config);
            const double mu_new =
                smallest_eigenvalue(prob, lambda_try, u_new, config.eigen_tol).mu1;
            if (mu_new < -1e-6)
                throw NoConvergence("continue_branch: captured unstable solution");
            u = std::move(u_new);
            lambda = lambda_try;
            mu = mu_new;
            br.points.push_back(detail::make_point(prob, lambda, u, mu));
            accepted = true;
        } catch (const NoConvergence&) {
            lambda_fail = std::min(lambda_fail, lambda_try);
            step *= 0.5;
            if (step < config.lambda_min_step) {
                br.lambda_star_bracket = {lambda, lambda_fail};
                const double mu_max = br.mu1_max();
                if (mu < config.fold_mu_ratio * mu_max) {
                    br.fold_detected = true;
                    br.termination = Termination::fold;
                } else {
                    br.termination = Termination::failure;
                    br.note =
                        "continuation step collapsed without stability decay "
                        "(mu1 ratio " +
                        std::to_string(mu_max > 0.0 ? mu / mu_max : 0.0) +
                        "); discrete branch saturated near a singular profile, "
                        "not a resolved fold";
                }
                return br;
            }
            continue;
        }
        if (accepted) {
            if (lambda >= lambda_fail) lambda_fail = inf;  // stale failure info
            step = std::min(step * config.step_growth, step_cap);
        }
    }
    br.lambda_star_bracket = {lambda, lambda_fail};
    return br;
}

/// Residual of the stability identity Eq-type pairing
///   int g'(u)^2 |grad u|^2 r^{n-1} = lambda int G(u) f(u) r^{n-1},
/// with G the antiderivative of g'^2 from 0 (computed by adaptive
/// quadrature, cached).  g must vanish at 0 and be C^1; returns the
/// relative defect of the two trapezoid integrals.
inline double stability_identity_check(const RadialProblem& prob,
                                       const SolutionPoint& point,
                                       const ScalarExpression& g) {
    if (std::abs(g(0.0)) > 1e-9)
        throw BadParameter("stability_identity_check: g(0) must vanish");
    CachedAntiderivative G([&g](double s) {
        const double d = g.derivative(s);
        return d * d;
    }, 0.0, 1e-12);

    const int N = prob.N;
    const double h = prob.h();
    const auto grad = detail::gradient_edge2(point.u, h);
    std::vector<double> lhs_d(point.u.size()), rhs_d(point.u.size());
    for (int i = 0; i < N; ++i) {
        const double w = std::pow(prob.r(i), prob.n - 1.0);
        const double gp = g.derivative(point.u[i]);
        lhs_d[i] = gp * gp * grad[i] * grad[i] * w;
        rhs_d[i] = G(point.u[i]) * detail::f_clamped(prob.nl, point.u[i]) * w;
    }
    if (prob.n > 1.0) {
        lhs_d[0] = 0.0;
        rhs_d[0] = 0.0;
    }
    const double lhs = detail::trapz(lhs_d, h);
    const double rhs = point.lambda * detail::trapz(rhs_d, h);
    return std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300});
}

/// Quadratic stability form Q(phi) = int |phi'|^2 r^{n-1}
///   - lambda int f'(u) phi^2 r^{n-1} for a nodal test function with
/// phi(1) = 0.  Semi-stability of the minimal branch means Q >= 0 for
/// all admissible phi (up to quadrature error).
inline double stability_form(const RadialProblem& prob, const SolutionPoint& point,
                             const std::vector<double>& phi) {
    if (phi.size() != point.u.size())
        throw BadParameter("stability_form: phi has wrong length");
    const int N = prob.N;
    const double h = prob.h();
    const auto grad = detail::gradient_edge2(phi, h);
    std::vector<double> d(phi.size());
    for (int i = 0; i < N; ++i) {
        const double w = std::pow(prob.r(i), prob.n - 1.0);
        d[i] = (grad[i] * grad[i] -
                point.lambda * detail::fp_clamped(prob.nl, point.u[i]) * phi[i] * phi[i]) * w;
    }
    if (prob.n > 1.0) d[0] = 0.0;
    return detail::trapz(d, h);
}

/// One row of a norm-tracking table along a branch.
struct NormRow {
    double lambda = 0.0;
    double sup_norm = 0.0;
    double f_gamma = 0.0;      // int f(u)^gamma r^{n-1}
    double ftilde_sigma = 0.0; // int (f(u)-f(0))^gamma max(u, h^2)^{-sigma} r^{n-1}
    double e_l1 = std::numeric_limits<double>::quiet_NaN(); // int E(u) r^{n-1}
};

/// Track the paper-style norms along a branch; requires 0 <= sigma <=
/// gamma.  If a certificate engine is supplied, the E column integrates
/// E(u(r)) over the region where u >= t0 of the certificate (E is not
/// defined below its anchor) and is NaN otherwise.  Results are also
/// recorded in each point's tracked_norms map.
inline std::vector<NormRow> track_norms(const RadialProblem& prob, Branch& branch,
                                        double gamma, double sigma,
                                        const CertificateEngine* cert = nullptr) {
    if (!(sigma >= 0.0) || !(sigma <= gamma) || !std::isfinite(gamma))
        throw BadParameter("track_norms: need 0 <= sigma <= gamma");
    const int N = prob.N;
    const double h = prob.h();
    const double eps_floor = h * h;
    const double f0 = prob.nl.eval_f(0.0);
    std::vector<NormRow> rows;
    rows.reserve(branch.points.size());
    for (auto& p : branch.points) {
        std::vector<double> a(p.u.size()), b(p.u.size());
        std::vector<double> c;
        if (cert) c.assign(p.u.size(), 0.0);
        for (int i = 0; i < N; ++i) {
            const double w = std::pow(prob.r(i), prob.n - 1.0);
            const double fv = detail::f_clamped(prob.nl, p.u[i]);
            a[i] = std::pow(fv, gamma) * w;
            const double df = std::max(fv - f0, 0.0);
            b[i] = std::pow(df, gamma) * std::pow(std::max(p.u[i], eps_floor), -sigma) * w;
            if (cert && p.u[i] >= cert->t0()) c[i] = cert->E_at(p.u[i]) * w;
        }
        if (prob.n > 1.0) {
            a[0] = 0.0;
            b[0] = 0.0;
            if (cert) c[0] = 0.0;
        }
        NormRow row;
        row.lambda = p.lambda;
        row.sup_norm = p.sup_norm;
        row.f_gamma = detail::trapz(a, h);
        row.ftilde_sigma = detail::trapz(b, h);
        if (cert) row.e_l1 = detail::trapz(c, h);
        p.tracked_norms["f_gamma"] = row.f_gamma;
        p.tracked_norms["ftilde_sigma"] = row.ftilde_sigma;
        if (cert) p.tracked_norms["E_l1"] = row.e_l1;
        rows.push_back(row);
    }
    return rows;
}

/// One row of a dimension sweep.
struct SweepRow {
    double n = 0.0;
    double lambda_ok = 0.0;
    double lambda_fail = std::numeric_limits<double>::infinity();
    bool fold_detected = false;
    Termination termination = Termination::failure;
    double sup_last = 0.0;
    double mu1_last = 0.0;
    double mu1_max = 0.0;
    std::size_t points = 0;
    std::string note;
    std::string error;

    double lambda_star() const { return 0.5 * (lambda_ok + lambda_fail); }
};

/// Run continue_branch for each dimension in n_values (grid size N,
/// shared config), optionally on `jobs` threads.  Rows come back in
/// input order; a per-row failure is captured in its `error` field and
/// does not abort the sweep.
inline std::vector<SweepRow> sweep_dimension(const Nonlinearity& nl,
                                             const std::vector<double>& n_values,
                                             int N, const ContinuationConfig& config,
                                             int jobs = 1) {
    std::vector<SweepRow> rows(n_values.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= n_values.size()) return;
            SweepRow& row = rows[k];
            row.n = n_values[k];
            try {
                RadialProblem prob(nl, n_values[k], N);
                Branch br = continue_branch(prob, config);
                row.lambda_ok = br.lambda_star_bracket.first;
                row.lambda_fail = br.lambda_star_bracket.second;
                row.fold_detected = br.fold_detected;
                row.termination = br.termination;
                row.note = br.note;
                row.points = br.points.size();
                if (!br.points.empty()) {
                    row.sup_last = br.points.back().sup_norm;
                    row.mu1_last = br.points.back().mu1;
                    row.mu1_max = br.mu1_max();
                }
            } catch (const Error& e) {
                row.error = e.what();
            }
        }
    };
    const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n_values.size())));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

}  // namespace extremal
