#pragma once

// Gradient descent with Barzilai-Borwein steplengths and Armijo backtracking
// for smooth convex objectives, plus a central-difference gradient checker.

#include "msdecomp/core.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace msdecomp::gradsolve {

/// Objective with value and gradient. value_and_gradient writes the gradient
/// into `grad` (already sized) and returns the value.
template <class F>
concept SmoothObjective = requires(const F& f, const Vector& x, Vector& grad) {
    { f.value(x) } -> std::convertible_to<double>;
    { f.value_and_gradient(x, grad) } -> std::convertible_to<double>;
};

enum class BBRule { bb1, bb2 };

/// How the two BB steplengths are combined across iterations.
enum class BBPolicy {
    adaptive,  ///< BB2 when BB2/BB1 < threshold, else BB1
    alternate, ///< BB1 on even iterations, BB2 on odd
    bb1_only,
    bb2_only
};

inline const char* policy_name(BBPolicy p) {
    switch (p) {
    case BBPolicy::adaptive: return "adaptive";
    case BBPolicy::alternate: return "alternate";
    case BBPolicy::bb1_only: return "bb1";
    case BBPolicy::bb2_only: return "bb2";
    }
    return "?";
}

inline BBPolicy parse_policy(const std::string& s) {
    if (s == "adaptive") return BBPolicy::adaptive;
    if (s == "alternate") return BBPolicy::alternate;
    if (s == "bb1") return BBPolicy::bb1_only;
    if (s == "bb2") return BBPolicy::bb2_only;
    throw std::invalid_argument("unknown BB policy: " + s);
}

struct SolverParams {
    double tau = 1e-4;
    std::size_t max_iters = 20000;
    double alpha_min = 1e-8;
    double alpha_max = 1e8;
    double armijo_c = 1e-4;
    double armijo_shrink = 0.5;
    std::size_t max_backtracks = 60;
    BBPolicy policy = BBPolicy::adaptive;
    double adaptive_threshold = 0.5;
    /// Stop with `stagnation` after this many consecutive accepted steps whose
    /// decrease is within a few ulps of F (0 disables).
    std::size_t stall_window = 20;

    void validate() const {
        if (!(tau > 0)) throw std::invalid_argument("tau must be positive");
        if (!(alpha_min > 0 && alpha_min < alpha_max && std::isfinite(alpha_max)))
            throw std::invalid_argument("need 0 < alpha_min < alpha_max < inf");
        if (!(armijo_c > 0 && armijo_c < 1)) throw std::invalid_argument("armijo_c must lie in (0,1)");
        if (!(armijo_shrink > 0 && armijo_shrink < 1)) throw std::invalid_argument("armijo_shrink must lie in (0,1)");
        if (!(adaptive_threshold > 0 && adaptive_threshold < 1))
            throw std::invalid_argument("adaptive_threshold must lie in (0,1)");
    }
};

enum class StopReason { tolerance, max_iters, stagnation };

inline const char* stop_reason_name(StopReason r) {
    switch (r) {
    case StopReason::tolerance: return "tolerance";
    case StopReason::max_iters: return "max_iters";
    case StopReason::stagnation: return "stagnation";
    }
    return "?";
}

struct SolveResult {
    Vector minimizer;
    double final_value = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    StopReason stop_reason = StopReason::max_iters;
};

/// One row of the per-iteration log.
struct IterationRecord {
    std::size_t iter;
    double f;
    double grad_norm;
    double step; ///< alpha * linesearch factor actually taken
};

using IterationLog = std::function<void(const IterationRecord&)>;

/// Writes `iter,f,grad_norm,step` rows.
inline IterationLog csv_iteration_log(std::ostream& os) {
    os << "iter,f,grad_norm,step\n";
    return [&os](const IterationRecord& r) {
        os << r.iter << ',' << format_double(r.f) << ',' << format_double(r.grad_norm) << ','
           << format_double(r.step) << '\n';
    };
}

/// BB1 = <s,s>/<s,y>, BB2 = <s,y>/<y,y>, clamped to [alpha_min, alpha_max].
/// Non-positive curvature <s,y> <= 0 yields alpha_max.
inline double bb_steplength(std::span<const double> s, std::span<const double> y, BBRule rule, double alpha_min,
                            double alpha_max) {
    const double sy = dot(s, y);
    if (!(sy > 0)) return alpha_max;
    const double raw = rule == BBRule::bb1 ? dot(s, s) / sy : sy / dot(y, y);
    if (!std::isfinite(raw)) return alpha_max;
    return std::clamp(raw, alpha_min, alpha_max);
}

/// Picks the steplength for iteration `iter` (>= 1) according to the policy.
inline double choose_steplength(std::span<const double> s, std::span<const double> y, std::size_t iter,
                                const SolverParams& p) {
    switch (p.policy) {
    case BBPolicy::bb1_only: return bb_steplength(s, y, BBRule::bb1, p.alpha_min, p.alpha_max);
    case BBPolicy::bb2_only: return bb_steplength(s, y, BBRule::bb2, p.alpha_min, p.alpha_max);
    case BBPolicy::alternate:
        return bb_steplength(s, y, iter % 2 == 0 ? BBRule::bb1 : BBRule::bb2, p.alpha_min, p.alpha_max);
    case BBPolicy::adaptive: {
        const double a1 = bb_steplength(s, y, BBRule::bb1, p.alpha_min, p.alpha_max);
        const double a2 = bb_steplength(s, y, BBRule::bb2, p.alpha_min, p.alpha_max);
        return a2 / a1 < p.adaptive_threshold ? a2 : a1;
    }
    }
    return p.alpha_max;
}

struct ArmijoResult {
    double step = 0.0; ///< accepted factor times initial_step
    double value = 0.0;
    std::size_t trials = 0;
    bool accepted = false;
};

/// Backtracks from `initial_step` along `direction` until
/// f(x + t d) <= f(x) + c t <grad, d>. Returns accepted = false after
/// params.max_backtracks shrinks.
template <SmoothObjective F>
ArmijoResult armijo_search(const F& f, const Vector& point, double f_point, const Vector& grad,
                           const Vector& direction, double initial_step, const SolverParams& params) {
    const double slope = dot(grad, direction);
    if (!(slope < 0)) throw std::invalid_argument("armijo_search: direction is not a descent direction");
    ArmijoResult r;
    Vector trial(point.size());
    double t = initial_step;
    for (std::size_t k = 0; k <= params.max_backtracks; ++k) {
        for (std::size_t i = 0; i < point.size(); ++i) trial[i] = point[i] + t * direction[i];
        const double ft = f.value(trial);
        r.trials = k + 1;
        if (std::isfinite(ft) && ft <= f_point + params.armijo_c * t * slope) {
            r.step = t;
            r.value = ft;
            r.accepted = true;
            return r;
        }
        t *= params.armijo_shrink;
    }
    return r;
}

/// Gradient method x+ = x - alpha * t * grad with BB steplength alpha and
/// Armijo factor t in (0,1]. Converged when both
///   |F(x+) - F(x)| / |F(x+)| <= tau  and  ||grad F(x+)|| / ||grad F(x0)|| <= tau.
template <SmoothObjective F>
SolveResult minimize(const F& f, Vector init, const SolverParams& params, const IterationLog& log = {}) {
    params.validate();
    if (!all_finite(init)) throw NumericalError("minimize: non-finite initial point", 0);

    SolveResult res;
    Vector x = std::move(init);
    Vector g(x.size());
    double fx = f.value_and_gradient(x, g);
    if (!std::isfinite(fx) || !all_finite(g)) throw NumericalError("minimize: non-finite objective", 0);
    const double g0 = norm2(g);
    if (log) log({0, fx, g0, 0.0});

    if (g0 == 0.0) {
        res.minimizer = std::move(x);
        res.final_value = fx;
        res.converged = true;
        res.stop_reason = StopReason::tolerance;
        return res;
    }

    double alpha = std::clamp(1.0 / g0, params.alpha_min, params.alpha_max);
    Vector x_new(x.size()), g_new(x.size()), s(x.size()), y(x.size()), d(x.size());
    res.stop_reason = StopReason::max_iters;
    std::size_t stalled = 0;

    for (std::size_t it = 1; it <= params.max_iters; ++it) {
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = -alpha * g[i];
        const ArmijoResult ls = armijo_search(f, x, fx, g, d, 1.0, params);
        if (!ls.accepted) {
            res.stop_reason = StopReason::stagnation;
            break;
        }
        for (std::size_t i = 0; i < x.size(); ++i) x_new[i] = x[i] + ls.step * d[i];
        const double f_new = f.value_and_gradient(x_new, g_new);
        if (!std::isfinite(f_new) || !all_finite(g_new))
            throw NumericalError("minimize: non-finite objective or gradient", static_cast<long>(it));

        for (std::size_t i = 0; i < x.size(); ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        const double gn = norm2(g_new);
        const double rel_f = f_new == 0.0 ? std::abs(f_new - fx) : std::abs(f_new - fx) / std::abs(f_new);
        // a vanishing gradient is a stationary point; the next step could not move
        const bool done = gn == 0.0 || (rel_f <= params.tau && gn / g0 <= params.tau);
        const bool tiny = fx - f_new <= 4.0 * DBL_EPSILON * std::abs(fx);

        std::swap(x, x_new);
        std::swap(g, g_new);
        fx = f_new;
        res.iterations = it;
        if (log) log({it, fx, gn, alpha * ls.step});
        if (done) {
            res.converged = true;
            res.stop_reason = StopReason::tolerance;
            break;
        }
        stalled = tiny ? stalled + 1 : 0;
        if (norm_inf(s) == 0.0 || (params.stall_window != 0 && stalled >= params.stall_window)) {
            res.stop_reason = StopReason::stagnation;
            break;
        }
        alpha = choose_steplength(s, y, it, params);
    }

    res.minimizer = std::move(x);
    res.final_value = fx;
    return res;
}

/// Largest componentwise deviation between the analytic gradient and central
/// differences, relative to the larger of the two gradients' max-norms.
template <SmoothObjective F>
double grad_check(const F& f, const Vector& point, double epsilon) {
    if (!(epsilon > 0)) throw std::invalid_argument("grad_check: epsilon must be positive");
    Vector g(point.size());
    f.value_and_gradient(point, g);
    Vector x = point;
    double worst = 0.0, scale = norm_inf(g);
    Vector fd(point.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        x[i] = xi + epsilon;
        const double fp = f.value(x);
        x[i] = xi - epsilon;
        const double fm = f.value(x);
        x[i] = xi;
        fd[i] = (fp - fm) / (2.0 * epsilon);
    }
    scale = std::max(scale, norm_inf(fd));
    if (scale == 0.0) return 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) worst = std::max(worst, std::abs(fd[i] - g[i]));
    return worst / scale;
}

} // namespace msdecomp::gradsolve
