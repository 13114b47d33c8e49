#pragma once

// Multiscale decomposition sigma_n = sigma_{n-1} + u_n with
//   u_n = argmin_u  lambda_n ||data - A(sigma_{n-1} + u)||^alpha + R(u)^beta
// and the single-step counterpart, plus the energy and monotonicity checks.

#include "msdecomp/core.hpp"
#include "msdecomp/gradsolve.hpp"

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace msdecomp::engine {

template <class Op>
concept LinearMap = requires(const Op& op, const Vector& x) {
    { op.apply(x) } -> std::convertible_to<Vector>;
    { op.adjoint(x) } -> std::convertible_to<Vector>;
};

template <class R>
concept Regularizer = requires(const R& r, const Vector& x) {
    { r.value(x) } -> std::convertible_to<double>;
    { r.homogeneous() } -> std::convertible_to<bool>;
};

template <class R>
concept SmoothRegularizer = Regularizer<R> && requires(const R& r, const Vector& x, Vector& g) {
    { r.value_and_gradient(x, g) } -> std::convertible_to<double>;
};

template <LinearMap Op, Regularizer Reg>
struct ProblemInstance {
    Op forward;
    Vector data;
    double alpha = 2.0;
    double beta = 1.0;
    Reg regularizer;

    void validate() const {
        if (!(alpha >= 1.0) || !(beta >= 1.0)) throw std::invalid_argument("exponents alpha and beta must be >= 1");
        if (!all_finite(data)) throw std::invalid_argument("data contains non-finite values");
    }
};

/// Largest |<A x, y> - <x, A^T y>| / (||x|| ||y||) over the given pairs.
template <LinearMap Op>
double adjoint_mismatch(const Op& op, const Vector& x, const Vector& y) {
    const double lhs = dot(op.apply(x), y);
    const double rhs = dot(x, op.adjoint(y));
    const double scale = norm2(x) * norm2(y);
    return scale == 0.0 ? std::abs(lhs - rhs) : std::abs(lhs - rhs) / scale;
}

/// lambda_n = lambda0 * factor^(n - first_index)
struct LambdaSchedule {
    double lambda0 = 1.0 / 16.0;
    double factor = 2.0;
    long first_index = 1;

    void validate() const {
        if (!(lambda0 > 0) || !std::isfinite(lambda0)) throw std::invalid_argument("lambda0 must be positive");
        if (!(factor > 1) || !std::isfinite(factor)) throw std::invalid_argument("schedule factor must exceed 1");
    }

    double at(long n) const {
        const double v = lambda0 * std::pow(factor, static_cast<double>(n - first_index));
        if (!std::isfinite(v) || v <= 0) throw NumericalError("lambda schedule left the representable range", n);
        return v;
    }

    /// True when 2^(beta n) / lambda_n is non-increasing for n in
    /// [first_index, first_index + horizon]. Evaluated in log space.
    bool growth_condition_holds(double beta, long horizon) const {
        const std::vector<double> r = growth_ratios(beta, horizon);
        for (std::size_t i = 1; i < r.size(); ++i)
            if (r[i] > r[i - 1] * (1 + 1e-12)) return false;
        return true;
    }

    std::vector<double> growth_ratios(double beta, long horizon) const {
        std::vector<double> r;
        for (long n = first_index; n <= first_index + horizon; ++n)
            r.push_back(std::exp(beta * static_cast<double>(n) * std::log(2.0) - std::log(at(n))));
        return r;
    }
};

template <LinearMap Op, Regularizer Reg>
struct Subproblem {
    const ProblemInstance<Op, Reg>* problem = nullptr;
    double lambda = 1.0;
    const Vector* offset = nullptr; ///< sigma_{n-1}, or zeros in single-step mode
    Vector initial_guess;
    long index = 0;
};

struct InnerResult {
    Vector solution;
    std::size_t iterations = 0;
    bool converged = true;
    std::string stop_reason = "tolerance";
};

/// lambda ||data - A(offset + u)||^alpha + R(u)^beta. Caches the last
/// forward image so a linesearch trial followed by a gradient evaluation at
/// the same point applies A once.
template <LinearMap Op, SmoothRegularizer Reg>
class TikhonovObjective {
public:
    TikhonovObjective(const Op& op, const Reg& reg, const Vector& data, const Vector& offset, double lambda,
                      double alpha, double beta)
        : op_(op), reg_(reg), lambda_(lambda), alpha_(alpha), beta_(beta) {
        shift_ = op_.apply(offset);
        if (shift_.size() != data.size()) throw std::invalid_argument("data and forward image sizes differ");
        for (std::size_t i = 0; i < shift_.size(); ++i) shift_[i] -= data[i];
    }

    double value(const Vector& u) const {
        return lambda_ * fit_power(residual(u)) + reg_power(reg_.value(u));
    }

    double value_and_gradient(const Vector& u, Vector& grad) const {
        const Vector& r = residual(u);
        const double rn2 = dot(r, r);
        const double rn = std::sqrt(rn2);
        const double fit = alpha_ == 2.0 ? rn2 : std::pow(rn, alpha_);
        const double rv = reg_.value_and_gradient(u, grad);
        const double regw = beta_ == 1.0 ? 1.0 : beta_ * std::pow(rv, beta_ - 1.0);
        if (regw != 1.0)
            for (double& g : grad) g *= regw;
        double fitw = 0.0;
        if (alpha_ == 2.0) fitw = 2.0 * lambda_;
        else if (rn > 0.0) fitw = lambda_ * alpha_ * std::pow(rn, alpha_ - 2.0);
        if (fitw != 0.0) {
            const Vector at = op_.adjoint(r);
            for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += fitw * at[i];
        }
        return lambda_ * fit + reg_power(rv);
    }

private:
    const Vector& residual(const Vector& u) const {
        if (!(cached_ && cache_u_ == u)) {
            cache_r_ = op_.apply(u);
            for (std::size_t i = 0; i < cache_r_.size(); ++i) cache_r_[i] += shift_[i];
            cache_u_ = u;
            cached_ = true;
        }
        return cache_r_;
    }
    double fit_power(const Vector& r) const {
        const double rn2 = dot(r, r);
        return alpha_ == 2.0 ? rn2 : std::pow(std::sqrt(rn2), alpha_);
    }
    double reg_power(double v) const { return beta_ == 1.0 ? v : std::pow(v, beta_); }

    const Op& op_;
    const Reg& reg_;
    double lambda_, alpha_, beta_;
    Vector shift_; ///< A(offset) - data
    mutable bool cached_ = false;
    mutable Vector cache_u_, cache_r_;
};

/// Inner solver backed by the BB gradient method.
struct GradientInnerSolver {
    gradsolve::SolverParams params;
    gradsolve::IterationLog log;

    template <LinearMap Op, SmoothRegularizer Reg>
    InnerResult solve(const Subproblem<Op, Reg>& sp) const {
        const auto& pb = *sp.problem;
        TikhonovObjective<Op, Reg> obj(pb.forward, pb.regularizer, pb.data, *sp.offset, sp.lambda, pb.alpha, pb.beta);
        gradsolve::SolveResult r;
        try {
            r = gradsolve::minimize(obj, sp.initial_guess, params, log);
        } catch (const NumericalError& e) {
            throw NumericalError(std::string("inner solve failed: ") + e.what(), sp.index);
        }
        return {std::move(r.minimizer), r.iterations, r.converged, gradsolve::stop_reason_name(r.stop_reason)};
    }
};

enum class Mode { multiscale, single_step };

inline const char* mode_name(Mode m) { return m == Mode::multiscale ? "multiscale" : "single-step"; }

enum class InitialGuess {
    zero,                  ///< always start the inner solver at 0
    observed_then_residual ///< data at the first step, then data - A sigma_{n-1} (imaging only)
};

struct RunOptions {
    std::size_t steps = 1;
    long first_index = 1;
    InitialGuess initial_guess = InitialGuess::zero;
    bool warm_start = false;          ///< single-step: start from the previous minimizer
    std::size_t snapshot_every = 1;   ///< 0 keeps only the final sigma
    std::optional<Vector> truth;
    /// Extra distance to the truth, e.g. the H1 distance; stored per step.
    std::function<double(const Vector& sigma, const Vector& truth)> truth_distance;
};

struct TraceStep {
    long n = 0;
    double lambda = 0.0;
    double increment_R = 0.0;         ///< R(u_n), or R(sigma_n) in single-step mode
    double residual = 0.0;            ///< ||data - A sigma_n||
    double forward_increment_sq = 0.0;///< ||A u_n||^2 (multiscale only)
    std::optional<double> error;      ///< ||sigma_n - truth|| / ||truth||
    std::optional<double> distance;   ///< truth_distance(sigma_n, truth)
    std::size_t inner_iterations = 0;
    bool inner_converged = true;
    std::string inner_stop;
};

struct MultiscaleTrace {
    Mode mode = Mode::multiscale;
    std::vector<TraceStep> steps;
    std::vector<Vector> increments;   ///< u_n in order (multiscale only)
    std::map<long, Vector> snapshots; ///< sigma_n at selected n
    Vector sigma;                     ///< final iterate
    double data_norm_sq = 0.0;
    bool homogeneous = false;
    double alpha = 2.0;
    double beta = 1.0;
};

namespace detail {

template <LinearMap Op, Regularizer Reg>
TraceStep measure(const ProblemInstance<Op, Reg>& pb, const RunOptions& opt, const Vector& sigma, long n,
                  double lambda) {
    TraceStep st;
    st.n = n;
    st.lambda = lambda;
    const Vector img = pb.forward.apply(sigma);
    st.residual = distance2(pb.data, img);
    if (opt.truth) {
        const double tn = norm2(*opt.truth);
        const double d = distance2(sigma, *opt.truth);
        st.error = tn > 0 ? d / tn : d;
        if (opt.truth_distance) st.distance = opt.truth_distance(sigma, *opt.truth);
    }
    return st;
}

inline void check_finite(const Vector& v, long n) {
    if (!all_finite(v)) throw NumericalError("inner solver returned non-finite values", n);
}

inline bool keep_snapshot(const RunOptions& opt, std::size_t k) {
    return opt.snapshot_every != 0 && (k + 1) % opt.snapshot_every == 0;
}

} // namespace detail

template <LinearMap Op, Regularizer Reg, class Solver>
MultiscaleTrace run_multiscale(const ProblemInstance<Op, Reg>& pb, const LambdaSchedule& schedule,
                               const Solver& solver, const RunOptions& opt) {
    pb.validate();
    schedule.validate();
    if (opt.steps < 1) throw std::invalid_argument("run_multiscale: steps must be >= 1");
    const std::size_t dim = pb.forward.adjoint(pb.data).size();

    MultiscaleTrace tr;
    tr.mode = Mode::multiscale;
    tr.data_norm_sq = dot(pb.data, pb.data);
    tr.homogeneous = pb.regularizer.homogeneous();
    tr.alpha = pb.alpha;
    tr.beta = pb.beta;
    tr.sigma.assign(dim, 0.0);

    for (std::size_t k = 0; k < opt.steps; ++k) {
        const long n = opt.first_index + static_cast<long>(k);
        const double lambda = schedule.at(n);
        Subproblem<Op, Reg> sp{&pb, lambda, &tr.sigma, {}, n};
        if (opt.initial_guess == InitialGuess::observed_then_residual) {
            if (pb.data.size() != dim) throw std::invalid_argument("observed-data initial guess needs matching spaces");
            sp.initial_guess = k == 0 ? pb.data : subtract(pb.data, pb.forward.apply(tr.sigma));
        } else {
            sp.initial_guess.assign(dim, 0.0);
        }
        InnerResult ir = solver.solve(sp);
        detail::check_finite(ir.solution, n);
        if (ir.solution.size() != dim) throw std::logic_error("inner solver returned a vector of the wrong size");

        for (std::size_t i = 0; i < dim; ++i) tr.sigma[i] += ir.solution[i];
        TraceStep st = detail::measure(pb, opt, tr.sigma, n, lambda);
        st.increment_R = pb.regularizer.value(ir.solution);
        const Vector au = pb.forward.apply(ir.solution);
        st.forward_increment_sq = dot(au, au);
        st.inner_iterations = ir.iterations;
        st.inner_converged = ir.converged;
        st.inner_stop = ir.stop_reason;
        if (!std::isfinite(st.residual) || !std::isfinite(st.increment_R))
            throw NumericalError("non-finite trace quantity", n);
        tr.steps.push_back(std::move(st));
        tr.increments.push_back(std::move(ir.solution));
        if (detail::keep_snapshot(opt, k)) tr.snapshots[n] = tr.sigma;
    }
    return tr;
}

template <LinearMap Op, Regularizer Reg, class Solver>
MultiscaleTrace run_single_step(const ProblemInstance<Op, Reg>& pb, const LambdaSchedule& schedule,
                                const Solver& solver, const RunOptions& opt) {
    pb.validate();
    schedule.validate();
    if (opt.steps < 1) throw std::invalid_argument("run_single_step: steps must be >= 1");
    const std::size_t dim = pb.forward.adjoint(pb.data).size();
    const Vector zeros(dim, 0.0);

    MultiscaleTrace tr;
    tr.mode = Mode::single_step;
    tr.data_norm_sq = dot(pb.data, pb.data);
    tr.homogeneous = pb.regularizer.homogeneous();
    tr.alpha = pb.alpha;
    tr.beta = pb.beta;
    tr.sigma.assign(dim, 0.0);

    for (std::size_t k = 0; k < opt.steps; ++k) {
        const long n = opt.first_index + static_cast<long>(k);
        const double lambda = schedule.at(n);
        Subproblem<Op, Reg> sp{&pb, lambda, &zeros, {}, n};
        if (opt.warm_start && k > 0) {
            sp.initial_guess = tr.sigma;
        } else if (opt.initial_guess == InitialGuess::observed_then_residual) {
            if (pb.data.size() != dim) throw std::invalid_argument("observed-data initial guess needs matching spaces");
            sp.initial_guess = pb.data;
        } else {
            sp.initial_guess = zeros;
        }
        InnerResult ir = solver.solve(sp);
        detail::check_finite(ir.solution, n);
        if (ir.solution.size() != dim) throw std::logic_error("inner solver returned a vector of the wrong size");

        tr.sigma = std::move(ir.solution);
        TraceStep st = detail::measure(pb, opt, tr.sigma, n, lambda);
        st.increment_R = pb.regularizer.value(tr.sigma);
        st.inner_iterations = ir.iterations;
        st.inner_converged = ir.converged;
        st.inner_stop = ir.stop_reason;
        if (!std::isfinite(st.residual) || !std::isfinite(st.increment_R))
            throw NumericalError("non-finite trace quantity", n);
        tr.steps.push_back(std::move(st));
        if (detail::keep_snapshot(opt, k)) tr.snapshots[n] = tr.sigma;
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct ParsevalTerm {
    long n;
    double forward_sq; ///< ||A u_j||^2
    double penalty;    ///< R(u_j) / lambda_j
};

struct ParsevalReport {
    double lhs = 0.0; ///< ||data||^2
    std::vector<ParsevalTerm> terms;
    double tail = 0.0; ///< ||v_n||^2
    double relative_gap = 0.0;
    bool guaranteed = true;
    std::vector<std::string> warnings;

    double rhs() const {
        double s = tail;
        for (const auto& t : terms) s += t.forward_sq + t.penalty;
        return s;
    }
};

/// Scalar form: each step supplies ||A u_j||^2, R(u_j), lambda_j, and the
/// last residual gives ||v_n||. Usable on traces loaded from disk.
inline ParsevalReport parseval_from_steps(double data_norm_sq, const std::vector<TraceStep>& steps, bool homogeneous,
                                          double alpha, double beta, Mode mode) {
    ParsevalReport rep;
    rep.lhs = data_norm_sq;
    if (alpha != 2.0 || beta != 1.0) rep.warnings.push_back("requires alpha = 2 and beta = 1");
    if (!homogeneous) rep.warnings.push_back("regularizer is not positively 1-homogeneous");
    if (mode != Mode::multiscale) rep.warnings.push_back("trace is not a multiscale run");
    for (const auto& s : steps) rep.terms.push_back({s.n, s.forward_increment_sq, s.increment_R / s.lambda});
    if (!steps.empty()) rep.tail = steps.back().residual * steps.back().residual;
    else rep.tail = data_norm_sq;
    rep.guaranteed = rep.warnings.empty();
    const double gap = std::abs(rep.lhs - rep.rhs());
    rep.relative_gap = rep.lhs > 0 ? gap / rep.lhs : gap;
    return rep;
}

template <LinearMap Op, Regularizer Reg>
ParsevalReport parseval_report(const MultiscaleTrace& tr, const ProblemInstance<Op, Reg>& pb) {
    ParsevalReport rep =
        parseval_from_steps(dot(pb.data, pb.data), tr.steps, pb.regularizer.homogeneous(), pb.alpha, pb.beta, tr.mode);
    return rep;
}

struct MonotonicityViolation {
    long n;
    double previous;
    double current;
    double relative_increase; ///< (current - previous) / previous
};

/// Steps where `values` increased by more than `relative_slack` times the
/// previous value.
inline std::vector<MonotonicityViolation> monotonicity_violations(const std::vector<long>& idx,
                                                                  const std::vector<double>& values,
                                                                  double relative_slack) {
    std::vector<MonotonicityViolation> out;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double prev = values[i - 1], cur = values[i];
        const double allowed = prev + relative_slack * std::abs(prev);
        if (cur > allowed) {
            const double rel = prev != 0.0 ? (cur - prev) / std::abs(prev) : cur - prev;
            out.push_back({idx[i], prev, cur, rel});
        }
    }
    return out;
}

inline std::vector<MonotonicityViolation> check_residual_monotonicity(const MultiscaleTrace& tr,
                                                                      double relative_slack = 0.0) {
    if (tr.steps.empty()) throw std::invalid_argument("check_residual_monotonicity: empty trace");
    std::vector<long> idx;
    std::vector<double> v;
    for (const auto& s : tr.steps) {
        idx.push_back(s.n);
        v.push_back(s.residual);
    }
    return monotonicity_violations(idx, v, relative_slack);
}

/// Same check on the stored truth distances (steps without one are skipped).
inline std::vector<MonotonicityViolation> check_distance_monotonicity(const MultiscaleTrace& tr,
                                                                      double relative_slack = 0.0) {
    std::vector<long> idx;
    std::vector<double> v;
    for (const auto& s : tr.steps)
        if (s.distance) {
            idx.push_back(s.n);
            v.push_back(*s.distance);
        }
    return monotonicity_violations(idx, v, relative_slack);
}

} // namespace msdecomp::engine
