#pragma once

// The truncated sequence-space counterexample as an engine problem, solved
// step by step with the weighted-l1 proximal gradient method.

#include "msdecomp/engine.hpp"
#include "msdecomp/seqspace.hpp"

namespace msdecomp::seqspace {

using SequenceProblem = engine::ProblemInstance<DenseSequenceOperator, WeightedL1>;

/// Unknowns 1..dim, data Lambda(e_1) on rows 1..dim+k. Variant::second uses
/// the sqrt(j) weights of the rescaled example.
inline SequenceProblem make_sequence_problem(const SequenceParams& p, Variant v, std::size_t dim) {
    DenseSequenceOperator op = truncated_operator(p, v, dim);
    Vector f = truncated_data(p, op.rows);
    return SequenceProblem{std::move(op), std::move(f), 2.0, 1.0, penalty_weights(v, dim)};
}

/// lambda_n = alpha0 M^n, indexed from 0.
inline engine::LambdaSchedule sequence_schedule(const SequenceParams& p) {
    return engine::LambdaSchedule{p.alpha0.get_d(), p.M.get_d(), 0};
}

struct IstaInnerSolver {
    IstaParams params;

    engine::InnerResult solve(const engine::Subproblem<DenseSequenceOperator, WeightedL1>& sp) const {
        const auto& pb = *sp.problem;
        if (pb.alpha != 2.0 || pb.beta != 1.0)
            throw std::invalid_argument("IstaInnerSolver handles alpha = 2, beta = 1 only");
        IstaResult r = ista_weighted_l1(pb.forward, pb.data, *sp.offset, sp.lambda, pb.regularizer.weights,
                                        sp.initial_guess, params);
        return {std::move(r.solution), r.iterations, r.converged, r.converged ? "tolerance" : "max_iters"};
    }
};

} // namespace msdecomp::seqspace
