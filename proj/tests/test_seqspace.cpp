#include "msdecomp/seqspace.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace msdecomp;
using namespace msdecomp::seqspace;

namespace {

SequenceParams P(long M) { return params_from(Rational(M), Rational(1)); }

// Independent transcription of the operator in eta units: coordinate m of
// each column as a rational multiple of eta_m, with Lambda(e_1) carrying the
// constant coefficient 1 for every m > k.
struct DenseEta {
    std::vector<Rational> c; // c[m], m = 1..T
    Rational tail;           // coefficient for m > T
};

DenseEta oracle_first(const SequenceParams& p, std::size_t T) {
    DenseEta d;
    d.c.assign(T + 1, 0);
    Rational run = 0;
    for (int m = 1; m <= p.k; ++m) {
        run += p.A[static_cast<std::size_t>(m - 1)];
        d.c[static_cast<std::size_t>(m)] = run;
    }
    d.c[static_cast<std::size_t>(p.k)] -= p.delta; // mu_k = -delta eta_k
    for (std::size_t m = static_cast<std::size_t>(p.k) + 1; m <= T; ++m) d.c[m] = 1;
    d.tail = 1;
    return d;
}

DenseEta oracle_bracket(const SequenceParams& p, std::size_t j, std::size_t T) {
    DenseEta d;
    d.c.assign(T + 1, 0);
    const auto k = static_cast<std::size_t>(p.k);
    for (std::size_t i = 1; i <= k; ++i) d.c[j + i - 2] += p.A[i - 1];
    d.c[j + k - 2] -= p.delta;
    d.c[j + k - 1] += p.delta;
    d.tail = 0;
    return d;
}

Rational oracle_inner(const DenseEta& a, const DenseEta& b, const SequenceParams& p, std::size_t T) {
    Rational s = 0;
    for (std::size_t m = 1; m <= T; ++m) s += a.c[m] * b.c[m] * p.c0 / rpow(p.M, static_cast<long>(m));
    // sum_{m > T} eta_m^2 = c0 M^{-T} / (M - 1)
    s += a.tail * b.tail * p.c0 / rpow(p.M, static_cast<long>(T)) / (p.M - 1);
    return s;
}

// A_{j,n1} = <Lambda e_1 - Lambda sigma_{n1-2}, Lambda e_j> / j. Since
// u_i = (b/i) e_i and Lambda e_i = (i/b) bracket_i, the residual is
// Lambda e_1 - sum_{i=2}^{n1} bracket_i.
Rational oracle_A(std::size_t j, std::size_t n1, const SequenceParams& p) {
    const std::size_t T = n1 + j + 2 * static_cast<std::size_t>(p.k) + 4;
    DenseEta r = oracle_first(p, T);
    for (std::size_t i = 2; i <= n1; ++i) {
        const DenseEta b = oracle_bracket(p, i, T);
        for (std::size_t m = 1; m <= T; ++m) r.c[m] -= b.c[m];
    }
    if (j == 1) return oracle_inner(r, oracle_first(p, T), p, T);
    return oracle_inner(r, oracle_bracket(p, j, T), p, T) / p.b;
}

} // namespace

TEST(Params, PrintedFormulasAtMEqualsTwo) {
    const SequenceParams p = P(2);
    EXPECT_EQ(p.delta, (Rational(11) - Rational(1, 32)) / 60);
    EXPECT_EQ(p.delta, Rational(117, 640));
    EXPECT_EQ(p.A_i(1), (Rational(1) + Rational(1, 32)) / 12);
    EXPECT_EQ(p.A_i(1), Rational(11, 128));
    EXPECT_EQ(p.A_i(1) + 5 * p.delta, Rational(1));
}

TEST(Params, DerivedConstantsAgreeWithSecondPath) {
    for (long M : {2, 3, 7}) {
        const SequenceParams p = P(M);
        Rational sum = 0;
        for (const auto& a : p.A) sum += a;
        EXPECT_EQ(sum, 1);
        EXPECT_EQ(p.C_m(p.k), 1);
        EXPECT_EQ(p.b, (p.M - 1) * p.delta * (1 - 5 * p.delta) / (2 * rpow(p.M, 5)));
        EXPECT_EQ(p.K, K_termwise(p)) << "M=" << M;
        EXPECT_EQ(p.c0, p.b * p.M * p.M / (2 * p.alpha0 * p.delta * p.K));
        EXPECT_TRUE(sgn(p.delta) > 0 && p.delta < Rational(1, 5));
        EXPECT_TRUE(parameter_violations(p).empty());
    }
    const SequenceParams p = P(2);
    EXPECT_EQ(p.b, Rational(1287, 5242880));
    EXPECT_EQ(p.K, Rational(4747, 10240));
}

TEST(Params, RejectsSmallM) {
    EXPECT_THROW(params_from(Rational(3, 2), Rational(1)), std::invalid_argument);
    EXPECT_THROW(params_from(Rational(2), Rational(0)), std::invalid_argument);
    EXPECT_NO_THROW(params_from(Rational(5, 2), Rational(1, 3)));
}

TEST(Params, TamperedDeltaIsAudited) {
    const SequenceParams p = params_with_delta(Rational(2), Rational(1), 5, Rational(1, 5));
    EXPECT_EQ(p.b, 0);
    EXPECT_FALSE(parameter_violations(p).empty());
}

TEST(Columns, SecondColumnSupportAndLeadingCoefficient) {
    const SequenceParams p = P(2);
    const OperatorColumn c = operator_column(2, p, Variant::first);
    std::vector<std::size_t> support;
    for (const auto& [m, v] : c.bracket.head.entries()) support.push_back(m);
    EXPECT_EQ(support, (std::vector<std::size_t>{1, 2, 3, 4, 5, 6}));
    EXPECT_FALSE(c.bracket.tail.has_value());
    EXPECT_EQ(*(c.scale * Surd(c.bracket.coef(1))).as_rational(), 2 / p.b * p.A_i(1));
}

TEST(Columns, FirstColumnHeadAndTail) {
    const SequenceParams p = P(3);
    const OperatorColumn c = operator_column(1, p, Variant::first);
    for (int m = 1; m < p.k; ++m) EXPECT_EQ(c.bracket.coef(static_cast<std::size_t>(m)), p.C_m(m));
    EXPECT_EQ(c.bracket.coef(5), p.C_m(5) - p.delta);
    ASSERT_TRUE(c.bracket.tail.has_value());
    EXPECT_EQ(c.bracket.tail->start, 6u);
    EXPECT_EQ(c.bracket.coef(1000), 1);
}

TEST(Columns, SecondVariantScalesBySqrtJ) {
    const SequenceParams p = P(2);
    const OperatorColumn c = operator_column(7, p, Variant::second);
    EXPECT_EQ(c.scale.square(), Rational(7) / (p.b * p.b));
}

TEST(Columns, MaterializeRejectsTruncationInsideSupport) {
    const SequenceParams p = P(2);
    EXPECT_THROW(materialize(operator_column(4, p, Variant::first), p, 7), std::invalid_argument);
    const Vector v = materialize(operator_column(4, p, Variant::first), p, 8);
    EXPECT_EQ(v.size(), 8u);
    EXPECT_EQ(v[1], 0.0);
    EXPECT_GT(v[2], 0.0);
}

TEST(Columns, ZeroVectorMapsToZero) {
    const InjectivityReport r = injectivity_check(SparseSeqVec<Rational>{}, P(2));
    EXPECT_TRUE(r.gamma_zero);
    EXPECT_TRUE(r.image_zero);
}

TEST(Coefficients, VanishFarBelowN1) {
    EXPECT_EQ(coefficient_A(2, 8, P(2)), 0);
    EXPECT_EQ(coefficient_A(3, 8, P(2)), 0);
    EXPECT_NE(coefficient_A(4, 8, P(2)), 0);
}

TEST(Coefficients, NormalizationHoldsExactly) {
    for (long M : {2, 3, 7}) {
        const SequenceParams p = P(M);
        for (std::size_t n1 = 2; n1 <= 60; ++n1)
            EXPECT_EQ(coefficient_A(n1, n1, p) * 2 * p.alpha0 * rpow(p.M, static_cast<long>(n1)) / (p.M * p.M), 1)
                << "M=" << M << " n1=" << n1;
    }
}

TEST(Coefficients, SpotValueMatchesIndependentInnerProduct) {
    const SequenceParams p = P(2);
    EXPECT_EQ(coefficient_A(3, 2, p), oracle_A(3, 2, p));
    EXPECT_EQ(A_by_inner_product(3, 2, p, Variant::first), oracle_A(3, 2, p));
}

TEST(Coefficients, ClosedFormsMatchInnerProductsOnTheWholeGrid) {
    for (long M : {2, 3, 7}) {
        const SequenceParams p = P(M);
        for (std::size_t n1 = 2; n1 <= 12; ++n1)
            for (std::size_t j = 1; j <= n1 + 12; ++j) {
                const Rational closed = coefficient_A(j, n1, p);
                ASSERT_EQ(closed, oracle_A(j, n1, p)) << "M=" << M << " n1=" << n1 << " j=" << j;
                ASSERT_EQ(closed, A_by_inner_product(j, n1, p, Variant::first));
                ASSERT_EQ(closed, A_by_inner_product(j, n1, p, Variant::second));
            }
    }
}

TEST(Claim, PassesOnModerateRanges) {
    for (const Rational& M : {Rational(2), Rational(3), Rational(7), Rational(5, 2)}) {
        const ClaimReport r = verify_claim(params_from(M, Rational(1)), 30, 30);
        EXPECT_TRUE(r.all_pass) << "M=" << M;
        EXPECT_TRUE(r.violations.empty());
        EXPECT_EQ(r.tails.size(), 29u);
        for (const auto& t : r.tails) EXPECT_TRUE(t.ok());
    }
}

TEST(Claim, SecondVariantSharesTheTable) {
    const ClaimReport r = verify_claim(P(2), 15, 20, Variant::second);
    EXPECT_TRUE(r.all_pass);
}

TEST(Claim, OtherAlphaZero) {
    EXPECT_TRUE(verify_claim(params_from(Rational(2), Rational(7, 3)), 20, 20).all_pass);
}

TEST(Claim, TamperedDeltaFails) {
    const ClaimReport dead = verify_claim(params_with_delta(Rational(2), Rational(1), 5, Rational(1, 5)), 10, 10);
    EXPECT_FALSE(dead.all_pass);
    EXPECT_FALSE(dead.parameter_violations.empty());

    // b and c0 stay positive, but the constants no longer make u_n optimal
    const ClaimReport off = verify_claim(params_with_delta(Rational(2), Rational(1), 5, Rational(1, 6)), 10, 10);
    EXPECT_FALSE(off.all_pass);
    ASSERT_FALSE(off.violations.empty());
    const ClaimViolation& w = off.violations.front();
    EXPECT_GT(w.lhs, w.rhs); // an exact witness of the broken inequality
}

TEST(Claim, RejectsTooSmallRanges) {
    EXPECT_THROW(verify_claim(P(2), 1, 10), std::invalid_argument);
    EXPECT_THROW(verify_claim(P(2), 5, 6), std::invalid_argument);
}

TEST(Claim, FirstNonzeroIndexBookkeeping) {
    // j(n1) = max(2, n1 - k + 1); at n1 = 2 this is n1 itself
    const SequenceParams p = P(2);
    for (std::size_t n1 = 2; n1 <= 20; ++n1) {
        std::size_t jn = 0;
        for (std::size_t j = 2; j <= n1; ++j)
            if (sgn(coefficient_A(j, n1, p)) != 0) {
                jn = j;
                break;
            }
        EXPECT_EQ(jn, n1 > 6 ? n1 - 4 : 2) << n1;
    }
}

TEST(DualNorm, Basics) {
    DualFunctional e1;
    e1.head.set(1, Surd(Rational(1)));
    const DualNormResult r = dual_norm(e1);
    EXPECT_EQ(r.value, Surd(Rational(1)));
    EXPECT_EQ(r.index, 1u);

    const DualNormResult z = dual_norm(DualFunctional{});
    EXPECT_TRUE(z.value.is_zero());
    EXPECT_EQ(z.index, 0u);

    DualFunctional weighted;
    weighted.head.set(4, Surd(Rational(8)));
    weighted.head.set(2, Surd(Rational(3)));
    EXPECT_EQ(dual_norm(weighted).value, Surd(Rational(2)));
    EXPECT_EQ(dual_norm(weighted).index, 4u);
    weighted.weights = Variant::second;
    EXPECT_EQ(dual_norm(weighted).value, Surd(Rational(4)));
}

TEST(DualNorm, FlagsUnboundedEnvelope) {
    DualFunctional f;
    f.tail = GeometricEnvelope{3, Surd(Rational(1)), Rational(2), false};
    EXPECT_FALSE(dual_norm(f).bounded);
}

TEST(DualNorm, ResidualFunctionalAttainsThreshold) {
    for (Variant v : {Variant::first, Variant::second}) {
        const SequenceParams p = P(2);
        for (std::size_t n = 0; n <= 6; ++n) {
            const DualNormResult r = dual_norm(residual_functional(n + 2, p, v));
            EXPECT_TRUE(r.exact);
            EXPECT_EQ(r.value, Surd(1 / (2 * p.lambda(static_cast<long>(n)))));
            EXPECT_EQ(r.index, n + 2);
        }
    }
}

TEST(Minimizer, CertifiedForFirstTwentySteps) {
    for (Variant v : {Variant::first, Variant::second})
        for (long M : {2, 3, 7}) {
            const SequenceParams p = P(M);
            for (std::size_t n = 0; n <= 20; ++n) {
                const MinimizerCertificate c = certify_iterate(n, p, v);
                EXPECT_TRUE(c.holds) << variant_name(v) << " M=" << M << " n=" << n;
                EXPECT_EQ(c.pairing, c.penalty_bound);
            }
        }
}

TEST(ClosedForm, IteratesAndNorms) {
    const SequenceParams p = P(2);
    const auto u0 = closed_form_iterate(0, p, Variant::first);
    ASSERT_EQ(u0.size(), 1u);
    EXPECT_EQ(*u0.get(2).as_rational(), p.b / 2);
    EXPECT_EQ(closed_form_iterate(0, p, Variant::second).get(2).square(), p.b * p.b / 2);

    Rational prev = 0;
    for (std::size_t n = 0; n <= 30; ++n) {
        const Rational l1 = sigma_l1_norm(n, p);
        const auto s1 = closed_form_sigma(n, p, Variant::first);
        Rational direct = 0;
        for (const auto& [j, val] : s1.entries()) direct += *val.abs().as_rational();
        EXPECT_EQ(l1, direct);
        EXPECT_GT(l1, prev);
        prev = l1;

        const auto s2 = closed_form_sigma(n, p, Variant::second);
        Rational sq = 0;
        for (const auto& [j, val] : s2.entries()) sq += val.square();
        EXPECT_EQ(sigma_l2_norm_squared(n, p), sq);
        EXPECT_EQ(ambient_norm(n, p, Variant::second).square(), sq);
    }
}

TEST(ClosedForm, HarmonicDivergence) {
    const SequenceParams p = P(2);
    const Rational start = sigma_l1_norm(0, p);
    std::size_t n = 0;
    while (sigma_l1_norm(n, p) <= 2 * start) ++n;
    EXPECT_EQ(n, 2u); // H(4) - 1 = 13/12 > 2 * (1/2)
    while (sigma_l1_norm(n, p) <= 3 * start) ++n;
    EXPECT_EQ(n, 5u); // H(7) - 1 > 3/2 > H(6) - 1
}

TEST(Injectivity, TruncatedFormalSolutionLeavesResidualAtTheCut) {
    const SequenceParams p = P(2);
    for (std::size_t J = 2; J <= 25; ++J) {
        SparseSeqVec<Rational> g;
        g.set(1, Rational(1));
        for (std::size_t j = 2; j <= J; ++j) g.set(j, -p.b / static_cast<long>(j));
        const InjectivityReport r = injectivity_check(g, p);
        EXPECT_FALSE(r.image_zero);
        ASSERT_TRUE(r.first_nonzero.has_value());
        EXPECT_EQ(*r.first_nonzero, J) << J;
        EXPECT_EQ(r.recursion_holds_upto, J);
        EXPECT_TRUE(r.consistent_with_recursion);
        EXPECT_TRUE(r.tail_nonzero);
    }
}

TEST(Injectivity, RandomSequencesWithoutFirstEntryHaveNonzeroImage) {
    const SequenceParams p = P(2);
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 12), idx(2, 40), val(-9, 9);
    for (int t = 0; t < 50; ++t) {
        SparseSeqVec<Rational> g;
        const int count = len(rng);
        for (int c = 0; c < count; ++c) {
            int v = val(rng);
            if (v == 0) v = 1;
            g.set(static_cast<std::size_t>(idx(rng)), Rational(v, 7));
        }
        const InjectivityReport r = injectivity_check(g, p);
        EXPECT_FALSE(r.image_zero) << t;
        EXPECT_FALSE(r.tail_nonzero);
    }
}

TEST(Oracle, MatchesClosedFormIterates) {
    const SequenceParams p = P(2);
    for (std::size_t n : {0u, 5u}) {
        const IstaResult r = ista_oracle(p, n, 64, Variant::first);
        ASSERT_TRUE(r.converged);
        const Vector ref = to_dense(closed_form_iterate(n, p, Variant::first), 64);
        EXPECT_LE(distance2(r.solution, ref), 1e-6 * 1e-3);
        EXPECT_NEAR(r.solution[n + 1], p.b.get_d() / static_cast<double>(n + 2), 1e-12);
        for (std::size_t i = 0; i < 64; ++i) {
            if (i != n + 1) {
                EXPECT_LE(std::abs(r.solution[i]), 1e-12);
            }
        }
    }
}

TEST(Oracle, SecondVariant) {
    const SequenceParams p = P(2);
    const IstaResult r = ista_oracle(p, 3, 64, Variant::second);
    ASSERT_TRUE(r.converged);
    EXPECT_LE(distance2(r.solution, to_dense(closed_form_iterate(3, p, Variant::second), 64)), 1e-9);
}

TEST(Oracle, ReturnsZeroBelowTheThreshold) {
    // at lambda_0 / 2 the dual norm 1/(2 lambda_0) is below 1/(2 lambda)
    const SequenceParams p = P(2);
    const IstaResult r = ista_oracle(p, 0, 64, Variant::first, {}, p.lambda(0).get_d() / 2);
    ASSERT_TRUE(r.converged);
    EXPECT_EQ(norm_inf(r.solution), 0.0);
}

TEST(Oracle, RejectsSmallDimension) {
    EXPECT_THROW(ista_oracle(P(2), 3, 17, Variant::first), std::invalid_argument);
}
