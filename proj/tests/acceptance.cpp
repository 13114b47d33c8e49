// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "msdecomp/deblur.hpp"
#include "msdecomp/engine.hpp"
#include "msdecomp/gradsolve.hpp"
#include "msdecomp/seqspace.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace msdecomp;
using namespace msdecomp::seqspace;

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& check) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
        v = check();
    } catch (const std::exception& e) {
        v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("criterion %2d %-32s %s  %s (%.2f s)\n", id, title, v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

Vector random_vector(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1, 1);
    Vector v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

const long kBases[] = {2, 3, 7};

Verdict claim_certification() {
    std::size_t relations = 0;
    for (long M : kBases) {
        const ClaimReport r = verify_claim(params_from(Rational(M), Rational(1)), 100, 100);
        relations += r.relations_checked;
        std::size_t tails_ok = 0;
        for (const auto& t : r.tails) tails_ok += t.ok();
        if (!r.all_pass || tails_ok != 99)
            return {false, "M=" + std::to_string(M) + ": " + std::to_string(r.violations.size()) + " violations"};
    }
    return {true, std::to_string(relations) + " exact relations, M in {2,3,7}, n1<=100, j<=n1+100"};
}

Verdict normalization() {
    for (long M : kBases) {
        const SequenceParams p = params_from(Rational(M), Rational(1));
        for (std::size_t n1 = 2; n1 <= 100; ++n1)
            if (coefficient_A(n1, n1, p) * 2 * p.alpha0 * rpow(p.M, static_cast<long>(n1)) / (p.M * p.M) != 1)
                return {false, "M=" + std::to_string(M) + " n1=" + std::to_string(n1)};
    }
    return {true, "A_{n1,n1} 2 alpha0 M^n1 / M^2 == 1 for n1 in [2,100]"};
}

Verdict formula_vs_inner_product() {
    std::size_t count = 0;
    for (long M : kBases) {
        const SequenceParams p = params_from(Rational(M), Rational(1));
        for (std::size_t n1 = 2; n1 <= 12; ++n1)
            for (std::size_t j = 1; j <= n1 + 12; ++j) {
                ++count;
                if (coefficient_A(j, n1, p) != A_by_inner_product(j, n1, p, Variant::first))
                    return {false, "M=" + std::to_string(M) + " n1=" + std::to_string(n1) + " j=" + std::to_string(j)};
            }
    }
    return {true, std::to_string(count) + " coefficients equal exactly"};
}

Verdict minimizer_certification() {
    std::size_t count = 0;
    for (Variant v : {Variant::first, Variant::second})
        for (long M : kBases) {
            const SequenceParams p = params_from(Rational(M), Rational(1));
            for (std::size_t n = 0; n <= 20; ++n) {
                const MinimizerCertificate c = certify_iterate(n, p, v);
                ++count;
                if (!c.holds || c.dual.value != Surd(1 / (2 * p.lambda(static_cast<long>(n)))) ||
                    c.pairing != c.penalty_bound)
                    return {false, std::string(variant_name(v)) + " M=" + std::to_string(M) + " n=" + std::to_string(n)};
            }
        }
    return {true, std::to_string(count) + " iterates certified (n<=20, both weightings)"};
}

Verdict ista_agreement() {
    const SequenceParams p = params_from(Rational(2), Rational(1));
    double worst = 0;
    for (std::size_t n = 0; n <= 8; ++n) {
        const IstaResult r = ista_oracle(p, n, 64, Variant::first);
        if (!r.converged) return {false, "no convergence at n=" + std::to_string(n)};
        worst = std::max(worst, distance2(r.solution, to_dense(closed_form_iterate(n, p, Variant::first), 64)));
    }
    return {worst <= 1e-6, fmt("max l2 distance %.3e <= 1e-6 (n<=8, dim 64)", worst)};
}

Verdict divergence() {
    const SequenceParams p = params_from(Rational(2), Rational(1));
    Rational harmonic = 1, prev = -1;
    std::size_t doubled_at = 0;
    const Rational start = sigma_l1_norm(0, p);
    for (std::size_t n = 0; n <= 300; ++n) {
        harmonic += Rational(1, static_cast<long>(n + 2)); // H(n+2)
        const Rational l1 = sigma_l1_norm(n, p);
        if (l1 != p.b * harmonic - p.b) return {false, "l1 norm differs from b H(n+2) - b at n=" + std::to_string(n)};
        if (!(l1 > prev)) return {false, "not strictly increasing at n=" + std::to_string(n)};
        if (doubled_at == 0 && l1 > 2 * start) doubled_at = n;
        prev = l1;
    }
    return {doubled_at != 0, "strictly increasing for n<=300, exceeds 2||sigma_0|| at n=" + std::to_string(doubled_at)};
}

Verdict deblur_suite() {
    const std::size_t N = 64;
    const deblur::ImageField truth = deblur::phantom(N);
    const deblur::Kernel k = deblur::gaussian_kernel(9, 2.0);
    const deblur::ImageField observed(N, deblur::BlurOperator{N, k}.apply(truth.values));
    const deblur::DeblurProblem pb = deblur::make_problem(observed, k, deblur::H1Params{1e-3});
    const engine::LambdaSchedule schedule{1.0 / 16, 2.0, 1}; // 2^(n-5)
    gradsolve::SolverParams sp;
    sp.tau = 1e-4;
    const engine::GradientInnerSolver solver{sp, {}};
    engine::RunOptions opt;
    opt.steps = 20;
    opt.initial_guess = engine::InitialGuess::observed_then_residual;
    opt.snapshot_every = 0;
    opt.truth = truth.values;
    opt.truth_distance = [N](const Vector& a, const Vector& b) { return deblur::h1_distance(a, b, N); };
    const auto ms = engine::run_multiscale(pb, schedule, solver, opt);
    const auto ss = engine::run_single_step(pb, schedule, solver, opt);

    const bool a = engine::check_residual_monotonicity(ms, 1e-6).empty();
    const bool b = engine::check_distance_monotonicity(ms, 1e-3).empty();
    const double ms_final = *ms.steps.back().error, ss_final = *ss.steps.back().error;
    const bool c = ms_final <= ss_final;
    bool rises = false;
    double ss_min = *ss.steps.front().error;
    for (const auto& s : ss.steps) {
        if (*s.error > ss_min * (1 + 1e-9)) rises = true;
        ss_min = std::min(ss_min, *s.error);
    }
    const double late = *ss.steps[ss.steps.size() - 6].error;
    const bool plateau = ss_final > ms_final && std::abs(ss_final - late) <= 0.05 * ss_final;
    const bool d = rises || plateau;

    std::ostringstream os;
    os << "(a) " << (a ? "ok" : "no") << " (b) " << (b ? "ok" : "no") << " (c) "
       << fmt("%.5f <= %.5f", ms_final, ss_final) << " (d) " << (rises ? "single-step rises" : plateau ? "plateau" : "no");
    return {a && b && c && d, os.str()};
}

Verdict parseval() {
    const std::size_t N = 32;
    const deblur::ImageField truth = deblur::phantom(N);
    const deblur::Kernel k = deblur::gaussian_kernel(9, 2.0);
    const deblur::ImageField observed(N, deblur::BlurOperator{N, k}.apply(truth.values));
    const deblur::DeblurProblem pb = deblur::make_problem(observed, k, deblur::H1Params{0.0});
    gradsolve::SolverParams sp;
    sp.tau = 1e-8;
    engine::RunOptions opt;
    opt.steps = 5;
    opt.initial_guess = engine::InitialGuess::observed_then_residual;
    const auto tr = engine::run_multiscale(pb, engine::LambdaSchedule{1.0 / 16, 2.0, 1}, engine::GradientInnerSolver{sp, {}}, opt);
    const engine::ParsevalReport rep = engine::parseval_report(tr, pb);
    return {rep.guaranteed && rep.relative_gap <= 1e-4, fmt("relative gap %.3e <= 1e-4", rep.relative_gap)};
}

Verdict gradient_checks() {
    const std::size_t N = 32;
    const deblur::Kernel k = deblur::gaussian_kernel(9, 2.0);
    const deblur::ImageField observed(N, deblur::BlurOperator{N, k}.apply(deblur::phantom(N).values));
    const deblur::DeblurProblem pb = deblur::make_problem(observed, k, deblur::H1Params{1e-3});
    const Vector sigma = random_vector(N * N, 99);
    const auto F = deblur::objective(pb, sigma, 4.0);
    double worst_r = 0, worst_f = 0;
    for (std::uint64_t s = 0; s < 10; ++s) {
        worst_r = std::max(worst_r, gradsolve::grad_check(pb.regularizer, random_vector(N * N, 1000 + s), 1e-6));
        worst_f = std::max(worst_f, gradsolve::grad_check(F, random_vector(N * N, 2000 + s), 1e-6));
    }
    return {worst_r <= 1e-5 && worst_f <= 1e-5, fmt("R %.2e, F %.2e <= 1e-5 at 10 points each", worst_r, worst_f)};
}

Verdict adjoint_test() {
    const std::size_t N = 64;
    const deblur::BlurOperator op{N, deblur::gaussian_kernel(9, 2.0)};
    double worst = 0, sum = 0;
    for (std::uint64_t s = 0; s < 20; ++s)
        worst = std::max(worst, engine::adjoint_mismatch(op, random_vector(N * N, 3000 + s), random_vector(N * N, 4000 + s)));
    for (double w : op.kernel.weights) sum += w;
    const bool ok = worst <= 1e-12 && std::abs(sum - 1) <= 1e-12;
    return {ok, fmt("adjoint %.2e <= 1e-12, |sum - 1| = %.2e", worst, std::abs(sum - 1))};
}

Verdict injectivity() {
    const SequenceParams p = params_from(Rational(2), Rational(1));
    std::mt19937_64 rng(4141);
    std::uniform_int_distribution<int> len(1, 15), idx(2, 60), val(-20, 20);
    for (int t = 0; t < 50; ++t) {
        SparseSeqVec<Rational> g;
        for (int c = len(rng); c > 0; --c) {
            const int v = val(rng);
            g.set(static_cast<std::size_t>(idx(rng)), Rational(v == 0 ? 1 : v, 3));
        }
        if (injectivity_check(g, p).image_zero) return {false, "zero image for random gamma #" + std::to_string(t)};
    }
    for (std::size_t J = 2; J <= 40; ++J) {
        SparseSeqVec<Rational> g;
        g.set(1, Rational(1));
        for (std::size_t j = 2; j <= J; ++j) g.set(j, -p.b / static_cast<long>(j));
        const InjectivityReport r = injectivity_check(g, p);
        if (!r.first_nonzero || *r.first_nonzero != J || r.zero_prefix + 1 != J || !r.consistent_with_recursion ||
            residual_series(J, p, Variant::first).coef(J) != p.A_i(1))
            return {false, "cut at J=" + std::to_string(J)};
    }
    return {true, "50 random gamma have nonzero image; cuts J in [2,40] leave the first nonzero entry at J"};
}

} // namespace

int main() {
    report(1, "claim certification", claim_certification);
    report(2, "normalization identity", normalization);
    report(3, "formula vs inner product", formula_vs_inner_product);
    report(4, "minimizer certification", minimizer_certification);
    report(5, "ISTA oracle agreement", ista_agreement);
    report(6, "divergence of sigma_n", divergence);
    report(7, "deblur invariant suite", deblur_suite);
    report(8, "energy identity", parseval);
    report(9, "gradient checks", gradient_checks);
    report(10, "adjoint test", adjoint_test);
    report(11, "injectivity recursion", injectivity);
    std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
