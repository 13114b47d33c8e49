// msdecomp command-line driver.
//
// Exit codes: 0 success, 1 usage, 2 I/O, 3 numerical abort,
// 4 claim violation, 5 oracle failure.

#include "msdecomp/deblur.hpp"
#include "msdecomp/engine.hpp"
#include "msdecomp/pgm.hpp"
#include "msdecomp/seqspace.hpp"
#include "msdecomp/trace_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace msdecomp;
using nlohmann::json;

namespace {

enum Exit { ok = 0, usage = 1, io_error = 2, numerical = 3, claim_violation = 4, oracle_failure = 5 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------

struct DeblurConfig {
    bool use_phantom = false;
    std::size_t phantom_size = 64;
    std::uint64_t phantom_seed = 1952;
    std::string input;
    std::string mode = "both";
    std::size_t steps = 0; // 0: 40 noiseless, 20 noisy
    double lambda0 = 0.0625;
    double factor = 2.0;
    int kernel_size = 9;
    double kernel_sigma = 2.0;
    double noise_var = 0.0;
    std::uint64_t seed = 0;
    double delta = 1e-3;
    bool warm_start = false;
    std::size_t snapshot_every = 1;
    gradsolve::SolverParams solver;
    std::string bb_policy = "adaptive";
    std::string out = "deblur_out";
};

struct ClaimConfig {
    std::string M = "2";
    std::string alpha0 = "1";
    std::size_t n1_max = 100;
    std::size_t j_extra = 100;
    std::string variant = "first";
    std::string tamper_delta;
    int k = 5;
    std::string csv;
};

struct OracleConfig {
    std::string M = "2";
    std::string alpha0 = "1";
    std::size_t steps = 8;
    std::size_t dim = 64;
    double tol = 1e-6;
    std::string variant = "first";
};

struct DiagConfig {
    std::string trace;
    double slack = 1e-6;
};

seqspace::Variant parse_variant(const std::string& s) {
    if (s == "first") return seqspace::Variant::first;
    if (s == "second") return seqspace::Variant::second;
    throw UsageError("unknown variant: " + s);
}

Rational parse_rational_arg(const std::string& s, const char* name) {
    try {
        return parse_rational(s);
    } catch (const std::exception& e) {
        throw UsageError(std::string("--") + name + ": " + e.what());
    }
}

std::size_t thread_cap() {
    if (const char* env = std::getenv("MSDECOMP_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<std::size_t>(v);
    }
    return 1;
}

// ---------------------------------------------------------------------------
// deblur

json solver_json(const gradsolve::SolverParams& p) {
    return json{{"tau", p.tau},
                {"max_iters", p.max_iters},
                {"alpha_min", p.alpha_min},
                {"alpha_max", p.alpha_max},
                {"armijo_c", p.armijo_c},
                {"armijo_shrink", p.armijo_shrink},
                {"max_backtracks", p.max_backtracks},
                {"bb_policy", gradsolve::policy_name(p.policy)},
                {"adaptive_threshold", p.adaptive_threshold},
                {"stall_window", p.stall_window}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot create " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

int cmd_deblur(DeblurConfig cfg) {
    if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0) throw UsageError("--kernel-size must be odd and >= 1");
    if (!(cfg.kernel_sigma > 0)) throw UsageError("--kernel-sigma must be positive");
    if (!(cfg.noise_var >= 0)) throw UsageError("--noise-var must be >= 0");
    if (!(cfg.delta >= 0)) throw UsageError("--delta must be >= 0");
    if (!(cfg.lambda0 > 0)) throw UsageError("--lambda0 must be positive");
    if (!(cfg.factor > 1)) throw UsageError("--factor must exceed 1");
    if (cfg.use_phantom == !cfg.input.empty()) throw UsageError("give exactly one of --phantom or --input");
    if (cfg.mode != "multiscale" && cfg.mode != "single-step" && cfg.mode != "both")
        throw UsageError("--mode must be multiscale, single-step or both");
    try {
        cfg.solver.policy = gradsolve::parse_policy(cfg.bb_policy);
        cfg.solver.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (cfg.steps == 0) cfg.steps = cfg.noise_var > 0 ? 20 : 40;

    // inputs and output location are checked before any computation
    std::optional<deblur::ImageField> truth;
    deblur::ImageField clean;
    if (cfg.use_phantom) {
        if (cfg.phantom_size < 2) throw UsageError("--phantom-size must be >= 2");
        clean = deblur::phantom(cfg.phantom_size, cfg.phantom_seed);
        truth = clean;
    } else {
        try {
            clean = pgm::read(cfg.input);
        } catch (const pgm::PgmError& e) {
            throw IoError(e.what());
        }
    }
    const fs::path out(cfg.out);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec || !fs::is_directory(out)) throw IoError("cannot create output directory " + cfg.out);

    const deblur::Kernel kernel = deblur::gaussian_kernel(cfg.kernel_size, cfg.kernel_sigma);
    const deblur::BlurOperator blur{clean.n, kernel};
    deblur::ImageField observed(clean.n, blur.apply(clean.values));
    observed = deblur::add_gaussian_noise(observed, cfg.noise_var, cfg.seed);

    const deblur::DeblurProblem pb = deblur::make_problem(observed, kernel, {cfg.delta});
    const engine::LambdaSchedule schedule{cfg.lambda0, cfg.factor, 1};
    const engine::GradientInnerSolver solver{cfg.solver, {}};
    engine::RunOptions opt;
    opt.steps = cfg.steps;
    opt.first_index = 1;
    opt.initial_guess = engine::InitialGuess::observed_then_residual;
    opt.warm_start = cfg.warm_start;
    opt.snapshot_every = cfg.snapshot_every;
    if (truth) {
        opt.truth = truth->values;
        const std::size_t n = clean.n;
        opt.truth_distance = [n](const Vector& a, const Vector& b) { return deblur::h1_distance(a, b, n); };
    }

    const bool run_ms = cfg.mode != "single-step", run_ss = cfg.mode != "multiscale";
    std::optional<engine::MultiscaleTrace> ms, ss;
    if (run_ms && run_ss && thread_cap() >= 2) {
        auto fut = std::async(std::launch::async, [&] { return engine::run_single_step(pb, schedule, solver, opt); });
        ms = engine::run_multiscale(pb, schedule, solver, opt);
        ss = fut.get();
    } else {
        if (run_ms) ms = engine::run_multiscale(pb, schedule, solver, opt);
        if (run_ss) ss = engine::run_single_step(pb, schedule, solver, opt);
    }

    json clipped = json::object();
    auto save = [&](const fs::path& p, const Vector& v) {
        try {
            clipped[p.lexically_relative(out).generic_string()] = pgm::write(p.string(), deblur::ImageField(clean.n, v));
        } catch (const pgm::PgmError& e) {
            throw IoError(e.what());
        }
    };
    save(out / "observed.pgm", observed.values);
    if (truth) save(out / "truth.pgm", truth->values);

    json traces = json::object();
    auto persist = [&](const engine::MultiscaleTrace& tr, const std::string& tag) {
        fs::create_directories(out / tag, ec);
        if (ec) throw IoError("cannot create " + (out / tag).string());
        for (const auto& [n, sigma] : tr.snapshots) {
            char name[32];
            std::snprintf(name, sizeof name, "step_%03ld.pgm", n);
            save(out / tag / name, sigma);
        }
        std::ostringstream csv;
        io::write_trace_csv(csv, tr);
        write_text(out / (tag + "_trace.csv"), csv.str());
        const json j = io::to_json(tr);
        write_text(out / (tag + "_trace.json"), j.dump(2) + "\n");
        traces[tag] = {{"final_residual", tr.steps.back().residual},
                       {"final_error", tr.steps.back().error ? json(*tr.steps.back().error) : json(nullptr)}};
    };
    if (ms) persist(*ms, "multiscale");
    if (ss) persist(*ss, "single_step");
    if (ms && ss) {
        std::ostringstream csv;
        io::write_paired_errors_csv(csv, *ms, *ss);
        write_text(out / "errors.csv", csv.str());
    }

    std::size_t total_clipped = 0;
    for (const auto& [_, v] : clipped.items()) total_clipped += v.get<std::size_t>();
    const json meta{
        {"command", "deblur"},
        {"config",
         {{"phantom", cfg.use_phantom},
          {"phantom_size", cfg.phantom_size},
          {"phantom_seed", cfg.phantom_seed},
          {"input", cfg.input},
          {"image_size", clean.n},
          {"mode", cfg.mode},
          {"steps", cfg.steps},
          {"schedule", {{"lambda0", cfg.lambda0}, {"factor", cfg.factor}, {"first_index", 1}}},
          {"kernel", {{"size", cfg.kernel_size}, {"sigma", cfg.kernel_sigma}}},
          {"noise", {{"variance", cfg.noise_var}, {"seed", cfg.seed}, {"generator", "splitmix64-box-muller"}}},
          {"delta", cfg.delta},
          {"warm_start", cfg.warm_start},
          {"snapshot_every", cfg.snapshot_every},
          {"solver", solver_json(cfg.solver)},
          {"out", cfg.out}}},
        {"clipped_pixels", clipped},
        {"clipped_total", total_clipped},
        {"results", traces}};
    write_text(out / "metadata.json", meta.dump(2) + "\n");

    for (const auto& [tag, r] : traces.items())
        std::cout << tag << ": final residual " << format_double(r["final_residual"].get<double>())
                  << (r["final_error"].is_null() ? std::string()
                                                 : ", final relative error " +
                                                       format_double(r["final_error"].get<double>()))
                  << '\n';
    if (total_clipped) std::cout << "clipped pixels: " << total_clipped << '\n';
    return ok;
}

// ---------------------------------------------------------------------------
// verify-claim

int cmd_verify_claim(const ClaimConfig& cfg) {
    const Rational M = parse_rational_arg(cfg.M, "M");
    const Rational alpha0 = parse_rational_arg(cfg.alpha0, "alpha0");
    if (M < 2) throw UsageError("--M must be >= 2");
    if (sgn(alpha0) <= 0) throw UsageError("--alpha0 must be positive");
    if (cfg.k < 2) throw UsageError("--k must be >= 2");
    if (cfg.k != 5) std::cerr << "warning: k != 5 is experimental; the construction is only proven for k = 5\n";
    if (cfg.n1_max < 2) throw UsageError("--n1-max must be >= 2");
    if (cfg.j_extra < static_cast<std::size_t>(cfg.k) + 2) throw UsageError("--j-extra must be >= k + 2");
    const seqspace::Variant v = parse_variant(cfg.variant);

    seqspace::SequenceParams p;
    if (cfg.tamper_delta.empty()) {
        p = seqspace::params_from(M, alpha0, cfg.k);
    } else {
        p = seqspace::params_with_delta(M, alpha0, cfg.k, parse_rational_arg(cfg.tamper_delta, "tamper-delta"));
    }

    const seqspace::ClaimReport rep = seqspace::verify_claim(p, cfg.n1_max, cfg.j_extra, v);
    if (!cfg.csv.empty()) {
        if (cfg.csv == "-") {
            io::write_claim_csv(std::cout, rep);
        } else {
            std::ofstream out(cfg.csv);
            if (!out) throw IoError("cannot create " + cfg.csv);
            io::write_claim_csv(out, rep);
            if (!out) throw IoError("write failed: " + cfg.csv);
        }
    }
    if (cfg.csv != "-") std::cout << io::claim_summary(rep) << '\n';
    if (rep.all_pass) return ok;
    for (const auto& s : rep.parameter_violations) std::cerr << "violation: parameters: " << s << '\n';
    for (const auto& w : rep.violations) {
        std::cerr << "violation: " << io::describe(w) << '\n';
        if (&w - rep.violations.data() >= 9) {
            std::cerr << "... " << rep.violations.size() - 10 << " more\n";
            break;
        }
    }
    return claim_violation;
}

// ---------------------------------------------------------------------------
// seq-oracle

int cmd_seq_oracle(const OracleConfig& cfg) {
    const Rational M = parse_rational_arg(cfg.M, "M");
    const Rational alpha0 = parse_rational_arg(cfg.alpha0, "alpha0");
    if (M < 2) throw UsageError("--M must be >= 2");
    if (sgn(alpha0) <= 0) throw UsageError("--alpha0 must be positive");
    if (cfg.dim < cfg.steps + 15) throw UsageError("--dim must be at least steps + 15");
    if (!(cfg.tol > 0)) throw UsageError("--tol must be positive");
    const seqspace::Variant v = parse_variant(cfg.variant);
    const seqspace::SequenceParams p = seqspace::params_from(M, alpha0);

    bool all_ok = true, all_converged = true;
    std::cout << "n,index,closed_form,oracle,l2_discrepancy,iterations,converged\n";
    for (std::size_t n = 0; n <= cfg.steps; ++n) {
        const seqspace::IstaResult r = seqspace::ista_oracle(p, n, cfg.dim, v);
        const auto cf = seqspace::closed_form_iterate(n, p, v);
        const Vector ref = seqspace::to_dense(cf, cfg.dim);
        const double d = distance2(r.solution, ref);
        const std::size_t idx = n + 2;
        std::cout << n << ',' << idx << ',' << format_double(ref[idx - 1]) << ',' << format_double(r.solution[idx - 1])
                  << ',' << format_double(d) << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
        all_converged = all_converged && r.converged;
        all_ok = all_ok && d <= cfg.tol;
    }
    if (!all_converged) {
        std::cerr << "oracle did not converge within the iteration cap\n";
        return oracle_failure;
    }
    if (!all_ok) {
        std::cerr << "oracle discrepancy exceeds --tol\n";
        return oracle_failure;
    }
    return ok;
}

// ---------------------------------------------------------------------------
// diagnostics

engine::MultiscaleTrace load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return io::trace_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw IoError(path + ": not a trace JSON file (" + e.what() + ")");
    }
}

int cmd_parseval(const DiagConfig& cfg) {
    const engine::MultiscaleTrace tr = load_trace(cfg.trace);
    const engine::ParsevalReport rep =
        engine::parseval_from_steps(tr.data_norm_sq, tr.steps, tr.homogeneous, tr.alpha, tr.beta, tr.mode);
    std::cout << io::to_json(rep).dump(2) << '\n';
    return ok;
}

int cmd_monotonicity(const DiagConfig& cfg) {
    const engine::MultiscaleTrace tr = load_trace(cfg.trace);
    if (tr.steps.empty()) throw IoError(cfg.trace + ": trace has no steps");
    std::cout << "quantity,n,previous,current,relative_increase\n";
    for (const auto& v : engine::check_residual_monotonicity(tr, cfg.slack))
        std::cout << "residual," << v.n << ',' << format_double(v.previous) << ',' << format_double(v.current) << ','
                  << format_double(v.relative_increase) << '\n';
    for (const auto& v : engine::check_distance_monotonicity(tr, cfg.slack))
        std::cout << "distance," << v.n << ',' << format_double(v.previous) << ',' << format_double(v.current) << ','
                  << format_double(v.relative_increase) << '\n';
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale decomposition experiments and exact counterexample certification"};
    app.set_config("--config", "", "TOML file with option values; command-line flags take precedence");
    app.require_subcommand(1);

    DeblurConfig dc;
    auto* deb = app.add_subcommand("deblur", "Gaussian deblurring with multiscale and single-step regularization");
    deb->add_flag("--phantom", dc.use_phantom, "Use the built-in synthetic test object");
    deb->add_option("--phantom-size", dc.phantom_size, "Side length of the phantom")->capture_default_str();
    deb->add_option("--phantom-seed", dc.phantom_seed, "Seed of the phantom layout")->capture_default_str();
    deb->add_option("--input", dc.input, "Clean 8-bit square PGM to blur and restore");
    deb->add_option("--mode", dc.mode, "multiscale, single-step or both")->capture_default_str();
    deb->add_option("--steps", dc.steps, "Number of scales (default 40 noiseless, 20 noisy)");
    deb->add_option("--lambda0", dc.lambda0, "lambda_1")->capture_default_str();
    deb->add_option("--factor", dc.factor, "lambda_{n+1} / lambda_n")->capture_default_str();
    deb->add_option("--kernel-size", dc.kernel_size, "Odd blur kernel side")->capture_default_str();
    deb->add_option("--kernel-sigma", dc.kernel_sigma, "Blur standard deviation in pixels")->capture_default_str();
    deb->add_option("--noise-var", dc.noise_var, "Variance of the additive Gaussian noise")->capture_default_str();
    deb->add_option("--seed", dc.seed, "Noise seed")->capture_default_str();
    deb->add_option("--delta", dc.delta, "Smoothing offset of the H1 regularizer")->capture_default_str();
    deb->add_flag("--warm-start", dc.warm_start, "Single-step: start each solve from the previous minimizer");
    deb->add_option("--snapshot-every", dc.snapshot_every, "Write sigma_n every s steps (0: never)")
        ->capture_default_str();
    deb->add_option("--tau", dc.solver.tau, "Inner relative tolerance")->capture_default_str();
    deb->add_option("--max-iters", dc.solver.max_iters, "Inner iteration cap")->capture_default_str();
    deb->add_option("--alpha-min", dc.solver.alpha_min, "Smallest BB steplength")->capture_default_str();
    deb->add_option("--alpha-max", dc.solver.alpha_max, "Largest BB steplength")->capture_default_str();
    deb->add_option("--armijo-c", dc.solver.armijo_c, "Sufficient decrease constant")->capture_default_str();
    deb->add_option("--armijo-shrink", dc.solver.armijo_shrink, "Backtracking factor")->capture_default_str();
    deb->add_option("--bb-policy", dc.bb_policy, "adaptive, alternate, bb1 or bb2")->capture_default_str();
    deb->add_option("--out", dc.out, "Output directory")->capture_default_str();

    ClaimConfig cc;
    auto* vc = app.add_subcommand("verify-claim", "Exact certification of the coefficient inequalities");
    vc->add_option("--M", cc.M, "Base M >= 2 (rational, e.g. 2 or 5/2)")->capture_default_str();
    vc->add_option("--alpha0", cc.alpha0, "alpha_0 > 0 (rational)")->capture_default_str();
    vc->add_option("--n1-max", cc.n1_max, "Largest n1")->capture_default_str();
    vc->add_option("--j-extra", cc.j_extra, "Check j up to n1 + j_extra")->capture_default_str();
    vc->add_option("--variant", cc.variant, "first (weights j) or second (weights sqrt j)")->capture_default_str();
    vc->add_option("--tamper-delta", cc.tamper_delta, "Replace delta (negative control)");
    vc->add_option("--k", cc.k, "Support length k (experimental unless 5)")->capture_default_str();
    vc->add_option("--csv", cc.csv, "Write the per-(n1,j) table here ('-' for stdout)");

    OracleConfig oc;
    auto* so = app.add_subcommand("seq-oracle", "Compare closed-form iterates with a proximal-gradient solve");
    so->add_option("--M", oc.M, "Base M >= 2")->capture_default_str();
    so->add_option("--alpha0", oc.alpha0, "alpha_0 > 0")->capture_default_str();
    so->add_option("--steps", oc.steps, "Largest step n")->capture_default_str();
    so->add_option("--dim", oc.dim, "Truncation dimension")->capture_default_str();
    so->add_option("--tol", oc.tol, "Allowed l2 discrepancy")->capture_default_str();
    so->add_option("--variant", oc.variant, "first or second")->capture_default_str();

    DiagConfig gc;
    auto* dg = app.add_subcommand("diagnostics", "Checks on a saved trace JSON");
    dg->require_subcommand(1);
    auto* dp = dg->add_subcommand("parseval", "Energy split of a multiscale trace");
    dp->add_option("--trace", gc.trace, "Trace JSON written by deblur")->required();
    auto* dm = dg->add_subcommand("monotonicity", "Steps where the residual or truth distance increased");
    dm->add_option("--trace", gc.trace, "Trace JSON written by deblur")->required();
    dm->add_option("--slack", gc.slack, "Relative slack")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ok : usage;
    }

    try {
        if (deb->parsed()) return cmd_deblur(dc);
        if (vc->parsed()) return cmd_verify_claim(cc);
        if (so->parsed()) return cmd_seq_oracle(oc);
        if (dp->parsed()) return cmd_parseval(gc);
        if (dm->parsed()) return cmd_monotonicity(gc);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return numerical;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return io_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return numerical;
    }
    return usage;
}
