#pragma once

// CSV and JSON serialization of traces and claim reports.

#include "msdecomp/engine.hpp"
#include "msdecomp/seqspace.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <string>

namespace msdecomp::io {

using nlohmann::json;

inline std::string opt_field(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

/// n,lambda,residual,increment_R,error  (error left empty without a truth)
inline void write_trace_csv(std::ostream& os, const engine::MultiscaleTrace& tr) {
    os << "n,lambda,residual,increment_R,error\n";
    for (const auto& s : tr.steps)
        os << s.n << ',' << format_double(s.lambda) << ',' << format_double(s.residual) << ','
           << format_double(s.increment_R) << ',' << opt_field(s.error) << '\n';
}

/// n,lambda,multiscale,single_step relative errors for a paired run.
inline void write_paired_errors_csv(std::ostream& os, const engine::MultiscaleTrace& ms,
                                    const engine::MultiscaleTrace& ss) {
    if (ms.steps.size() != ss.steps.size()) throw std::invalid_argument("paired traces differ in length");
    os << "n,lambda,multiscale,single_step\n";
    for (std::size_t i = 0; i < ms.steps.size(); ++i)
        os << ms.steps[i].n << ',' << format_double(ms.steps[i].lambda) << ',' << opt_field(ms.steps[i].error) << ','
           << opt_field(ss.steps[i].error) << '\n';
}

inline json to_json(const engine::TraceStep& s) {
    json j{{"n", s.n},
           {"lambda", s.lambda},
           {"residual", s.residual},
           {"increment_R", s.increment_R},
           {"forward_increment_sq", s.forward_increment_sq},
           {"inner_iterations", s.inner_iterations},
           {"inner_converged", s.inner_converged},
           {"inner_stop", s.inner_stop}};
    j["error"] = s.error ? json(*s.error) : json(nullptr);
    j["distance"] = s.distance ? json(*s.distance) : json(nullptr);
    return j;
}

inline json to_json(const engine::MultiscaleTrace& tr) {
    json steps = json::array();
    for (const auto& s : tr.steps) steps.push_back(to_json(s));
    return json{{"mode", engine::mode_name(tr.mode)}, {"data_norm_sq", tr.data_norm_sq},
                {"homogeneous", tr.homogeneous},      {"alpha", tr.alpha},
                {"beta", tr.beta},                    {"steps", std::move(steps)}};
}

/// Reads the step table back; increments and snapshots are not stored.
inline engine::MultiscaleTrace trace_from_json(const json& j) {
    engine::MultiscaleTrace tr;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "multiscale") tr.mode = engine::Mode::multiscale;
    else if (mode == "single-step") tr.mode = engine::Mode::single_step;
    else throw std::invalid_argument("unknown trace mode: " + mode);
    tr.data_norm_sq = j.at("data_norm_sq").get<double>();
    tr.homogeneous = j.at("homogeneous").get<bool>();
    tr.alpha = j.at("alpha").get<double>();
    tr.beta = j.at("beta").get<double>();
    for (const auto& s : j.at("steps")) {
        engine::TraceStep st;
        st.n = s.at("n").get<long>();
        st.lambda = s.at("lambda").get<double>();
        st.residual = s.at("residual").get<double>();
        st.increment_R = s.at("increment_R").get<double>();
        st.forward_increment_sq = s.at("forward_increment_sq").get<double>();
        st.inner_iterations = s.value("inner_iterations", std::size_t{0});
        st.inner_converged = s.value("inner_converged", true);
        st.inner_stop = s.value("inner_stop", std::string());
        if (s.contains("error") && !s["error"].is_null()) st.error = s["error"].get<double>();
        if (s.contains("distance") && !s["distance"].is_null()) st.distance = s["distance"].get<double>();
        tr.steps.push_back(std::move(st));
    }
    return tr;
}

inline json to_json(const engine::ParsevalReport& r) {
    json terms = json::array();
    for (const auto& t : r.terms) terms.push_back({{"n", t.n}, {"forward_sq", t.forward_sq}, {"penalty", t.penalty}});
    return json{{"lhs", r.lhs},
                {"rhs", r.rhs()},
                {"tail", r.tail},
                {"relative_gap", r.relative_gap},
                {"guaranteed", r.guaranteed},
                {"status", r.guaranteed ? "identity applies" : "identity not guaranteed"},
                {"warnings", r.warnings},
                {"terms", std::move(terms)}};
}

inline std::string claim_summary(const seqspace::ClaimReport& rep) {
    std::string s = "# summary M=" + to_string(rep.params.M) + " alpha0=" + to_string(rep.params.alpha0) +
                    " k=" + std::to_string(rep.params.k) + " variant=" + seqspace::variant_name(rep.variant) +
                    " n1_max=" + std::to_string(rep.n1_max) + " j_extra=" + std::to_string(rep.j_extra) +
                    " relations=" + std::to_string(rep.relations_checked) +
                    " violations=" + std::to_string(rep.violations.size() + rep.parameter_violations.size()) +
                    " result=" + (rep.all_pass ? "PASS" : "FAIL");
    return s;
}

/// n1,j,A_num,A_den,pass followed by a `# summary ...` line.
inline void write_claim_csv(std::ostream& os, const seqspace::ClaimReport& rep) {
    os << "n1,j,A_num,A_den,pass\n";
    for (const auto& r : rep.rows)
        os << r.n1 << ',' << r.j << ',' << r.A.get_num().get_str() << ',' << r.A.get_den().get_str() << ','
           << (r.pass ? 1 : 0) << '\n';
    os << claim_summary(rep) << '\n';
}

inline std::string describe(const seqspace::ClaimViolation& v) {
    return "n1=" + std::to_string(v.n1) + " j=" + std::to_string(v.j) + " " + v.relation + ": lhs=" + to_string(v.lhs) +
           " rhs=" + to_string(v.rhs);
}

} // namespace msdecomp::io
