#include "ddvar/report_io.hpp"

#include <cmath>
#include <json.hpp>

#include "ddvar/errors.hpp"
#include "ddvar/io.hpp"

namespace ddvar {

namespace {

nlohmann::ordered_json breakdown_json(const CostBreakdown& c) {
    nlohmann::ordered_json j;
    j["background_term"] = c.background_term;
    j["observation_term"] = c.observation_term;
    j["overlap_term"] = c.overlap_term;
    j["lambda"] = c.lambda;
    j["mu"] = c.mu;
    j["total"] = c.total;
    return j;
}

}  // namespace

std::string report_to_json(const AnalysisReport& rep) {
    nlohmann::ordered_json j;
    j["magic"] = "ddvar-report";
    j["converged"] = rep.converged;
    j["rounds"] = rep.rounds;
    j["final_step_norm"] = rep.final_step_norm;
    j["analysis_cost"] = breakdown_json(rep.analysis_cost);
    j["reconstruction_cost"] = rep.reconstruction_cost;
    j["winner"] = {{"j", rep.winner_j}, {"i", rep.winner_i}, {"cost", rep.winner_cost}};
    j["candidate_costs"] = rep.candidate_costs;
    j["rho"] = rep.rho;
    j["outer_counts"] = rep.outer_counts;
    j["inner_maxima"] = rep.inner_maxima;
    nlohmann::ordered_json history = nlohmann::ordered_json::array();
    for (const RoundRecord& r : rep.history) {
        nlohmann::ordered_json h;
        h["round"] = r.round;
        h["j"] = r.j;
        h["i"] = r.i;
        h["outer_iterations"] = r.outer_iterations;
        h["inner_iterations"] = r.inner_iterations;
        h["max_inner"] = r.max_inner;
        h["cost"] = breakdown_json(r.cost);
        h["step_norm"] = r.step_norm;
        h["converged"] = r.converged;
        h["stop_reason"] = r.stop_reason;
        history.push_back(std::move(h));
    }
    j["history"] = std::move(history);
    return j.dump(2) + "\n";
}

std::string convergence_csv(const AnalysisReport& rep) {
    std::string out = csv_row({"round", "j", "i", "outer_iterations", "inner_iterations",
                               "max_inner", "cost_total", "cost_background",
                               "cost_observation", "cost_overlap", "step_norm", "converged",
                               "stop_reason"});
    for (const RoundRecord& r : rep.history)
        out += csv_row({std::to_string(r.round), std::to_string(r.j), std::to_string(r.i),
                        std::to_string(r.outer_iterations), std::to_string(r.inner_iterations),
                        std::to_string(r.max_inner), format_double(r.cost.total),
                        format_double(r.cost.background_term),
                        format_double(r.cost.observation_term),
                        format_double(r.cost.overlap_term), format_double(r.step_norm),
                        r.converged ? "1" : "0", r.stop_reason});
    return out;
}

std::string timings_to_json(const AnalysisReport& rep, double wall_seconds) {
    nlohmann::ordered_json j;
    j["magic"] = "ddvar-timings";
    j["seconds_local"] = rep.seconds_local;
    j["seconds_exchange"] = rep.seconds_exchange;
    j["seconds_gather"] = rep.seconds_gather;
    j["seconds_wall"] = wall_seconds;
    return j.dump(2) + "\n";
}

std::string e_table_csv(const ETable& table, const Decomposition& dec) {
    if (!table.e.empty() && table.e.front().size() != dec.subdomains.size())
        throw DimensionError("e table: row width " +
                             std::to_string(table.e.front().size()) +
                             " does not match the decomposition's " +
                             std::to_string(dec.subdomains.size()) + " subdomains");
    std::vector<std::string> head{"round"};
    for (const Subdomain& s : dec.subdomains)
        head.push_back("e_j" + std::to_string(s.j) + "_i" + std::to_string(s.i));
    std::string out = csv_row(head);
    for (size_t r = 0; r < table.e.size(); ++r) {
        std::vector<std::string> row{std::to_string(table.rounds[r])};
        for (double v : table.e[r]) row.push_back(format_double(v));
        out += csv_row(row);
    }
    return out;
}

RmseRow rmse_row(const std::string& label, const SweState& state, const SweState& reference) {
    const Field2* a[3] = {&state.u, &state.v, &state.h};
    const Field2* b[3] = {&reference.u, &reference.v, &reference.h};
    RmseRow row;
    row.label = label;
    double* out[3] = {&row.u, &row.v, &row.h};
    double all = 0.0;
    size_t count = 0;
    for (int f = 0; f < 3; ++f) {
        if (a[f]->size() != b[f]->size())
            throw DimensionError("rmse: state and reference shapes differ");
        double acc = 0.0;
        for (size_t n = 0; n < a[f]->size(); ++n) {
            const double d = a[f]->v[n] - b[f]->v[n];
            acc += d * d;
        }
        *out[f] = std::sqrt(acc / static_cast<double>(a[f]->size()));
        all += acc;
        count += a[f]->size();
    }
    row.combined = std::sqrt(all / static_cast<double>(count));
    return row;
}

std::string rmse_csv(const std::vector<RmseRow>& rows) {
    std::string out = csv_row({"state", "rmse_u", "rmse_v", "rmse_h", "rmse_combined"});
    for (const RmseRow& r : rows)
        out += csv_row({r.label, format_double(r.u), format_double(r.v), format_double(r.h),
                        format_double(r.combined)});
    return out;
}

std::string manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["magic"] = "ddvar-manifest";
    j["command"] = m.command;
    j["version"] = m.version;
    j["seed"] = m.seed;
    j["host"] = m.host;
    j["started_utc"] = m.started_utc;
    j["wall_seconds"] = m.wall_seconds;
    j["finalized"] = m.finalized;
    nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
    for (const auto& [key, value] : m.config) cfg[key] = value;
    j["config"] = std::move(cfg);
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const ManifestFile& f : m.outputs)
        outs.push_back({{"name", f.name}, {"sha256", f.sha256_hex}});
    j["outputs"] = std::move(outs);
    return j.dump(2) + "\n";
}

}  // namespace ddvar
