#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "ddvar/errors.hpp"
#include "ddvar/report_io.hpp"
#include "ddvar/spacetime.hpp"

using namespace ddvar;
using nlohmann::json;

namespace {

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos < s.size()) {
        size_t nl = s.find('\n', pos);
        if (nl == std::string::npos) {
            out.push_back(s.substr(pos));
            break;
        }
        out.push_back(s.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

CostBreakdown breakdown(double bg, double obs, double ovl, double lambda, double mu) {
    CostBreakdown c;
    c.background_term = bg;
    c.observation_term = obs;
    c.overlap_term = ovl;
    c.lambda = lambda;
    c.mu = mu;
    c.total = bg + lambda * obs + mu * ovl;
    return c;
}

AnalysisReport sample_report() {
    AnalysisReport rep;
    rep.analysis_cost = breakdown(1.5, 2.25, 0.5, 2.0, 0.25);
    rep.reconstruction_cost = 6.5;
    rep.winner_j = 2;
    rep.winner_i = 1;
    rep.winner_cost = 6.25;
    rep.candidate_costs = {7.0, 6.25, 8.5};
    rep.rounds = 2;
    rep.converged = true;
    rep.final_step_norm = 4.5e-9;
    rep.outer_counts = {3, 2, 4};
    rep.inner_maxima = {11, 9, 17};
    rep.rho = 68;
    rep.seconds_local = 0.5;
    rep.seconds_exchange = 0.0625;
    rep.seconds_gather = 0.125;

    RoundRecord r1;
    r1.round = 1;
    r1.j = 1;
    r1.i = 2;
    r1.outer_iterations = 3;
    r1.inner_iterations = 21;
    r1.max_inner = 11;
    r1.cost = breakdown(0.5, 1.0, 0.25, 2.0, 0.25);
    r1.step_norm = 0.75;
    r1.converged = false;
    r1.stop_reason = "max_outer";
    RoundRecord r2 = r1;
    r2.round = 2;
    r2.step_norm = 3.0e-10;
    r2.converged = true;
    r2.stop_reason = "small_step";
    rep.history = {r1, r2};
    return rep;
}

}  // namespace

TEST_CASE("report document carries every result section") {
    AnalysisReport rep = sample_report();
    std::string text = report_to_json(rep);
    CHECK(text.back() == '\n');
    CHECK(text.substr(0, 2) == "{\n");

    json j = json::parse(text);
    CHECK(j["magic"] == "ddvar-report");
    CHECK(j["converged"] == true);
    CHECK(j["rounds"] == 2);
    CHECK(j["final_step_norm"] == 4.5e-9);
    CHECK(j["analysis_cost"]["background_term"] == 1.5);
    CHECK(j["analysis_cost"]["lambda"] == 2.0);
    CHECK(j["analysis_cost"]["total"] == 1.5 + 2.0 * 2.25 + 0.25 * 0.5);
    CHECK(j["reconstruction_cost"] == 6.5);
    CHECK(j["winner"]["j"] == 2);
    CHECK(j["winner"]["i"] == 1);
    CHECK(j["winner"]["cost"] == 6.25);
    CHECK(j["candidate_costs"].size() == 3);
    CHECK(j["candidate_costs"][2] == 8.5);
    CHECK(j["rho"] == 68);
    CHECK(j["outer_counts"] == json({3, 2, 4}));
    CHECK(j["inner_maxima"] == json({11, 9, 17}));

    REQUIRE(j["history"].size() == 2);
    const json& h = j["history"][1];
    CHECK(h["round"] == 2);
    CHECK(h["j"] == 1);
    CHECK(h["i"] == 2);
    CHECK(h["outer_iterations"] == 3);
    CHECK(h["inner_iterations"] == 21);
    CHECK(h["max_inner"] == 11);
    CHECK(h["cost"]["observation_term"] == 1.0);
    CHECK(h["step_norm"] == 3.0e-10);
    CHECK(h["converged"] == true);
    CHECK(h["stop_reason"] == "small_step");
}

TEST_CASE("convergence table mirrors the round history") {
    AnalysisReport rep = sample_report();
    auto lines = split_lines(convergence_csv(rep));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "round,j,i,outer_iterations,inner_iterations,max_inner,cost_total,cost_background,"
          "cost_observation,cost_overlap,step_norm,converged,stop_reason");
    CHECK(lines[1] == "1,1,2,3,21,11,2.5625,0.5,1,0.25,0.75,0,max_outer");
    CHECK(lines[2] == "2,1,2,3,21,11,2.5625,0.5,1,0.25,3e-10,1,small_step");
}

TEST_CASE("timings document carries the caller's wall clock") {
    json j = json::parse(timings_to_json(sample_report(), 12.5));
    CHECK(j["magic"] == "ddvar-timings");
    CHECK(j["seconds_local"] == 0.5);
    CHECK(j["seconds_exchange"] == 0.0625);
    CHECK(j["seconds_gather"] == 0.125);
    CHECK(j["seconds_wall"] == 12.5);
}

TEST_CASE("error table columns follow the canonical subdomain order") {
    const double pi = std::numbers::pi;
    SpaceTimeGrid g = make_square_grid(4, 2, 60.0, 2.0 * pi / 4, pi / 5);
    Decomposition dec = build_decomposition(g, 2, 2, 1, 1, 0, 0);

    ETable table;
    table.rounds = {0, 1};
    table.e = {{1.0, 2.0, 3.0, 4.0}, {0.5, 0.25, 0.125, 0.0625}};
    auto lines = split_lines(e_table_csv(table, dec));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "round,e_j1_i1,e_j1_i2,e_j2_i1,e_j2_i2");
    CHECK(lines[1] == "0,1,2,3,4");
    CHECK(lines[2] == "1,0.5,0.25,0.125,0.0625");

    table.e = {{1.0, 2.0}};
    table.rounds = {0};
    CHECK_THROWS_AS(e_table_csv(table, dec), DimensionError);
}

TEST_CASE("rmse rows measure per-field and combined distances") {
    SweState a(4, 4), b(4, 4);
    for (double& x : a.u.v) x = 3.0;
    for (double& x : a.v.v) x = -4.0;
    RmseRow row = rmse_row("analysis", a, b);
    CHECK(row.label == "analysis");
    CHECK(row.u == 3.0);
    CHECK(row.v == 4.0);
    CHECK(row.h == 0.0);
    CHECK(row.combined == std::sqrt(400.0 / 48.0));

    auto lines = split_lines(rmse_csv({row}));
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "state,rmse_u,rmse_v,rmse_h,rmse_combined");
    CHECK(lines[1].substr(0, 13) == "analysis,3,4,");

    SweState c(3, 4);
    CHECK_THROWS_AS(rmse_row("bad", a, c), DimensionError);
}

TEST_CASE("manifest echoes the config in order and lists output hashes") {
    RunManifest m;
    m.command = "run-dd";
    m.seed = 42;
    m.host = "node-7";
    m.started_utc = "2026-02-11T08:30:00Z";
    m.wall_seconds = 3.25;
    m.finalized = true;
    m.config = {{"grid.n", "8"}, {"grid.M", "4"}, {"assim.lambda", "1"}};
    m.outputs = {{"report.json", "aa"}, {"convergence.csv", "bb"}};

    // ordered_json on the parse side too: plain json would re-sort the
    // config keys alphabetically and hide the order under test.
    nlohmann::ordered_json j = nlohmann::ordered_json::parse(manifest_to_json(m));
    CHECK(j["magic"] == "ddvar-manifest");
    CHECK(j["command"] == "run-dd");
    CHECK(j["version"] == std::string(kArtifactVersion));
    CHECK(j["seed"] == 42);
    CHECK(j["host"] == "node-7");
    CHECK(j["finalized"] == true);

    // ordered_json keeps insertion order, so the echo preserves the
    // registry's key order.
    std::vector<std::string> keys;
    for (auto it = j["config"].begin(); it != j["config"].end(); ++it)
        keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"grid.n", "grid.M", "assim.lambda"});
    CHECK(j["config"]["grid.M"] == "4");

    REQUIRE(j["outputs"].size() == 2);
    CHECK(j["outputs"][0]["name"] == "report.json");
    CHECK(j["outputs"][1]["sha256"] == "bb");

    RunManifest fresh;
    fresh.command = "twin";
    json j0 = json::parse(manifest_to_json(fresh));
    CHECK(j0["finalized"] == false);
    CHECK(j0["outputs"].empty());
}
