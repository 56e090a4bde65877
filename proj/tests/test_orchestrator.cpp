#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "ddvar/errors.hpp"
#include "ddvar/orchestrator.hpp"
#include "ddvar/rng.hpp"
#include "ddvar/swe.hpp"

using namespace ddvar;

namespace {

SpaceTimeGrid sphere_grid(int n, int levels, double dt) {
    return make_square_grid(n, levels, dt, 2.0 * M_PI / n, M_PI / (n + 1));
}

struct Twin {
    DdRunConfig cfg;
    SweState truth0;
};

// Identical-twin setup: noise-free strided observations of a truth that
// differs from the background by a height anomaly.
Twin make_twin(int n, int levels, uint64_t seed) {
    Twin tw;
    tw.cfg.grid = sphere_grid(n, levels, 200.0);
    tw.cfg.params = SweParams::for_grid(tw.cfg.grid);
    tw.cfg.background = balanced_zonal_state(tw.cfg.grid, tw.cfg.params, 20.0, 5200.0);
    tw.truth0 = tw.cfg.background;
    add_height_hill(tw.truth0, tw.cfg.grid, 40.0, n / 3, n / 2, 0.5);
    Trajectory truth = propagate(tw.truth0, tw.cfg.params, tw.cfg.grid, levels - 1);

    ObsLayout layout;
    layout.kind = ObsLayout::Kind::strided;
    layout.stride_t = 1;
    tw.cfg.obs = synth_observations(truth, layout, 0.0, seed);

    tw.cfg.b = make_diagonal_b(10.0, tw.cfg.grid);
    tw.cfg.sigma_r = 0.5;
    tw.cfg.gn.max_outer = 8;
    tw.cfg.gn.outer_tol = 1e-8;
    tw.cfg.gn.max_inner = 300;
    tw.cfg.gn.inner_tol = 1e-10;
    tw.cfg.mu = 0.03;
    tw.cfg.eps = 1e-6;
    tw.cfg.max_rounds = 60;
    return tw;
}

void check_reports_identical(const AnalysisReport& a, const AnalysisReport& b) {
    CHECK(linf_diff(a.analysis, b.analysis) == 0.0);
    REQUIRE(a.reconstruction.size() == b.reconstruction.size());
    for (size_t t = 0; t < a.reconstruction.size(); ++t)
        CHECK(linf_diff(a.reconstruction[t], b.reconstruction[t]) == 0.0);
    CHECK(a.analysis_cost.total == b.analysis_cost.total);
    CHECK(a.analysis_cost.background_term == b.analysis_cost.background_term);
    CHECK(a.analysis_cost.observation_term == b.analysis_cost.observation_term);
    CHECK(a.reconstruction_cost == b.reconstruction_cost);
    CHECK(a.winner_j == b.winner_j);
    CHECK(a.winner_i == b.winner_i);
    CHECK(a.winner_cost == b.winner_cost);
    CHECK(a.candidate_costs == b.candidate_costs);
    CHECK(a.rounds == b.rounds);
    CHECK(a.converged == b.converged);
    CHECK(a.final_step_norm == b.final_step_norm);
    CHECK(a.rho == b.rho);
    CHECK(a.outer_counts == b.outer_counts);
    CHECK(a.inner_maxima == b.inner_maxima);
    REQUIRE(a.history.size() == b.history.size());
    for (size_t r = 0; r < a.history.size(); ++r) {
        CHECK(a.history[r].outer_iterations == b.history[r].outer_iterations);
        CHECK(a.history[r].inner_iterations == b.history[r].inner_iterations);
        CHECK(a.history[r].cost.total == b.history[r].cost.total);
        CHECK(a.history[r].step_norm == b.history[r].step_norm);
    }
}

}  // namespace

TEST_CASE("one subdomain reproduces the undecomposed entry point bit for bit") {
    Twin tw = make_twin(8, 4, 40u);
    DdRunConfig one = tw.cfg;
    one.q = 1;
    one.p1 = 1;
    one.p2 = 1;

    // run_global resets whatever decomposition the config asks for.
    DdRunConfig wide = tw.cfg;
    wide.q = 2;
    wide.p1 = 2;
    wide.o_x = 1;
    wide.o_t = 1;

    AnalysisReport a = run_dd(one);
    AnalysisReport b = run_global(wide);
    check_reports_identical(a, b);

    CHECK(a.converged);
    CHECK(a.candidate_costs.size() == 1);
    CHECK(a.winner_j == 1);
    CHECK(a.winner_i == 1);
    // A single full-cover subdomain makes the zero-padded candidate, the
    // reconstruction and the re-propagated analysis the same trajectory.
    CHECK(a.winner_cost == a.reconstruction_cost);
    CHECK(a.reconstruction_cost == a.analysis_cost.total);
}

TEST_CASE("worker count never changes the analysis") {
    Twin tw = make_twin(8, 4, 41u);
    tw.cfg.q = 2;
    tw.cfg.p1 = 2;
    tw.cfg.o_x = 1;
    tw.cfg.o_t = 1;

    tw.cfg.workers = 1;
    AnalysisReport serial = run_dd(tw.cfg);
    tw.cfg.workers = 4;
    AnalysisReport parallel = run_dd(tw.cfg);
    tw.cfg.workers = 3;  // uneven split across the four subdomains
    AnalysisReport odd = run_dd(tw.cfg);

    check_reports_identical(serial, parallel);
    check_reports_identical(serial, odd);

    // And a repeated run is a byte-for-byte replay.
    tw.cfg.workers = 4;
    AnalysisReport again = run_dd(tw.cfg);
    check_reports_identical(parallel, again);
}

TEST_CASE("decomposed rounds assimilate the observations") {
    Twin tw = make_twin(8, 4, 42u);
    tw.cfg.q = 2;
    tw.cfg.p1 = 2;
    tw.cfg.o_x = 1;
    tw.cfg.o_t = 1;
    tw.cfg.workers = 4;
    tw.cfg.eps = 5e-8;

    AnalysisReport rep = run_dd(tw.cfg);
    AssimSetup setup = assim_setup_from(tw.cfg);

    const int QP = 4;
    CHECK(rep.converged);
    CHECK(rep.rounds >= 2);
    CHECK(rep.history.size() == static_cast<size_t>(rep.rounds) * QP);
    CHECK(rep.round_controls.size() == static_cast<size_t>(rep.rounds) + 1);
    CHECK(rep.candidate_costs.size() == QP);

    // Canonical record order within each round, costs finite and split
    // consistently.
    Decomposition dec = build_decomposition(tw.cfg.grid, 2, 2, 1, 1, 0, 1);
    for (int r = 0; r < rep.rounds; ++r)
        for (int s = 0; s < QP; ++s) {
            const RoundRecord& rec = rep.history[static_cast<size_t>(r) * QP + s];
            CHECK(rec.round == r + 1);
            CHECK(rec.j == dec.subdomains[s].j);
            CHECK(rec.i == dec.subdomains[s].i);
            CHECK(rec.outer_iterations >= 0);
            CHECK(rec.inner_iterations >= 0);
            CHECK(rec.cost.total >= 0.0);
            CHECK(std::isfinite(rec.cost.total));
            CHECK(rec.cost.total ==
                  rec.cost.background_term + tw.cfg.lambda * rec.cost.observation_term +
                      tw.cfg.mu * rec.cost.overlap_term);
        }

    // The analysis fits the data better than the background, and the
    // iteration product bookkeeping is the max over subdomains.
    double j_bg = global_cost(tw.cfg.background, setup).total;
    CHECK(rep.analysis_cost.total < j_bg);
    int rho = 0;
    for (int s = 0; s < QP; ++s) rho = std::max(rho, rep.outer_counts[s] * rep.inner_maxima[s]);
    CHECK(rep.rho == rho);
    CHECK(rep.rho > 0);

    // The decomposed iteration product never exceeds the undecomposed one.
    AnalysisReport glob = run_global(tw.cfg);
    CHECK(rep.rho <= glob.rho);

    // The undecomposed minimum bounds the gathered candidate from below.
    CHECK(glob.analysis_cost.total <=
          rep.winner_cost + 1e-8 * (1.0 + glob.analysis_cost.total));
    // The reconstruction lands near the undecomposed minimum.
    double rel = (rep.analysis_cost.total - glob.analysis_cost.total) /
                 std::max(glob.analysis_cost.total, 1e-300);
    CHECK(rel > -1e-9);  // cannot beat the true minimum
    CHECK(rel < 2e-4);
}

TEST_CASE("error tables start at the background and shrink on a twin") {
    Twin tw = make_twin(8, 4, 43u);
    tw.cfg.q = 2;
    tw.cfg.p1 = 2;
    tw.cfg.o_x = 1;
    tw.cfg.o_t = 1;
    tw.cfg.workers = 2;

    AnalysisReport rep = run_dd(tw.cfg);
    ETable table = convergence_history(rep, tw.cfg, tw.truth0);

    REQUIRE(table.e.size() == static_cast<size_t>(rep.rounds) + 1);
    REQUIRE(table.rounds.size() == table.e.size());
    CHECK(table.rounds.front() == 0);
    CHECK(table.rounds.back() == rep.rounds);

    // Row 0 measures the restricted background against the truth trajectory.
    Decomposition dec = build_decomposition(tw.cfg.grid, 2, 2, 1, 1, 0, 1);
    std::vector<SweState> truth_levels =
        propagate(tw.truth0, tw.cfg.params, tw.cfg.grid, tw.cfg.grid.M - 1).states;
    std::vector<SweState> bg_levels =
        propagate(tw.cfg.background, tw.cfg.params, tw.cfg.grid, tw.cfg.grid.M - 1).states;
    for (size_t s = 0; s < dec.subdomains.size(); ++s) {
        const Subdomain& sub = dec.subdomains[s];
        int t0 = sub.time_range.start;
        double want = 0.0;
        for (int var = 0; var < 3; ++var)
            for (int j = 0; j < tw.cfg.grid.nlat; ++j)
                for (int i = 0; i < tw.cfg.grid.nlon; ++i)
                    if (sub.lon_range.contains(i) && sub.lat_range.contains(j))
                        want = std::max(want, std::fabs(truth_levels[t0].var(var).at(i, j) -
                                                        bg_levels[t0].var(var).at(i, j)));
        CHECK(table.e[0][s] == want);
        CHECK(table.e[0][s] > 0.0);
    }

    // Assimilating noise-free data pulls the worst subdomain toward truth.
    double e0 = 0.0, eN = 0.0;
    for (size_t s = 0; s < dec.subdomains.size(); ++s) {
        e0 = std::max(e0, table.e.front()[s]);
        eN = std::max(eN, table.e.back()[s]);
    }
    CHECK(eN < e0);

    SweState bad(4, 4);
    CHECK_THROWS_AS(convergence_history(rep, tw.cfg, bad), DimensionError);
}

TEST_CASE("round cap is flagged but not fatal") {
    Twin tw = make_twin(8, 4, 44u);
    tw.cfg.q = 2;
    tw.cfg.o_t = 1;
    tw.cfg.max_rounds = 1;

    AnalysisReport rep = run_dd(tw.cfg);
    CHECK_FALSE(rep.converged);
    CHECK(rep.rounds == 1);
    CHECK(rep.history.size() == 2);
    CHECK(std::isfinite(rep.analysis_cost.total));
    CHECK(all_finite(rep.analysis));
}

TEST_CASE("run configuration is validated") {
    Twin tw = make_twin(8, 4, 45u);

    DdRunConfig bad = tw.cfg;
    bad.workers = 0;
    CHECK_THROWS_AS(run_dd(bad), ConfigError);

    bad = tw.cfg;
    bad.eps = 0.0;
    CHECK_THROWS_AS(run_dd(bad), ConfigError);

    bad = tw.cfg;
    bad.max_rounds = 0;
    CHECK_THROWS_AS(run_dd(bad), ConfigError);

    bad = tw.cfg;
    bad.background = SweState(4, 4);
    CHECK_THROWS_AS(run_dd(bad), DimensionError);

    bad = tw.cfg;
    bad.b = make_diagonal_b(3.0, sphere_grid(6, 4, 400.0));
    CHECK_THROWS_AS(run_dd(bad), DimensionError);
}
