#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "ddvar/cost.hpp"
#include "ddvar/errors.hpp"
#include "ddvar/local.hpp"
#include "ddvar/rng.hpp"
#include "ddvar/swe.hpp"

using namespace ddvar;

namespace {

SpaceTimeGrid sphere_grid(int n, int levels, double dt) {
    return make_square_grid(n, levels, dt, 2.0 * M_PI / n, M_PI / (n + 1));
}

SweState perturbed(const SweState& z, uint64_t seed, double s_wind, double s_height) {
    Rng rng(seed, "local-test-perturb");
    SweState out = z;
    for (double& v : out.u.v) v += s_wind * rng.normal();
    for (double& v : out.v.v) v += s_wind * rng.normal();
    for (double& v : out.h.v) v += s_height * rng.normal();
    return out;
}

struct TwinPieces {
    SpaceTimeGrid grid;
    SweParams params;
    SweState background;
    std::vector<SweState> bg_levels;
    ObservationSet obs;
};

TwinPieces make_twin(int n, int levels, double coverage, double sigma_o, uint64_t seed) {
    TwinPieces tp;
    tp.grid = sphere_grid(n, levels, 400.0);
    tp.params = SweParams::for_grid(tp.grid);
    tp.background = balanced_zonal_state(tp.grid, tp.params, 20.0, 5200.0);
    SweState truth = tp.background;
    add_height_hill(truth, tp.grid, 40.0, n / 3, n / 2, 0.5);
    Trajectory truth_traj = propagate(truth, tp.params, tp.grid, levels - 1);
    ObsLayout layout;
    layout.kind = ObsLayout::Kind::random;
    layout.coverage = coverage;
    tp.obs = synth_observations(truth_traj, layout, sigma_o, seed);
    tp.bg_levels = propagate(tp.background, tp.params, tp.grid, levels - 1).states;
    return tp;
}

// Correctly sized neighbor tables with every entry set to `fill`.
NeighborValues uniform_tables(const LocalSpec& spec, double fill) {
    NeighborValues nv;
    for (const auto& nb : spec.neighbors)
        nv.emplace_back(nb.region.size() * SpaceTimeGrid::nvars, fill);
    return nv;
}

}  // namespace

TEST_CASE("plan geometry: windows, masks, adjacency and restricted observations") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 31u);
    Decomposition dec = build_decomposition(tp.grid, 2, 2, 1, 1, 0, 1);
    double sigma_r = 0.4;
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, 1.7, 0.9, sigma_r);

    REQUIRE(plan.locals.size() == 4);
    for (size_t s = 0; s < plan.locals.size(); ++s) {
        const LocalSpec& spec = plan.locals[s];
        const Subdomain& sub = dec.subdomains[s];
        CHECK(spec.index == static_cast<int>(s));
        CHECK(spec.sub.j == sub.j);
        CHECK(spec.sub.i == sub.i);
        CHECK(spec.t0 == sub.time_range.start);
        CHECK(spec.nsteps == sub.time_range.length - 1);

        int ones = 0;
        for (int j = 0; j < tp.grid.nlat; ++j)
            for (int i = 0; i < tp.grid.nlon; ++i) {
                double m = spec.mask.m.at(i, j);
                CHECK((m == 0.0 || m == 1.0));
                bool inside = sub.lon_range.contains(i) && sub.lat_range.contains(j);
                CHECK(m == (inside ? 1.0 : 0.0));
                ones += m == 1.0;
            }
        // p2 = 1 keeps the full latitude extent; the lon box is core + halos.
        CHECK(ones == sub.lon_range.length * tp.grid.nlat);

        for (const ResidualBlock& b : spec.obs_blocks) {
            CHECK(b.kind == BlockKind::observation);
            CHECK(b.level >= 0);
            CHECK(b.level <= spec.nsteps);
            CHECK(b.weight == 1.0 / (sigma_r * sigma_r));
            CHECK(b.selections.size() == b.target.size());
            CHECK(!b.selections.empty());
            int k = b.level + spec.t0;
            CHECK(tp.obs.time_slot(k) >= 0);
            for (const ObsLocation& loc : b.selections) {
                CHECK(sub.lon_range.contains(loc.lon));
                CHECK(sub.lat_range.contains(loc.lat));
            }
        }

        // Adjacency is symmetric and, with halos wrapping both ways on an
        // 8-point lon circle, every pair of subdomains shares a region.
        CHECK(spec.neighbors.size() == 3);
        for (const auto& nb : spec.neighbors) {
            CHECK(nb.index != static_cast<int>(s));
            CHECK(!nb.region.empty());
            const LocalSpec& other = plan.locals[static_cast<size_t>(nb.index)];
            bool back = false;
            for (const auto& onb : other.neighbors) back = back || onb.index == static_cast<int>(s);
            CHECK(back);
        }
    }

    // Every observation row lands in exactly as many local problems as there
    // are subdomains covering its space-time point.
    for (size_t slot = 0; slot < tp.obs.times.size(); ++slot) {
        int k = tp.obs.times[slot];
        for (size_t m = 0; m < tp.obs.locations[slot].size(); ++m) {
            const ObsLocation& loc = tp.obs.locations[slot][m];
            int covering = 0;
            for (const Subdomain& sub : dec.subdomains)
                covering += sub.contains(k, loc.lon, loc.lat) ? 1 : 0;
            int found = 0;
            for (const LocalSpec& spec : plan.locals)
                for (const ResidualBlock& b : spec.obs_blocks) {
                    if (b.level + spec.t0 != k) continue;
                    for (size_t r = 0; r < b.selections.size(); ++r)
                        if (b.selections[r] == loc && b.target[r] == tp.obs.values[slot][m])
                            ++found;
                }
            CHECK(covering >= 1);
            CHECK(found == covering);
        }
    }
}

TEST_CASE("overlap values run over level, latitude, longitude, variable") {
    SpaceTimeGrid grid = sphere_grid(6, 4, 300.0);
    OverlapRegion region;
    region.times = {1, 2};
    region.lons = {4, 5};
    region.lats = {2};

    std::vector<SweState> levels;
    for (int t = 0; t < 3; ++t) {
        SweState z(grid.nlon, grid.nlat);
        for (int var = 0; var < 3; ++var)
            for (int j = 0; j < grid.nlat; ++j)
                for (int i = 0; i < grid.nlon; ++i)
                    z.var(var).at(i, j) = ((t * 3 + var) * grid.nlat + j) * grid.nlon + i;
        levels.push_back(z);
    }

    // Window starts at global level 1, so region levels 1, 2 map to 0, 1.
    std::vector<double> got = overlap_values(region, 1, levels);
    std::vector<double> want;
    for (int t : region.times)
        for (int gj : region.lats)
            for (int gi : region.lons)
                for (int var = 0; var < 3; ++var)
                    want.push_back(levels[t - 1].var(var).at(gi, gj));
    REQUIRE(got.size() == want.size());
    for (size_t r = 0; r < got.size(); ++r) CHECK(got[r] == want[r]);

    region.times = {0};
    CHECK_THROWS_AS(overlap_values(region, 1, levels), DimensionError);
}

TEST_CASE("exchange hands every subdomain its neighbor's restriction") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 77u);
    Decomposition dec = build_decomposition(tp.grid, 2, 1, 1, 0, 0, 1);
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, 1.0, 1.0, 0.4);
    REQUIRE(plan.locals.size() == 2);
    REQUIRE(plan.locals[0].neighbors.size() == 1);
    REQUIRE(plan.locals[1].neighbors.size() == 1);

    // Two unrelated window trajectories so the restriction is nontrivial.
    std::vector<std::vector<SweState>> iterates(2);
    Trajectory a = propagate(perturbed(tp.background, 5u, 0.5, 8.0), tp.params, tp.grid, 3);
    Trajectory b = propagate(perturbed(tp.background, 6u, 0.5, 8.0), tp.params, tp.grid, 3);
    const LocalSpec& s0 = plan.locals[0];
    const LocalSpec& s1 = plan.locals[1];
    for (int l = 0; l <= s0.nsteps; ++l) iterates[0].push_back(a.states[s0.t0 + l]);
    for (int l = 0; l <= s1.nsteps; ++l) iterates[1].push_back(b.states[s1.t0 + l]);

    auto tables = exchange_overlaps(plan, iterates);
    REQUIRE(tables.size() == 2);
    REQUIRE(tables[0].size() == 1);
    REQUIRE(tables[1].size() == 1);

    // Received values equal the sender's trajectory sampled on the region.
    const OverlapRegion& r0 = s0.neighbors[0].region;
    size_t pos = 0;
    for (int t : r0.times)
        for (int gj : r0.lats)
            for (int gi : r0.lons)
                for (int var = 0; var < 3; ++var)
                    CHECK(tables[0][0][pos++] == b.states[t].var(var).at(gi, gj));
    CHECK(pos == tables[0][0].size());

    const OverlapRegion& r1 = s1.neighbors[0].region;
    pos = 0;
    for (int t : r1.times)
        for (int gj : r1.lats)
            for (int gi : r1.lons)
                for (int var = 0; var < 3; ++var)
                    CHECK(tables[1][0][pos++] == a.states[t].var(var).at(gi, gj));

    // Pure function of the iterates.
    auto again = exchange_overlaps(plan, iterates);
    CHECK(again[0][0] == tables[0][0]);
    CHECK(again[1][0] == tables[1][0]);

    iterates.pop_back();
    CHECK_THROWS_AS(exchange_overlaps(plan, iterates), DimensionError);
}

TEST_CASE("single subdomain: local cost equals the global cost") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 901u);
    Decomposition dec = build_decomposition(tp.grid, 1, 1, 1, 0, 0, 0);
    double lambda = 1.7, sigma_r = 0.4;
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, lambda, 0.9, sigma_r);
    REQUIRE(plan.locals.size() == 1);
    CHECK(plan.locals[0].neighbors.empty());

    SweState u = perturbed(tp.background, 17u, 1.0, 15.0);

    AssimSetup setup;
    setup.grid = tp.grid;
    setup.params = tp.params;
    setup.background = tp.background;
    setup.obs = tp.obs;
    setup.lambda = lambda;
    setup.mu = 0.9;
    setup.sigma_r = sigma_r;

    SUBCASE("diagonal background covariance, bitwise") {
        CovarianceFactor b = make_diagonal_b(3.0, tp.grid);
        setup.b = b;
        CostBreakdown lc =
            local_cost(plan, 0, b, tp.bg_levels, tp.bg_levels, NeighborValues{}, u);
        CostBreakdown gc = global_cost(u, setup);
        CHECK(lc.background_term == gc.background_term);
        CHECK(lc.observation_term == gc.observation_term);
        CHECK(lc.overlap_term == 0.0);
        CHECK(lc.total == gc.total);
    }

    SUBCASE("smoothing background covariance, to solver accuracy") {
        CovarianceFactor b = make_gaussian_b(2.0, 1.5, tp.grid);
        setup.b = b;
        CostBreakdown lc =
            local_cost(plan, 0, b, tp.bg_levels, tp.bg_levels, NeighborValues{}, u);
        CostBreakdown gc = global_cost(u, setup);
        CHECK(lc.background_term == doctest::Approx(gc.background_term).epsilon(1e-12));
        CHECK(lc.observation_term == gc.observation_term);
        CHECK(lc.overlap_term == 0.0);
        CHECK(lc.total == doctest::Approx(gc.total).epsilon(1e-12));
    }
}

TEST_CASE("matching restrictions zero the overlap penalty") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 55u);
    Decomposition dec = build_decomposition(tp.grid, 2, 2, 1, 1, 0, 1);
    double lambda = 1.3, mu = 2.0;
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, lambda, mu, 0.4);
    CovarianceFactor b = make_diagonal_b(2.0, tp.grid);

    // Every iterate is a slice of the one background trajectory, so each
    // neighbor target coincides with the local trajectory on the region.
    std::vector<std::vector<SweState>> iterates;
    for (const LocalSpec& spec : plan.locals) {
        std::vector<SweState> win(tp.bg_levels.begin() + spec.t0,
                                  tp.bg_levels.begin() + spec.t0 + spec.nsteps + 1);
        iterates.push_back(std::move(win));
    }
    auto tables = exchange_overlaps(plan, iterates);

    for (size_t s = 0; s < plan.locals.size(); ++s) {
        const SweState& u = tp.bg_levels[plan.locals[s].t0];
        CostBreakdown cb = local_cost(plan, static_cast<int>(s), b, tp.bg_levels, tp.bg_levels,
                                      tables[s], u);
        CHECK(cb.background_term == 0.0);
        CHECK(cb.overlap_term == 0.0);
        CHECK(cb.observation_term > 0.0);
        CHECK(cb.total == lambda * cb.observation_term);
    }
}

TEST_CASE("zero overlap multiplier reduces to the restricted functional") {
    TwinPieces tp = make_twin(8, 4, 0.25, 0.05, 13u);
    Decomposition dec = build_decomposition(tp.grid, 2, 1, 1, 0, 0, 1);
    double lambda = 1.6, sigma_r = 0.5, sigma_b = 4.0;
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, lambda, 0.0, sigma_r);
    CovarianceFactor b = make_diagonal_b(sigma_b, tp.grid);

    for (size_t s = 0; s < plan.locals.size(); ++s) {
        const LocalSpec& spec = plan.locals[s];
        SweState u = perturbed(tp.bg_levels[spec.t0], 100u + s, 0.8, 12.0);

        // Junk targets prove the penalty is inert in the total when mu = 0.
        NeighborValues junk = uniform_tables(spec, 123.0);
        CostBreakdown cb = local_cost(plan, static_cast<int>(s), b, tp.bg_levels, tp.bg_levels,
                                      junk, u);

        // Restricted functional evaluated directly: the full-width spatial
        // box makes the local model plain propagation over the window.
        SweState d0 = u;
        axpy(d0, -1.0, tp.bg_levels[spec.t0]);
        double bg = b.weighted_sq_norm(d0);
        Trajectory traj = propagate(u, tp.params, tp.grid, spec.nsteps);
        double obs_term = 0.0;
        double inv_r = 1.0 / (sigma_r * sigma_r);
        for (size_t slot = 0; slot < tp.obs.times.size(); ++slot) {
            int k = tp.obs.times[slot];
            if (k < spec.t0 || k > spec.t0 + spec.nsteps) continue;
            ObservationOperator H{tp.obs.locations[slot]};
            std::vector<double> y = H.apply(traj.states[k - spec.t0]);
            double acc = 0.0;
            for (size_t r = 0; r < y.size(); ++r) {
                double diff = tp.obs.values[slot][r] - y[r];
                acc += diff * diff * inv_r;
            }
            obs_term += acc;
        }

        CHECK(cb.background_term == bg);
        CHECK(cb.observation_term == obs_term);
        CHECK(cb.overlap_term > 0.0);
        CHECK(cb.total == bg + lambda * obs_term + 0.0 * cb.overlap_term);
    }
}

TEST_CASE("overlap penalty matches a hand-written sum") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 21u);
    Decomposition dec = build_decomposition(tp.grid, 2, 1, 1, 0, 0, 1);
    double mu = 2.5, sigma_b = 2.0;
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, 1.0, mu, 0.4);
    CovarianceFactor b = make_diagonal_b(sigma_b, tp.grid);

    const LocalSpec& spec = plan.locals[0];
    REQUIRE(spec.neighbors.size() == 1);
    const OverlapRegion& region = spec.neighbors[0].region;

    // A synthetic neighbor restriction with structure in every coordinate.
    NeighborValues nv(1);
    size_t total = region.size() * SpaceTimeGrid::nvars;
    for (size_t r = 0; r < total; ++r) nv[0].push_back(5100.0 + 0.25 * static_cast<double>(r));

    SweState u = perturbed(tp.background, 3u, 0.8, 10.0);
    CostBreakdown cb = local_cost(plan, 0, b, tp.bg_levels, tp.bg_levels, nv, u);

    Trajectory traj = propagate(u, tp.params, tp.grid, spec.nsteps);
    double w = 1.0 / (sigma_b * sigma_b);
    double ovl = 0.0;
    size_t pos = 0;
    for (int t : region.times) {
        double acc = 0.0;
        for (int gj : region.lats)
            for (int gi : region.lons)
                for (int var = 0; var < 3; ++var) {
                    double d = nv[0][pos++] - traj.states[t - spec.t0].var(var).at(gi, gj);
                    acc += d * d * w;
                }
        ovl += acc;
    }
    CHECK(cb.overlap_term == ovl);
    CHECK(cb.total == cb.background_term + 1.0 * cb.observation_term + mu * cb.overlap_term);
}

TEST_CASE("missing or misshapen neighbor data is a protocol error") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 47u);
    Decomposition dec = build_decomposition(tp.grid, 2, 1, 1, 0, 0, 1);
    DdPlan plan = build_dd_plan(tp.grid, tp.params, dec, tp.obs, 1.0, 1.0, 0.4);
    CovarianceFactor b = make_diagonal_b(2.0, tp.grid);
    const SweState& u = tp.background;

    CHECK_THROWS_WITH_AS(
        local_cost(plan, 0, b, tp.bg_levels, tp.bg_levels, NeighborValues{}, u),
        doctest::Contains("neighbor tables"), ProtocolError);

    NeighborValues short_table = uniform_tables(plan.locals[0], 0.0);
    short_table[0].pop_back();
    CHECK_THROWS_WITH_AS(
        local_cost(plan, 0, b, tp.bg_levels, tp.bg_levels, short_table, u),
        doctest::Contains("overlap values"), ProtocolError);

    NeighborValues ok = uniform_tables(plan.locals[0], 0.0);
    CHECK_THROWS_AS(local_cost(plan, 5, b, tp.bg_levels, tp.bg_levels, ok, u), DimensionError);

    std::vector<SweState> shorter(tp.bg_levels.begin(), tp.bg_levels.end() - 1);
    CHECK_THROWS_AS(local_cost(plan, 0, b, shorter, tp.bg_levels, ok, u), DimensionError);
}

TEST_CASE("plan construction rejects bad multipliers and mismatched grids") {
    TwinPieces tp = make_twin(8, 4, 0.2, 0.05, 9u);
    Decomposition dec = build_decomposition(tp.grid, 2, 1, 1, 0, 0, 1);
    CHECK_THROWS_AS(build_dd_plan(tp.grid, tp.params, dec, tp.obs, -1.0, 1.0, 0.4), ConfigError);
    CHECK_THROWS_AS(build_dd_plan(tp.grid, tp.params, dec, tp.obs, 1.0, -0.5, 0.4), ConfigError);
    CHECK_THROWS_AS(build_dd_plan(tp.grid, tp.params, dec, tp.obs, 1.0, 1.0, 0.0), ConfigError);

    SpaceTimeGrid other = sphere_grid(8, 6, 400.0);
    Decomposition dec6 = build_decomposition(other, 2, 1, 1, 0, 0, 1);
    CHECK_THROWS_AS(build_dd_plan(tp.grid, tp.params, dec6, tp.obs, 1.0, 1.0, 0.4),
                    DimensionError);
}
