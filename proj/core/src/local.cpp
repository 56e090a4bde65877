#include "ddvar/local.hpp"

#include <string>
#include <utility>

#include "ddvar/errors.hpp"

namespace ddvar {
namespace {

std::string sub_name(const Subdomain& sub) {
    return "(j=" + std::to_string(sub.j) + ", i=" + std::to_string(sub.i) + ")";
}

// Selections covering one time level of an overlap region, in the same
// (latitude, longitude, variable) order overlap_values emits.
std::vector<ObsLocation> region_selections(const OverlapRegion& region) {
    std::vector<ObsLocation> sel;
    sel.reserve(region.lats.size() * region.lons.size() * SpaceTimeGrid::nvars);
    for (int gj : region.lats)
        for (int gi : region.lons)
            for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
                sel.push_back(ObsLocation{gi, gj, var});
    return sel;
}

StateMask box_mask(const SpaceTimeGrid& grid, const Subdomain& sub) {
    StateMask mask;
    mask.m = Field2(grid.nlon, grid.nlat);
    for (int j = 0; j < grid.nlat; ++j)
        for (int i = 0; i < grid.nlon; ++i)
            if (sub.lon_range.contains(i) && sub.lat_range.contains(j)) mask.m.at(i, j) = 1.0;
    return mask;
}

// Observations at global level k, filtered to the subdomain's spatial box.
// Keeps the stored location order, so restriction is deterministic.
ResidualBlock restricted_obs_block(const ObservationSet& obs, size_t slot, const Subdomain& sub,
                                   int t0, double sigma_r) {
    ResidualBlock b;
    b.kind = BlockKind::observation;
    b.level = obs.times[slot] - t0;
    b.weight = 1.0 / (sigma_r * sigma_r);
    const auto& locs = obs.locations[slot];
    const auto& vals = obs.values[slot];
    for (size_t m = 0; m < locs.size(); ++m) {
        if (!sub.lon_range.contains(locs[m].lon) || !sub.lat_range.contains(locs[m].lat)) continue;
        b.selections.push_back(locs[m]);
        b.target.push_back(vals[m]);
    }
    return b;
}

}  // namespace

DdPlan build_dd_plan(const SpaceTimeGrid& grid, const SweParams& params, const Decomposition& dec,
                     const ObservationSet& obs, double lambda, double mu, double sigma_r) {
    grid.validate();
    params.validate(grid);
    obs.validate(grid);
    if (!(lambda >= 0.0) || !(mu >= 0.0))
        throw ConfigError("dd plan: lambda and mu must be nonnegative");
    if (!(sigma_r > 0.0)) throw ConfigError("dd plan: sigma_r must be positive");
    if (dec.grid.nlon != grid.nlon || dec.grid.nlat != grid.nlat || dec.grid.M != grid.M)
        throw DimensionError("dd plan: decomposition was built for a different grid");

    DdPlan plan;
    plan.grid = grid;
    plan.params = params;
    plan.dec = dec;
    plan.lambda = lambda;
    plan.mu = mu;
    plan.sigma_r = sigma_r;
    plan.locals.reserve(dec.subdomains.size());

    for (size_t s = 0; s < dec.subdomains.size(); ++s) {
        const Subdomain& sub = dec.subdomains[s];
        LocalSpec spec;
        spec.index = static_cast<int>(s);
        spec.sub = sub;
        spec.mask = box_mask(grid, sub);
        spec.t0 = sub.time_range.start;
        spec.nsteps = sub.time_range.length - 1;

        for (size_t slot = 0; slot < obs.times.size(); ++slot) {
            int k = obs.times[slot];
            if (!sub.time_range.contains(k)) continue;
            ResidualBlock b = restricted_obs_block(obs, slot, sub, spec.t0, sigma_r);
            if (!b.selections.empty()) spec.obs_blocks.push_back(std::move(b));
        }

        for (size_t n = 0; n < dec.subdomains.size(); ++n) {
            if (n == s) continue;
            OverlapRegion region = overlap_region(sub, dec.subdomains[n]);
            if (region.empty()) continue;
            spec.neighbors.push_back(LocalSpec::Neighbor{static_cast<int>(n), std::move(region)});
        }
        plan.locals.push_back(std::move(spec));
    }
    return plan;
}

std::vector<double> overlap_values(const OverlapRegion& region, int t0,
                                   const std::vector<SweState>& levels) {
    std::vector<double> out;
    out.reserve(region.size() * SpaceTimeGrid::nvars);
    for (int t : region.times) {
        int l = t - t0;
        if (l < 0 || static_cast<size_t>(l) >= levels.size())
            throw DimensionError("overlap values: level " + std::to_string(t) +
                                 " outside the window starting at " + std::to_string(t0));
        const SweState& z = levels[static_cast<size_t>(l)];
        for (int gj : region.lats)
            for (int gi : region.lons)
                for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
                    out.push_back(z.var(var).at(gi, gj));
    }
    return out;
}

std::vector<NeighborValues> exchange_overlaps(const DdPlan& plan,
                                              const std::vector<std::vector<SweState>>& iterates) {
    if (iterates.size() != plan.locals.size())
        throw DimensionError("overlap exchange: expected " + std::to_string(plan.locals.size()) +
                             " iterates, got " + std::to_string(iterates.size()));
    for (size_t s = 0; s < plan.locals.size(); ++s)
        if (iterates[s].size() != static_cast<size_t>(plan.locals[s].nsteps + 1))
            throw DimensionError("overlap exchange: iterate " + sub_name(plan.locals[s].sub) +
                                 " does not span its window");

    std::vector<NeighborValues> tables(plan.locals.size());
    for (size_t s = 0; s < plan.locals.size(); ++s) {
        const LocalSpec& spec = plan.locals[s];
        tables[s].reserve(spec.neighbors.size());
        for (const auto& nb : spec.neighbors) {
            const LocalSpec& other = plan.locals[static_cast<size_t>(nb.index)];
            tables[s].push_back(overlap_values(nb.region, other.t0, iterates[nb.index]));
        }
    }
    return tables;
}

GnProblem build_local_problem(const DdPlan& plan, int s, const CovarianceFactor& b,
                              const std::vector<SweState>& background_levels,
                              const std::vector<SweState>& carrier_levels,
                              const NeighborValues& neighbors) {
    if (s < 0 || static_cast<size_t>(s) >= plan.locals.size())
        throw DimensionError("local problem: subdomain index " + std::to_string(s) +
                             " out of range");
    const LocalSpec& spec = plan.locals[static_cast<size_t>(s)];
    if (background_levels.size() != static_cast<size_t>(plan.grid.M) ||
        carrier_levels.size() != static_cast<size_t>(plan.grid.M))
        throw DimensionError("local problem: background and carrier must span all " +
                             std::to_string(plan.grid.M) + " window levels");
    if (neighbors.size() != spec.neighbors.size())
        throw ProtocolError("local problem: subdomain " + sub_name(spec.sub) + " expects " +
                            std::to_string(spec.neighbors.size()) + " neighbor tables, got " +
                            std::to_string(neighbors.size()));

    GnProblem pb;
    pb.grid = plan.grid;
    pb.params = plan.params;
    pb.nsteps = spec.nsteps;
    pb.anchor = background_levels[static_cast<size_t>(spec.t0)];
    pb.v = b;
    pb.lambda = plan.lambda;
    pb.mu = plan.mu;
    pb.mask = spec.mask;
    spec.mask.project(pb.anchor);
    pb.blocks = spec.obs_blocks;
    pb.carrier.assign(carrier_levels.begin() + spec.t0,
                      carrier_levels.begin() + spec.t0 + spec.nsteps + 1);

    // One overlap block per neighbor per shared level; rows are weighted by
    // the diagonal of the background precision, which is exact for a diagonal
    // B and the standard diagonal surrogate otherwise.
    double w_ovl = 1.0 / (b.sigma_b * b.sigma_b);
    for (size_t n = 0; n < spec.neighbors.size(); ++n) {
        const auto& nb = spec.neighbors[n];
        const std::vector<double>& vals = neighbors[n];
        size_t chunk = nb.region.lats.size() * nb.region.lons.size() * SpaceTimeGrid::nvars;
        if (vals.size() != chunk * nb.region.times.size())
            throw ProtocolError(
                "local problem: neighbor " +
                sub_name(plan.dec.subdomains[static_cast<size_t>(nb.index)]) + " sent " +
                std::to_string(vals.size()) + " overlap values to subdomain " +
                sub_name(spec.sub) + ", expected " +
                std::to_string(chunk * nb.region.times.size()));
        std::vector<ObsLocation> sel = region_selections(nb.region);
        for (size_t ti = 0; ti < nb.region.times.size(); ++ti) {
            ResidualBlock blk;
            blk.kind = BlockKind::overlap;
            blk.level = nb.region.times[ti] - spec.t0;
            blk.selections = sel;
            blk.weight = w_ovl;
            blk.target.assign(vals.begin() + static_cast<long>(ti * chunk),
                              vals.begin() + static_cast<long>((ti + 1) * chunk));
            pb.blocks.push_back(std::move(blk));
        }
    }
    pb.validate();
    return pb;
}

CostBreakdown local_cost(const DdPlan& plan, int s, const CovarianceFactor& b,
                         const std::vector<SweState>& background_levels,
                         const std::vector<SweState>& carrier_levels,
                         const NeighborValues& neighbors, const SweState& u) {
    GnProblem pb = build_local_problem(plan, s, b, background_levels, carrier_levels, neighbors);
    return problem_cost(pb, u);
}

}  // namespace ddvar
