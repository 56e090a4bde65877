#pragma once

#include <vector>

#include "ddvar/covariance.hpp"
#include "ddvar/observations.hpp"
#include "ddvar/solver.hpp"
#include "ddvar/spacetime.hpp"

namespace ddvar {

// Round-independent description of one subdomain's restricted problem: the
// spatial mask and time window, the observations falling inside them (block
// levels are local, i.e. global level minus t0), and the adjacency list the
// overlap penalty runs over.
struct LocalSpec {
    int index = 0;  // position in Decomposition::subdomains
    Subdomain sub;
    StateMask mask;  // halo-inclusive spatial box, global shape
    int t0 = 0;      // global index of the first window level
    int nsteps = 0;  // the window spans nsteps + 1 levels
    std::vector<ResidualBlock> obs_blocks;

    struct Neighbor {
        int index = 0;  // position in Decomposition::subdomains
        OverlapRegion region;
    };
    std::vector<Neighbor> neighbors;  // index-ascending
};

// The decomposed assimilation problem: one LocalSpec per subdomain in
// canonical order, plus the multipliers shared by all of them.
struct DdPlan {
    SpaceTimeGrid grid;
    SweParams params;
    Decomposition dec;
    double lambda = 1.0;
    double mu = 1.0;
    double sigma_r = 1e-2;
    std::vector<LocalSpec> locals;
};

DdPlan build_dd_plan(const SpaceTimeGrid& grid, const SweParams& params, const Decomposition& dec,
                     const ObservationSet& obs, double lambda, double mu, double sigma_r);

// Trajectory values on an overlap region in penalty-row order: time level
// ascending, then latitude, longitude, variable. `t0` maps global levels to
// positions in `levels`; every region level must fall inside the window.
std::vector<double> overlap_values(const OverlapRegion& region, int t0,
                                   const std::vector<SweState>& levels);

// neighbor_values[n] pairs with LocalSpec::neighbors[n].
using NeighborValues = std::vector<std::vector<double>>;

// The restriction every subdomain needs from every neighbor, computed from
// the current iterates (per-subdomain window trajectories in global shape,
// iterates[s][l] = subdomain s at local level l). A pure function of the
// iterates; the tables do not depend on evaluation order.
std::vector<NeighborValues> exchange_overlaps(const DdPlan& plan,
                                              const std::vector<std::vector<SweState>>& iterates);

// Subdomain s's Gauss-Newton problem for one round. `background_levels`
// anchors the local background term (its value at the window's first level,
// restricted), `carrier_levels` supplies exterior values during masked
// propagation, and `neighbors` holds the frozen neighbor restrictions the
// overlap penalty is measured against; both level vectors span the full
// global window. Missing or misshapen neighbor data is a protocol error.
GnProblem build_local_problem(const DdPlan& plan, int s, const CovarianceFactor& b,
                              const std::vector<SweState>& background_levels,
                              const std::vector<SweState>& carrier_levels,
                              const NeighborValues& neighbors);

// J_ji(u) = ||u - u_b,ji||^2 + lambda * (restricted misfit) + mu * (overlap
// penalty); the breakdown keeps the three terms separate. Equivalent to
// problem_cost on build_local_problem's output.
CostBreakdown local_cost(const DdPlan& plan, int s, const CovarianceFactor& b,
                         const std::vector<SweState>& background_levels,
                         const std::vector<SweState>& carrier_levels,
                         const NeighborValues& neighbors, const SweState& u);

}  // namespace ddvar
