#pragma once

#include <string>
#include <vector>

#include "ddvar/cost.hpp"
#include "ddvar/local.hpp"

namespace ddvar {

// Everything one decomposed assimilation run needs. run_global is the same
// loop with the decomposition forced to a single subdomain, so the two entry
// points share one code path by construction.
struct DdRunConfig {
    SpaceTimeGrid grid;
    SweParams params;
    int q = 1;
    int p1 = 1;
    int p2 = 1;
    int o_x = 0;
    int o_y = 0;
    int o_t = 0;
    SweState background;
    CovarianceFactor b;
    ObservationSet obs;
    double lambda = 1.0;
    double mu = 1.0;
    double sigma_r = 1e-2;
    GnConfig gn;
    double eps = 1e-6;   // round-to-round stop, relative to the background norm
    int max_rounds = 50;
    enum class Exchange { outer_round, every_gn_iteration };
    Exchange exchange = Exchange::outer_round;
    int workers = 1;

    void validate() const;
};

// The global functional the run minimizes, for evaluating candidates.
AssimSetup assim_setup_from(const DdRunConfig& cfg);

// One subdomain's bookkeeping for one exchange round.
struct RoundRecord {
    int round = 0;
    int j = 1;
    int i = 1;
    int outer_iterations = 0;
    int inner_iterations = 0;  // summed over the round's inner solves
    int max_inner = 0;
    CostBreakdown cost;        // local functional at the accepted control
    double step_norm = 0.0;    // control change against the previous round
    bool converged = false;
    std::string stop_reason;
};

struct AnalysisReport {
    // The analysis: partition-of-unity reconstruction of the final local
    // trajectories, and the global functional evaluated at its initial state.
    SweState analysis;
    std::vector<SweState> reconstruction;
    CostBreakdown analysis_cost;
    double reconstruction_cost = 0.0;  // trajectory functional of the reconstruction

    // Candidate gather: zero-padded local trajectories scored by the global
    // trajectory functional; ties go to the lowest (j, i).
    int winner_j = 1;
    int winner_i = 1;
    double winner_cost = 0.0;
    std::vector<double> candidate_costs;  // canonical subdomain order

    int rounds = 0;
    bool converged = false;
    double final_step_norm = 0.0;
    std::vector<RoundRecord> history;  // rounds x subdomains, canonical order

    // Controls per round (round_controls[0] is the restricted background),
    // kept for convergence tables.
    std::vector<std::vector<SweState>> round_controls;

    // Iteration products m_ji * l_ji per subdomain, where m is the outer
    // count of the subdomain's deepest single-round solve and l its deepest
    // inner solve; warm-started later rounds never inflate them. rho is the
    // decomposition's maximum product.
    std::vector<int> outer_counts;
    std::vector<int> inner_maxima;
    int rho = 0;

    // Wall-clock phase totals; reporting only, never part of any
    // reproducibility comparison.
    double seconds_local = 0.0;
    double seconds_exchange = 0.0;
    double seconds_gather = 0.0;
};

// Additive-Schwarz rounds over the space-time subdomains: each round solves
// every local problem against the neighbors' previous-round restrictions
// (one worker per subdomain, results independent of the worker count),
// reconstructs the carrier trajectory, and stops once the largest control
// change falls below eps * (1 + |background|_inf) or max_rounds is reached
// (the latter is flagged, not fatal).
AnalysisReport run_dd(const DdRunConfig& cfg);

// The undecomposed solve: run_dd with q = p1 = p2 = 1 and no halos.
AnalysisReport run_global(const DdRunConfig& cfg);

// Per-subdomain error-vs-reference table: e[r][s] is the masked infinity
// norm between the reference trajectory and subdomain s's control after
// round r, with row 0 measuring the restricted background.
struct ETable {
    std::vector<int> rounds;
    std::vector<std::vector<double>> e;
};

ETable convergence_history(const AnalysisReport& report, const DdRunConfig& cfg,
                           const SweState& reference);

}  // namespace ddvar
