#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ddvar/cost.hpp"
#include "ddvar/covariance.hpp"
#include "ddvar/field.hpp"
#include "ddvar/grid.hpp"
#include "ddvar/observations.hpp"
#include "ddvar/swe.hpp"

namespace ddvar {

struct GnConfig {
    int max_outer = 10;
    double outer_tol = 1e-6;   // relative cost decrease / step norm threshold
    int max_inner = 200;
    double inner_tol = 1e-10;  // residual reduction for the inner solve
    double damping = 0.0;      // 0 = pure Gauss-Newton, >0 adds damping*I

    void validate() const;
};

// One group of quadratic residuals: sample the trajectory at `level` with
// point selections, subtract from `target`, weight each row by `weight`
// (an inverse variance). Observation and overlap penalties differ only in
// which of the problem's lambda/mu multipliers scales them.
enum class BlockKind { observation, overlap };

struct ResidualBlock {
    BlockKind kind = BlockKind::observation;
    int level = 0;
    std::vector<ObsLocation> selections;
    double weight = 1.0;
    std::vector<double> target;
};

// Spatial 0/1 mask over the global grid. Projection and splicing select
// entries rather than multiply, so an all-ones mask is a bitwise identity
// and a one-subdomain run reproduces the unmasked solve exactly.
struct StateMask {
    Field2 m;

    bool empty() const { return m.v.empty(); }
    // Zeroes every entry outside the mask, all three variables.
    void project(SweState& z) const;
    // dst := src inside the mask, dst untouched outside.
    void splice(SweState& dst, const SweState& src) const;
};

// The linearized observation map G = diag[H0, H1*M01, ...] about a
// trajectory, applied matrix-free. A nonempty mask restricts the tangent
// propagation to the subdomain (perturbations are zero outside).
struct GOperator {
    const Trajectory* traj = nullptr;
    const std::vector<ResidualBlock>* blocks = nullptr;
    const StateMask* mask = nullptr;

    int rows() const;
};

// Stacked H^(k) (TLM 0->k) du over all blocks, unweighted, in block order.
std::vector<double> g_apply(const GOperator& gop, const SweState& du);
// Exact transpose of g_apply (same Jacobian entries, scattered).
SweState g_transpose_apply(const GOperator& gop, const std::vector<double>& dy);

struct IncrementSolveStats {
    int inner_iterations = 0;
    double final_relative_residual = 0.0;
    bool hit_max_inner = false;
    double damping_used = 0.0;
    // Filled by the Gauss-Newton loop:
    double cost_before = 0.0;
    double cost_after = 0.0;
    double step_norm = 0.0;  // |du|_inf
};

struct IncrementSolve {
    SweState du;  // increment in state space, du = V dw
    SweState dw;  // increment in the preconditioned variable
    IncrementSolveStats stats;
};

// Conjugate gradients on the SPD system
//   (I + (GV)^T R^{-1} (GV) + damping I) dw = (GV)^T R^{-1} d - w_current,
// with R^{-1} = diag(row_weights). w_current (nullptr = zero) carries the
// background pull when iterating away from the anchor. d = 0 with zero
// w_current returns a zero increment in zero iterations. Negative curvature
// throws NumericalError naming the iteration.
IncrementSolve solve_normal_equations_weighted(const GOperator& gop, const CovarianceFactor& V,
                                               const std::vector<double>& row_weights,
                                               const std::vector<double>& d,
                                               const SweState* w_current, const GnConfig& cfg,
                                               double damping);

// The plain variant: row weights taken from the blocks, no anchor term,
// damping from the config.
std::pair<SweState, IncrementSolveStats> solve_normal_equations(const GOperator& gop,
                                                                const CovarianceFactor& V,
                                                                const std::vector<double>& d,
                                                                const GnConfig& cfg);

// One nonlinear least-squares problem in control form. The control is a
// state at the first trajectory level; propagation runs nsteps model steps.
// A nonempty mask makes it a subdomain problem: the control lives inside the
// mask and the trajectory is spliced onto the frozen exterior `carrier`
// (which must then hold nsteps+1 levels).
struct GnProblem {
    SpaceTimeGrid grid;
    SweParams params;
    int nsteps = 0;
    SweState anchor;      // background for the control level
    CovarianceFactor v;   // factor of the control-level covariance
    double lambda = 1.0;  // observation-block multiplier
    double mu = 1.0;      // overlap-block multiplier
    std::vector<ResidualBlock> blocks;
    StateMask mask;
    std::vector<SweState> carrier;

    void validate() const;
};

// Nonlinear trajectory of the control: plain propagation, or step-and-splice
// against the carrier for masked problems.
Trajectory propagate_problem(const GnProblem& pb, const SweState& u);

// Stacked target - sample(traj) over the problem's blocks.
std::vector<double> stacked_misfit(const std::vector<ResidualBlock>& blocks,
                                   const Trajectory& traj);
// Per-row inverse variances with lambda/mu folded in.
std::vector<double> stacked_row_weights(const GnProblem& pb);

// J(u) for the problem; background against the anchor, blocks split into the
// observation and overlap terms of the breakdown.
CostBreakdown problem_cost(const GnProblem& pb, const SweState& u);

std::vector<ResidualBlock> blocks_from_observations(const ObservationSet& obs, double sigma_r);

// The undecomposed window as a GnProblem; gauss_newton on it minimizes
// global_cost of the setup.
GnProblem make_global_problem(const AssimSetup& setup);

struct GnResult {
    SweState u;
    std::vector<CostBreakdown> costs;          // costs[0] = J(start), then per step
    std::vector<IncrementSolveStats> steps;    // one entry per accepted step
    int outer_iterations = 0;
    int max_inner_used = 0;
    int total_inner_iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

// Gauss-Newton with full relinearization each outer step and damping
// escalation on cost increase (x10 from 1e-4, at most 3 times, decay x0.1 on
// success). Stops on relative cost decrease or step norm below outer_tol,
// whichever first; the recorded cost sequence is nonincreasing.
GnResult gauss_newton_from(const GnProblem& pb, const GnConfig& cfg, const SweState& u_start);
// Starts from the problem's anchor.
GnResult gauss_newton(const GnProblem& pb, const GnConfig& cfg);

}  // namespace ddvar
