#include "ddvar/solver.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>

#include "ddvar/errors.hpp"

namespace ddvar {

void GnConfig::validate() const {
    if (max_outer < 1 || max_inner < 1)
        throw ConfigError("solver: max_outer and max_inner must be at least 1");
    if (!(outer_tol > 0.0) || !(inner_tol > 0.0))
        throw ConfigError("solver: outer_tol and inner_tol must be positive");
    if (damping < 0.0) throw ConfigError("solver: damping must be nonnegative");
}

void StateMask::project(SweState& z) const {
    if (empty()) return;
    for (int var = 0; var < SpaceTimeGrid::nvars; ++var) {
        Field2& f = z.var(var);
        for (size_t n = 0; n < f.v.size(); ++n)
            if (m.v[n] == 0.0) f.v[n] = 0.0;
    }
}

void StateMask::splice(SweState& dst, const SweState& src) const {
    for (int var = 0; var < SpaceTimeGrid::nvars; ++var) {
        Field2& d = dst.var(var);
        const Field2& s = src.var(var);
        for (size_t n = 0; n < d.v.size(); ++n)
            if (m.v[n] != 0.0) d.v[n] = s.v[n];
    }
}

int GOperator::rows() const {
    int n = 0;
    for (const ResidualBlock& b : *blocks) n += static_cast<int>(b.selections.size());
    return n;
}

namespace {

int max_block_level(const std::vector<ResidualBlock>& blocks) {
    int kmax = 0;
    for (const ResidualBlock& b : blocks) kmax = std::max(kmax, b.level);
    return kmax;
}

std::vector<int> block_row_offsets(const std::vector<ResidualBlock>& blocks) {
    std::vector<int> off(blocks.size() + 1, 0);
    for (size_t b = 0; b < blocks.size(); ++b)
        off[b + 1] = off[b] + static_cast<int>(blocks[b].selections.size());
    return off;
}

void check_gop(const GOperator& gop) {
    if (!gop.traj || !gop.blocks)
        throw DimensionError("linearized observation map: trajectory or blocks not set");
    if (!gop.blocks->empty() && max_block_level(*gop.blocks) >= gop.traj->levels())
        throw DimensionError("linearized observation map: block level outside the trajectory");
}

struct CgOutcome {
    int iterations = 0;
    double rel_residual = 0.0;
    bool hit_max = false;
};

// Conjugate gradients from x = 0 on an SPD operator; fixed operation order,
// no randomization, so the iterate sequence is reproducible bit for bit.
template <class Op>
CgOutcome cg_solve(SweState& x, const SweState& b, Op&& apply_a, double tol, int max_iter,
                   const char* context) {
    CgOutcome out;
    double bnorm2 = dot(b, b);
    if (bnorm2 == 0.0) return out;
    SweState r = b;
    SweState p = b;
    double rs = bnorm2;
    const double stop2 = tol * tol * bnorm2;
    int it = 0;
    while (it < max_iter) {
        SweState ap = apply_a(p);
        double pap = dot(p, ap);
        if (pap <= 0.0)
            throw NumericalError(std::string(context) + ": operator is not positive definite "
                                 "(<p,Ap> <= 0 at inner iteration " + std::to_string(it + 1) + ")");
        double alpha = rs / pap;
        axpy(x, alpha, p);
        axpy(r, -alpha, ap);
        ++it;
        double rs_new = dot(r, r);
        if (rs_new <= stop2) {
            rs = rs_new;
            break;
        }
        scale(p, rs_new / rs);
        axpy(p, 1.0, r);
        rs = rs_new;
    }
    out.iterations = it;
    out.rel_residual = std::sqrt(rs / bnorm2);
    out.hit_max = (it == max_iter) && rs > stop2;
    return out;
}

// V restricted to the mask: P V P with P the selection projector. For an
// all-ones or empty mask this is V unchanged, bit for bit.
SweState masked_v_apply(const CovarianceFactor& V, const StateMask* mask, const SweState& x) {
    SweState y = V.v_apply(x);
    if (mask) mask->project(y);
    return y;
}

SweState masked_v_inverse(const CovarianceFactor& V, const StateMask* mask, const SweState& x) {
    V.validate();
    if (V.kind == CovarianceFactor::Kind::diagonal) {
        SweState out = x;
        for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
            for (double& v : out.var(var).v) v /= V.sigma_b;
        if (mask) mask->project(out);
        return out;
    }
    SweState rhs = x;
    if (mask) mask->project(rhs);
    SweState w(x.nx(), x.ny());
    cg_solve(w, rhs, [&](const SweState& p) { return masked_v_apply(V, mask, p); }, 1e-14,
             10 * x.nx() * x.ny() * 3 + 50, "covariance factor solve");
    return w;
}

}  // namespace

std::vector<double> g_apply(const GOperator& gop, const SweState& du) {
    check_gop(gop);
    const std::vector<ResidualBlock>& blocks = *gop.blocks;
    if (blocks.empty()) return {};
    std::vector<int> off = block_row_offsets(blocks);
    std::vector<double> y(off.back());

    int kmax = max_block_level(blocks);
    SweState dz = du;
    if (gop.mask) gop.mask->project(dz);
    for (int k = 0; k <= kmax; ++k) {
        if (k > 0) {
            dz = step_tlm(gop.traj->states[k - 1], dz, gop.traj->params, gop.traj->grid,
                          gop.traj->dt);
            if (gop.mask) gop.mask->project(dz);
        }
        for (size_t b = 0; b < blocks.size(); ++b) {
            if (blocks[b].level != k) continue;
            ObservationOperator H{blocks[b].selections};
            std::vector<double> rowsb = H.apply(dz);
            std::copy(rowsb.begin(), rowsb.end(), y.begin() + off[b]);
        }
    }
    return y;
}

SweState g_transpose_apply(const GOperator& gop, const std::vector<double>& dy) {
    check_gop(gop);
    const std::vector<ResidualBlock>& blocks = *gop.blocks;
    SweState acc(gop.traj->states[0].nx(), gop.traj->states[0].ny());
    if (blocks.empty()) return acc;
    std::vector<int> off = block_row_offsets(blocks);
    if (static_cast<int>(dy.size()) != off.back())
        throw DimensionError("linearized observation map: stacked vector length mismatch");

    int kmax = max_block_level(blocks);
    for (int k = kmax; k >= 0; --k) {
        for (size_t b = 0; b < blocks.size(); ++b) {
            if (blocks[b].level != k) continue;
            ObservationOperator H{blocks[b].selections};
            std::vector<double> piece(dy.begin() + off[b],
                                      dy.begin() + off[b] + blocks[b].selections.size());
            H.apply_transpose(piece, acc);
        }
        if (k > 0) {
            if (gop.mask) gop.mask->project(acc);
            acc = step_adj(gop.traj->states[k - 1], acc, gop.traj->params, gop.traj->grid,
                           gop.traj->dt);
        }
    }
    if (gop.mask) gop.mask->project(acc);
    return acc;
}

IncrementSolve solve_normal_equations_weighted(const GOperator& gop, const CovarianceFactor& V,
                                               const std::vector<double>& row_weights,
                                               const std::vector<double>& d,
                                               const SweState* w_current, const GnConfig& cfg,
                                               double damping) {
    check_gop(gop);
    cfg.validate();
    if (d.size() != row_weights.size() || static_cast<int>(d.size()) != gop.rows())
        throw DimensionError("normal equations: misfit/weight length does not match the blocks");

    auto apply_a = [&](const SweState& p) {
        SweState vp = masked_v_apply(V, gop.mask, p);
        std::vector<double> y = g_apply(gop, vp);
        for (size_t r = 0; r < y.size(); ++r) y[r] *= row_weights[r];
        SweState back = g_transpose_apply(gop, y);
        SweState res = masked_v_apply(V, gop.mask, back);
        axpy(res, 1.0 + damping, p);
        return res;
    };

    std::vector<double> wd = d;
    for (size_t r = 0; r < wd.size(); ++r) wd[r] *= row_weights[r];
    SweState b = masked_v_apply(V, gop.mask, g_transpose_apply(gop, wd));
    if (w_current) axpy(b, -1.0, *w_current);

    IncrementSolve inc;
    inc.dw = SweState(b.nx(), b.ny());
    CgOutcome cgo = cg_solve(inc.dw, b, apply_a, cfg.inner_tol, cfg.max_inner, "normal equations");
    inc.du = masked_v_apply(V, gop.mask, inc.dw);
    inc.stats.inner_iterations = cgo.iterations;
    inc.stats.final_relative_residual = cgo.rel_residual;
    inc.stats.hit_max_inner = cgo.hit_max;
    inc.stats.damping_used = damping;
    inc.stats.step_norm = linf_norm(inc.du);
    return inc;
}

std::pair<SweState, IncrementSolveStats> solve_normal_equations(const GOperator& gop,
                                                                const CovarianceFactor& V,
                                                                const std::vector<double>& d,
                                                                const GnConfig& cfg) {
    std::vector<double> weights;
    for (const ResidualBlock& b : *gop.blocks)
        weights.insert(weights.end(), b.selections.size(), b.weight);
    IncrementSolve inc =
        solve_normal_equations_weighted(gop, V, weights, d, nullptr, cfg, cfg.damping);
    return {std::move(inc.du), inc.stats};
}

void GnProblem::validate() const {
    grid.validate();
    params.validate(grid);
    if (nsteps < 0) throw ConfigError("problem: nsteps must be nonnegative");
    if (anchor.nx() != grid.nlon || anchor.ny() != grid.nlat)
        throw DimensionError("problem: anchor shape does not match the grid");
    v.validate();
    if (v.nlon != grid.nlon || v.nlat != grid.nlat)
        throw ConfigError("problem: covariance shape does not match the grid");
    if (lambda < 0.0 || mu < 0.0)
        throw ConfigError("problem: lambda and mu must be nonnegative");
    for (const ResidualBlock& b : blocks) {
        if (b.level < 0 || b.level > nsteps)
            throw DimensionError("problem: block level outside the trajectory");
        if (b.selections.size() != b.target.size())
            throw DimensionError("problem: block selection/target length mismatch");
        if (!(b.weight > 0.0)) throw ConfigError("problem: block weights must be positive");
    }
    if (!mask.empty()) {
        if (mask.m.nx != grid.nlon || mask.m.ny != grid.nlat)
            throw DimensionError("problem: mask shape does not match the grid");
        if (carrier.size() != static_cast<size_t>(nsteps) + 1)
            throw DimensionError("problem: masked propagation needs a carrier level per step");
    }
}

Trajectory propagate_problem(const GnProblem& pb, const SweState& u) {
    if (pb.mask.empty()) return propagate(u, pb.params, pb.grid, pb.nsteps);
    Trajectory traj;
    traj.grid = pb.grid;
    traj.params = pb.params;
    traj.dt = pb.grid.dt;
    SweState z = pb.carrier[0];
    pb.mask.splice(z, u);
    traj.states.push_back(z);
    for (int k = 0; k < pb.nsteps; ++k) {
        SweState zn;
        try {
            zn = step(z, pb.params, pb.grid, pb.grid.dt);
        } catch (CflError& e) {
            e.step_index = k;
            throw;
        }
        SweState spliced = pb.carrier[k + 1];
        pb.mask.splice(spliced, zn);
        traj.states.push_back(spliced);
        z = std::move(spliced);
    }
    return traj;
}

std::vector<double> stacked_misfit(const std::vector<ResidualBlock>& blocks,
                                   const Trajectory& traj) {
    std::vector<double> d;
    for (const ResidualBlock& b : blocks) {
        if (b.level < 0 || b.level >= traj.levels())
            throw DimensionError("misfit stack: block level outside the trajectory");
        ObservationOperator H{b.selections};
        std::vector<double> s = H.apply(traj.states[b.level]);
        for (size_t r = 0; r < s.size(); ++r) d.push_back(b.target[r] - s[r]);
    }
    return d;
}

std::vector<double> stacked_row_weights(const GnProblem& pb) {
    std::vector<double> w;
    for (const ResidualBlock& b : pb.blocks) {
        double mult = (b.kind == BlockKind::observation ? pb.lambda : pb.mu) * b.weight;
        w.insert(w.end(), b.selections.size(), mult);
    }
    return w;
}

CostBreakdown problem_cost(const GnProblem& pb, const SweState& u) {
    Trajectory traj = propagate_problem(pb, u);
    SweState diff = u;
    axpy(diff, -1.0, pb.anchor);
    if (!pb.mask.empty()) pb.mask.project(diff);
    SweState r = masked_v_inverse(pb.v, pb.mask.empty() ? nullptr : &pb.mask, diff);
    double bg = dot(r, r);

    double obs_term = 0.0, ovl_term = 0.0;
    for (const ResidualBlock& b : pb.blocks) {
        ObservationOperator H{b.selections};
        std::vector<double> s = H.apply(traj.states[b.level]);
        double acc = 0.0;
        for (size_t row = 0; row < s.size(); ++row) {
            double d = b.target[row] - s[row];
            acc += d * d * b.weight;
        }
        (b.kind == BlockKind::observation ? obs_term : ovl_term) += acc;
    }
    return make_breakdown(bg, obs_term, ovl_term, pb.lambda, pb.mu);
}

std::vector<ResidualBlock> blocks_from_observations(const ObservationSet& obs, double sigma_r) {
    if (!(sigma_r > 0.0))
        throw ConfigError("observation blocks: sigma_r must be positive");
    std::vector<ResidualBlock> blocks;
    double w = 1.0 / (sigma_r * sigma_r);
    for (size_t s = 0; s < obs.times.size(); ++s) {
        ResidualBlock b;
        b.kind = BlockKind::observation;
        b.level = obs.times[s];
        b.selections = obs.locations[s];
        b.weight = w;
        b.target = obs.values[s];
        blocks.push_back(std::move(b));
    }
    return blocks;
}

GnProblem make_global_problem(const AssimSetup& setup) {
    setup.validate();
    GnProblem pb;
    pb.grid = setup.grid;
    pb.params = setup.params;
    pb.nsteps = setup.grid.M - 1;
    pb.anchor = setup.background;
    pb.v = setup.b;
    pb.lambda = setup.lambda;
    pb.mu = setup.mu;
    pb.blocks = blocks_from_observations(setup.obs, setup.sigma_r);
    return pb;
}

GnResult gauss_newton_from(const GnProblem& pb, const GnConfig& cfg, const SweState& u_start) {
    pb.validate();
    cfg.validate();
    const StateMask* mask = pb.mask.empty() ? nullptr : &pb.mask;

    SweState u = u_start;
    if (mask) mask->project(u);
    SweState diff = u;
    axpy(diff, -1.0, pb.anchor);
    if (mask) mask->project(diff);
    SweState w = masked_v_inverse(pb.v, mask, diff);

    GnResult res;
    res.costs.push_back(problem_cost(pb, u));
    std::vector<double> row_weights = stacked_row_weights(pb);
    double damping = cfg.damping;

    for (int l = 1; l <= cfg.max_outer; ++l) {
        Trajectory traj = propagate_problem(pb, u);
        std::vector<double> d = stacked_misfit(pb.blocks, traj);
        GOperator gop{&traj, &pb.blocks, mask};

        double j_prev = res.costs.back().total;
        int escalations = 0;
        while (true) {
            IncrementSolve inc =
                solve_normal_equations_weighted(gop, pb.v, row_weights, d, &w, cfg, damping);
            res.total_inner_iterations += inc.stats.inner_iterations;
            res.max_inner_used = std::max(res.max_inner_used, inc.stats.inner_iterations);

            // A step already below the stopping threshold means the current
            // iterate is stationary at this damping level; stop here instead
            // of gambling on a cost comparison that is pure rounding noise.
            // Keeps warm restarts at a converged point from escalating.
            if (inc.stats.step_norm < cfg.outer_tol * (1.0 + linf_norm(u))) {
                res.converged = true;
                res.stop_reason = "small_step";
                break;
            }

            SweState u_trial = u;
            axpy(u_trial, 1.0, inc.du);
            if (mask) mask->project(u_trial);
            CostBreakdown j_trial = problem_cost(pb, u_trial);

            if (j_trial.total <= j_prev) {
                u = std::move(u_trial);
                axpy(w, 1.0, inc.dw);
                inc.stats.cost_before = j_prev;
                inc.stats.cost_after = j_trial.total;
                res.steps.push_back(inc.stats);
                res.costs.push_back(j_trial);
                damping = std::max(cfg.damping, damping * 0.1);
                break;
            }
            if (++escalations > 3)
                throw NumericalError("solver: cost increased despite damping escalation at outer "
                                     "iteration " + std::to_string(l));
            damping = damping == 0.0 ? 1e-4 : damping * 10.0;
        }
        if (res.converged) break;  // stationary before taking a step
        res.outer_iterations = l;

        double j_new = res.costs.back().total;
        double rel = (j_prev - j_new) / std::max(j_prev, DBL_MIN);
        if (rel < cfg.outer_tol) {
            res.converged = true;
            res.stop_reason = "cost_plateau";
            break;
        }
        if (res.steps.back().step_norm < cfg.outer_tol * (1.0 + linf_norm(u))) {
            res.converged = true;
            res.stop_reason = "small_step";
            break;
        }
    }
    if (!res.converged) res.stop_reason = "max_outer";
    res.u = std::move(u);
    return res;
}

GnResult gauss_newton(const GnProblem& pb, const GnConfig& cfg) {
    return gauss_newton_from(pb, cfg, pb.anchor);
}

}  // namespace ddvar
