#include "ddvar/orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>
#include <utility>

#include "ddvar/errors.hpp"

namespace ddvar {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double masked_linf_diff(const StateMask& mask, const SweState& a, const SweState& b) {
    double m = 0.0;
    for (int var = 0; var < SpaceTimeGrid::nvars; ++var) {
        const auto& av = a.var(var).v;
        const auto& bv = b.var(var).v;
        for (size_t n = 0; n < av.size(); ++n)
            if (mask.m.v[n] != 0.0) m = std::max(m, std::fabs(av[n] - bv[n]));
    }
    return m;
}

// A subdomain's window trajectory as the local space-time field the
// partition-of-unity reconstruction consumes.
SpaceTimeField local_field(const LocalSpec& spec, const std::vector<SweState>& window) {
    const AxisSpan& lon = spec.sub.lon_range;
    const AxisSpan& lat = spec.sub.lat_range;
    SpaceTimeField f(spec.nsteps + 1, lon.length, lat.length);
    for (int t = 0; t <= spec.nsteps; ++t)
        for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
            for (int lj = 0; lj < lat.length; ++lj)
                for (int li = 0; li < lon.length; ++li)
                    f.at(t, var, li, lj) =
                        window[t].var(var).at(lon.global_of(li), lat.global_of(lj));
    return f;
}

std::vector<SweState> reconstruct_carrier(const DdPlan& plan,
                                          const std::vector<std::vector<SweState>>& iterates) {
    std::vector<SpaceTimeField> locals;
    locals.reserve(plan.locals.size());
    for (size_t s = 0; s < plan.locals.size(); ++s)
        locals.push_back(local_field(plan.locals[s], iterates[s]));
    return to_states(reconstruct(locals, plan.dec));
}

// Rethrows a worker's failure. Setup errors keep their type; solve failures
// become numerical errors carrying the subdomain identity.
[[noreturn]] void rethrow_local(std::exception_ptr ep, const Subdomain& sub) {
    std::string id = "(j=" + std::to_string(sub.j) + ", i=" + std::to_string(sub.i) + ")";
    try {
        std::rethrow_exception(ep);
    } catch (const ConfigError&) {
        throw;
    } catch (const DimensionError&) {
        throw;
    } catch (const ProtocolError&) {
        throw;
    } catch (const std::exception& e) {
        throw NumericalError("dd run: local solve failed on subdomain " + id + ": " + e.what());
    }
}

}  // namespace

void DdRunConfig::validate() const {
    grid.validate();
    params.validate(grid);
    if (background.nx() != grid.nlon || background.ny() != grid.nlat)
        throw DimensionError("dd run: background state does not match the grid");
    if (b.nlon != grid.nlon || b.nlat != grid.nlat)
        throw DimensionError("dd run: covariance factor does not match the grid");
    b.validate();
    obs.validate(grid);
    if (!(lambda >= 0.0) || !(mu >= 0.0))
        throw ConfigError("dd run: lambda and mu must be nonnegative");
    if (!(sigma_r > 0.0)) throw ConfigError("dd run: sigma_r must be positive");
    gn.validate();
    if (!(eps > 0.0)) throw ConfigError("dd run: eps must be positive");
    if (max_rounds < 1) throw ConfigError("dd run: max_rounds must be at least 1");
    if (workers < 1) throw ConfigError("dd run: workers must be at least 1");
}

AssimSetup assim_setup_from(const DdRunConfig& cfg) {
    AssimSetup setup;
    setup.grid = cfg.grid;
    setup.params = cfg.params;
    setup.background = cfg.background;
    setup.b = cfg.b;
    setup.obs = cfg.obs;
    setup.lambda = cfg.lambda;
    setup.mu = cfg.mu;
    setup.sigma_r = cfg.sigma_r;
    return setup;
}

AnalysisReport run_dd(const DdRunConfig& cfg) {
    cfg.validate();
    Decomposition dec =
        build_decomposition(cfg.grid, cfg.q, cfg.p1, cfg.p2, cfg.o_x, cfg.o_y, cfg.o_t);
    DdPlan plan =
        build_dd_plan(cfg.grid, cfg.params, dec, cfg.obs, cfg.lambda, cfg.mu, cfg.sigma_r);
    const int QP = static_cast<int>(plan.locals.size());
    AssimSetup setup = assim_setup_from(cfg);

    GnConfig gn = cfg.gn;
    if (cfg.exchange == DdRunConfig::Exchange::every_gn_iteration) gn.max_outer = 1;

    // Anchor trajectory: the propagated background, fixed across rounds. It
    // also seeds the carrier and the round-0 controls and iterates.
    std::vector<SweState> bg_levels =
        propagate(cfg.background, cfg.params, cfg.grid, cfg.grid.M - 1).states;
    std::vector<SweState> carrier = bg_levels;

    std::vector<SweState> controls;
    std::vector<std::vector<SweState>> iterates;
    controls.reserve(QP);
    iterates.reserve(QP);
    for (const LocalSpec& spec : plan.locals) {
        SweState c = bg_levels[spec.t0];
        spec.mask.project(c);
        controls.push_back(std::move(c));
        iterates.emplace_back(bg_levels.begin() + spec.t0,
                              bg_levels.begin() + spec.t0 + spec.nsteps + 1);
    }

    AnalysisReport rep;
    rep.round_controls.push_back(controls);
    rep.outer_counts.assign(QP, 0);
    rep.inner_maxima.assign(QP, 0);

    double stop_scale = cfg.eps * (1.0 + linf_norm(cfg.background));
    int workers = std::min(cfg.workers, QP);

    for (int round = 1; round <= cfg.max_rounds; ++round) {
        auto t_ex = Clock::now();
        std::vector<NeighborValues> tables = exchange_overlaps(plan, iterates);
        rep.seconds_exchange += seconds_since(t_ex);

        std::vector<SweState> new_controls(QP);
        std::vector<std::vector<SweState>> new_iterates(QP);
        std::vector<RoundRecord> records(QP);
        std::vector<std::exception_ptr> errors(QP);

        auto solve_one = [&](int s) {
            try {
                const LocalSpec& spec = plan.locals[static_cast<size_t>(s)];
                GnProblem pb =
                    build_local_problem(plan, s, cfg.b, bg_levels, carrier, tables[s]);

                // Warm start: own previous control, except that a subdomain
                // with a backward temporal halo restarts from its upstream
                // neighbor's value at the window head (the coarse predictor
                // handing the initial condition down the time axis).
                SweState u_start = controls[static_cast<size_t>(s)];
                if (round > 1 && spec.t0 < spec.sub.owned_time_range.start) {
                    int up = (spec.sub.j - 2) * plan.dec.p() + (spec.sub.i - 1);
                    const LocalSpec& uspec = plan.locals[static_cast<size_t>(up)];
                    u_start = iterates[static_cast<size_t>(up)]
                                      [static_cast<size_t>(spec.t0 - uspec.t0)];
                }

                GnResult res = gauss_newton_from(pb, gn, u_start);
                Trajectory traj = propagate_problem(pb, res.u);

                RoundRecord rec;
                rec.round = round;
                rec.j = spec.sub.j;
                rec.i = spec.sub.i;
                rec.outer_iterations = res.outer_iterations;
                rec.inner_iterations = res.total_inner_iterations;
                rec.max_inner = res.max_inner_used;
                rec.cost = res.costs.back();
                rec.step_norm =
                    masked_linf_diff(spec.mask, res.u, controls[static_cast<size_t>(s)]);
                rec.converged = res.converged;
                rec.stop_reason = res.stop_reason;

                new_controls[static_cast<size_t>(s)] = std::move(res.u);
                new_iterates[static_cast<size_t>(s)] = std::move(traj.states);
                records[static_cast<size_t>(s)] = std::move(rec);
            } catch (...) {
                errors[static_cast<size_t>(s)] = std::current_exception();
            }
        };

        auto t_loc = Clock::now();
        if (workers <= 1) {
            for (int s = 0; s < QP; ++s) solve_one(s);
        } else {
            std::vector<std::thread> pool;
            pool.reserve(workers);
            for (int w = 0; w < workers; ++w)
                pool.emplace_back([&, w] {
                    for (int s = w; s < QP; s += workers) solve_one(s);
                });
            for (auto& th : pool) th.join();
        }
        rep.seconds_local += seconds_since(t_loc);

        for (int s = 0; s < QP; ++s)
            if (errors[s]) rethrow_local(errors[s], plan.locals[static_cast<size_t>(s)].sub);

        double max_step = 0.0;
        for (int s = 0; s < QP; ++s) {
            max_step = std::max(max_step, records[static_cast<size_t>(s)].step_norm);
            rep.outer_counts[s] =
                std::max(rep.outer_counts[s], records[static_cast<size_t>(s)].outer_iterations);
            rep.inner_maxima[s] =
                std::max(rep.inner_maxima[s], records[static_cast<size_t>(s)].max_inner);
            rep.history.push_back(std::move(records[static_cast<size_t>(s)]));
        }

        controls = std::move(new_controls);
        iterates = std::move(new_iterates);
        rep.round_controls.push_back(controls);
        rep.rounds = round;
        rep.final_step_norm = max_step;

        auto t_rc = Clock::now();
        carrier = reconstruct_carrier(plan, iterates);
        rep.seconds_exchange += seconds_since(t_rc);

        if (max_step < stop_scale) {
            rep.converged = true;
            break;
        }
    }

    rep.rho = 0;
    for (int s = 0; s < QP; ++s)
        rep.rho = std::max(rep.rho, rep.outer_counts[s] * rep.inner_maxima[s]);

    // Gather: score every zero-padded local trajectory with the global
    // trajectory functional; the reconstruction is the analysis proper.
    auto t_ga = Clock::now();
    SweState zero(cfg.grid.nlon, cfg.grid.nlat);
    rep.candidate_costs.reserve(QP);
    for (int s = 0; s < QP; ++s) {
        const LocalSpec& spec = plan.locals[static_cast<size_t>(s)];
        std::vector<SweState> padded;
        padded.reserve(cfg.grid.M);
        for (int t = 0; t < cfg.grid.M; ++t) {
            if (t >= spec.t0 && t <= spec.t0 + spec.nsteps) {
                SweState z = iterates[static_cast<size_t>(s)][static_cast<size_t>(t - spec.t0)];
                spec.mask.project(z);
                padded.push_back(std::move(z));
            } else {
                padded.push_back(zero);
            }
        }
        double cost = trajectory_cost(padded, setup).total;
        rep.candidate_costs.push_back(cost);
        if (s == 0 || cost < rep.winner_cost) {
            rep.winner_cost = cost;
            rep.winner_j = spec.sub.j;
            rep.winner_i = spec.sub.i;
        }
    }
    rep.seconds_gather += seconds_since(t_ga);

    rep.reconstruction = carrier;
    rep.analysis = carrier.front();
    rep.reconstruction_cost = trajectory_cost(rep.reconstruction, setup).total;
    rep.analysis_cost = global_cost(rep.analysis, setup);
    return rep;
}

AnalysisReport run_global(const DdRunConfig& cfg) {
    DdRunConfig g = cfg;
    g.q = 1;
    g.p1 = 1;
    g.p2 = 1;
    g.o_x = 0;
    g.o_y = 0;
    g.o_t = 0;
    return run_dd(g);
}

ETable convergence_history(const AnalysisReport& report, const DdRunConfig& cfg,
                           const SweState& reference) {
    cfg.validate();
    if (reference.nx() != cfg.grid.nlon || reference.ny() != cfg.grid.nlat)
        throw DimensionError("convergence history: reference state does not match the grid");
    Decomposition dec =
        build_decomposition(cfg.grid, cfg.q, cfg.p1, cfg.p2, cfg.o_x, cfg.o_y, cfg.o_t);
    DdPlan plan =
        build_dd_plan(cfg.grid, cfg.params, dec, cfg.obs, cfg.lambda, cfg.mu, cfg.sigma_r);
    if (report.round_controls.empty() || report.round_controls.front().size() != plan.locals.size())
        throw DimensionError("convergence history: report does not match the decomposition");

    std::vector<SweState> ref_levels =
        propagate(reference, cfg.params, cfg.grid, cfg.grid.M - 1).states;

    ETable table;
    for (size_t r = 0; r < report.round_controls.size(); ++r) {
        table.rounds.push_back(static_cast<int>(r));
        std::vector<double> row;
        row.reserve(plan.locals.size());
        for (size_t s = 0; s < plan.locals.size(); ++s) {
            const LocalSpec& spec = plan.locals[s];
            row.push_back(masked_linf_diff(spec.mask, ref_levels[spec.t0],
                                           report.round_controls[r][s]));
        }
        table.e.push_back(std::move(row));
    }
    return table;
}

}  // namespace ddvar
