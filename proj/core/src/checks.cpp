#include "ddvar/checks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <tuple>
#include <vector>

#include "ddvar/dense.hpp"
#include "ddvar/errors.hpp"
#include "ddvar/field.hpp"
#include "ddvar/io.hpp"
#include "ddvar/rng.hpp"
#include "ddvar/solver.hpp"
#include "ddvar/spacetime.hpp"

namespace ddvar {

namespace {

SweState state_noise(const SpaceTimeGrid& g, Rng& rng, double su, double sv, double sh) {
    SweState d(g.nlon, g.nlat);
    const double s[3] = {su, sv, sh};
    for (int var = 0; var < 3; ++var)
        for (double& x : d.var(var).v) x = s[var] * rng.normal();
    return d;
}

double l2_norm(const SweState& z) { return std::sqrt(dot(z, z)); }

// <dy, L dx> == <L* dy, dx> over random pairs; exact transposes keep the
// relative defect at rounding level regardless of the flow, so the base only
// has to be CFL-safe under the configured dt. A rest depth chosen from the
// grid spacing guarantees that for any dt.
CheckResult check_adjoint(const CheckSuiteConfig& cfg) {
    const SpaceTimeGrid& g = cfg.grid;
    const SweParams& p = cfg.params;
    const int nsteps = g.M - 1;

    double min_cos = 1.0;
    for (int j = 0; j < g.nlat; ++j) min_cos = std::min(min_cos, g.cos_theta(j));
    const double spacing = p.a * std::min(g.dlambda, g.dtheta * min_cos);
    const double c_safe = 0.4 * p.cfl_limit * spacing / g.dt;
    const double h0 = std::min(5000.0, c_safe * c_safe / p.g);
    const double wind = 0.05 * c_safe;

    Rng base_rng(cfg.seed, "validate-adjoint-base");
    SweState z0 = state_noise(g, base_rng, wind, wind, 0.02 * h0);
    for (double& x : z0.h.v) x += h0;
    Trajectory traj = propagate(z0, p, g, nsteps);

    Rng rng(cfg.seed, "validate-adjoint-pairs");
    double worst = 0.0;
    for (int k = 0; k < cfg.adjoint_pairs; ++k) {
        SweState dx = state_noise(g, rng, 1.0, 1.0, 1.0);
        SweState dy = state_noise(g, rng, 1.0, 1.0, 1.0);
        SweState fwd = tlm_apply(traj, 0, nsteps, dx);
        SweState back = adj_apply(traj, 0, nsteps, dy);
        if (cfg.fault == FaultInjection::adjoint_sign_flip) scale(back, -1.0);
        const double defect = std::abs(dot(dy, fwd) - dot(back, dx));
        worst = std::max(worst, defect / (l2_norm(dx) * l2_norm(dy)));
    }
    return {"adjoint_dot_product", worst <= cfg.adjoint_tol, worst, cfg.adjoint_tol, "<="};
}

// Centered differences of the window map against the tangent-linear
// prediction must converge at second order across eps = 1e-2..1e-5. The last
// point sits near the finite-difference roundoff floor ulp(|state|)/eps, so
// the probe flow is tuned to keep the quadratic remainder above it: a
// mid-latitude band at shallow rest depth with strong random winds (fast
// nonlinear advection), a time step at 40% of the CFL limit, and a large
// probe direction (the remainder grows with the cube of the direction, the
// reference scale only linearly).
CheckResult check_taylor(const CheckSuiteConfig& cfg) {
    SpaceTimeGrid g;
    g.nlon = cfg.grid.nlon;
    g.nlat = cfg.grid.nlat;
    g.M = cfg.grid.M;
    g.dt = 1.0;
    g.dlambda = 2.0 * std::numbers::pi / g.nlon;
    g.dtheta = std::numbers::pi / (2 * g.nlat);
    g.theta0 = -0.5 * (g.nlat - 1) * g.dtheta;
    g.validate();

    SweParams p;
    p.p_tz = std::max(1, std::min(2, (g.nlon - 1) / 2));
    p.q_tz = std::max(1, std::min(2, (g.nlat - 1) / 2));
    p.finalize_sigmas(g);
    p.validate(g);

    Rng rng(cfg.seed, "validate-taylor-state");
    SweState z0 = state_noise(g, rng, 15.0, 15.0, 15.0);
    for (double& x : z0.h.v) x += 120.0;

    // Five steps suffice to exercise the composition; longer probes only let
    // the free turbulence steepen toward the CFL limit.
    const int nsteps = std::min(5, std::max(2, g.M - 1));

    Rng drng(cfg.seed, "validate-taylor-direction");
    SweState d = state_noise(g, drng, 60.0, 60.0, 45.0);

    auto slope_at = [&](double cfl_target) {
        g.dt = cfl_target * p.cfl_limit / cfl_number(z0, p, g, 1.0);
        Trajectory traj = propagate(z0, p, g, nsteps);
        SweState md = tlm_apply(traj, 0, nsteps, d);
        const double md_norm = l2_norm(md);

        const std::array<double, 4> eps = {1e-2, 1e-3, 1e-4, 1e-5};
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        for (double e : eps) {
            SweState zp = z0, zm = z0;
            axpy(zp, e, d);
            axpy(zm, -e, d);
            SweState fd = propagate(zp, p, g, nsteps).states[nsteps];
            axpy(fd, -1.0, propagate(zm, p, g, nsteps).states[nsteps]);
            scale(fd, 1.0 / (2.0 * e));
            axpy(fd, -1.0, md);
            const double r = std::max(l2_norm(fd) / md_norm, 1e-300);
            const double x = std::log10(e), y = std::log10(r);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double n = static_cast<double>(eps.size());
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };

    // A rare seed can still steepen past the limit within five steps; back
    // off the target deterministically rather than fail on a probe artifact.
    double slope = 0.0;
    const std::array<double, 3> targets = {0.40, 0.28, 0.20};
    for (size_t k = 0; k < targets.size(); ++k) {
        try {
            slope = slope_at(targets[k]);
            break;
        } catch (const CflError&) {
            if (k + 1 == targets.size()) throw;
        }
    }
    return {"tlm_taylor_order", slope >= cfg.taylor_min_order, slope, cfg.taylor_min_order,
            ">="};
}

// Decomposition shapes for the partition check: divisor triples of the grid
// sizes, multi-axis splits first (they have the most seams), cheapest first
// within a tier, each with the widest admissible halos. The first shape gets
// a zero-halo twin so the halo-free tiling is exercised too.
std::vector<std::array<int, 6>> partition_shapes(const SpaceTimeGrid& g) {
    auto divisors = [](int n) {
        std::vector<int> d;
        for (int k = 1; k <= n; ++k)
            if (n % k == 0) d.push_back(k);
        return d;
    };
    struct Cand {
        int active;
        int count;
        std::array<int, 6> shape;
    };
    std::vector<Cand> cands;
    for (int q : divisors(g.M))
        for (int p1 : divisors(g.nlon))
            for (int p2 : divisors(g.nlat)) {
                if (q * p1 * p2 == 1) continue;
                const int core_x = g.nlon / p1, core_y = g.nlat / p2, core_t = g.M / q;
                const int o_x = p1 == 1 ? 0 : std::min(2, core_x / 2);
                const int o_y = p2 == 1 ? 0 : std::min(2, core_y / 2);
                const int o_t = q == 1 ? 0 : std::min(1, core_t / 2);
                const int active = (q > 1) + (p1 > 1) + (p2 > 1);
                cands.push_back({active, q * p1 * p2, {q, p1, p2, o_x, o_y, o_t}});
            }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return std::tie(b.active, a.count, a.shape) < std::tie(a.active, b.count, b.shape);
    });
    std::vector<std::array<int, 6>> shapes = {{1, 1, 1, 0, 0, 0}};
    for (size_t k = 0; k < cands.size() && shapes.size() < 6; ++k) {
        shapes.push_back(cands[k].shape);
        if (k == 0) {
            std::array<int, 6> plain = cands[k].shape;
            plain[3] = plain[4] = plain[5] = 0;
            if (plain != cands[k].shape) shapes.push_back(plain);
        }
    }
    return shapes;
}

// reconstruct(restrict-all(f)) must reproduce f bitwise: overlap weights are
// powers of 1/2 and equal values are pairwise-summed, so the bound is zero,
// not a tolerance.
CheckResult check_partition(const CheckSuiteConfig& cfg) {
    const SpaceTimeGrid& g = cfg.grid;
    Rng rng(cfg.seed, "validate-partition");
    double worst = 0.0;
    for (const auto& s : partition_shapes(g)) {
        Decomposition dec = build_decomposition(g, s[0], s[1], s[2], s[3], s[4], s[5]);
        for (int rep = 0; rep < 3; ++rep) {
            SpaceTimeField f(g.M, g.nlon, g.nlat);
            for (double& x : f.v) x = rng.normal();
            std::vector<SpaceTimeField> locals;
            locals.reserve(dec.subdomains.size());
            for (const Subdomain& sub : dec.subdomains)
                locals.push_back(restrict_field(f, dec, sub, RestrictMode::plain));
            SpaceTimeField recon = reconstruct(locals, dec);
            for (size_t k = 0; k < f.v.size(); ++k)
                worst = std::max(worst, std::abs(recon.v[k] - f.v[k]));
        }
    }
    return {"partition_of_unity", worst <= 0.0, worst, 0.0, "<="};
}

// Matrix-free increment against a dense direct solve of the same normal
// equations (B^{-1} + G^T W G) du = G^T W d on a fixed 4x4, three-level
// window: small enough to assemble G column by column, mixed levels,
// variables and row weights.
CheckResult check_oracle(const CheckSuiteConfig& cfg) {
    const double pi = std::numbers::pi;
    SpaceTimeGrid g = make_square_grid(4, 3, 600.0, 2.0 * pi / 4, pi / 5);
    SweParams p;
    p.p_tz = 1;
    p.q_tz = 1;
    p.finalize_sigmas(g);
    p.validate(g);

    SweState base = balanced_zonal_state(g, p, 10.0, 5000.0);
    add_height_hill(base, g, 20.0, 1, 2, 0.5);
    Trajectory traj = propagate(base, p, g, 2);

    std::vector<ResidualBlock> blocks(3);
    blocks[0].level = 0;
    blocks[0].selections = {{0, 0, 2}, {3, 1, 0}, {1, 3, 1}};
    blocks[0].weight = 4.0;
    blocks[1].level = 1;
    blocks[1].selections = {{2, 2, 2}, {0, 1, 1}};
    blocks[1].weight = 2.0;
    blocks[2].level = 2;
    blocks[2].selections = {{1, 0, 0}, {3, 3, 2}, {2, 1, 1}, {0, 2, 2}};
    blocks[2].weight = 9.0;
    for (auto& b : blocks) b.target.assign(b.selections.size(), 0.0);
    GOperator gop{&traj, &blocks, nullptr};

    const double sigma_b = 1.3;
    CovarianceFactor V = make_diagonal_b(sigma_b, g);

    Rng rng(cfg.seed, "validate-oracle");
    std::vector<double> d(gop.rows());
    for (double& v : d) v = rng.normal();

    GnConfig gn;
    gn.inner_tol = 1e-13;
    gn.max_inner = 500;
    auto [du, stats] = solve_normal_equations(gop, V, d, gn);

    const int K = g.spatial_size();
    const int rows = gop.rows();
    DenseMatrix G(rows, K);
    for (int c = 0; c < K; ++c) {
        SweState e(g.nlon, g.nlat);
        int var = c / g.points_per_level(), rem = c % g.points_per_level();
        e.var(var).at(rem % g.nlon, rem / g.nlon) = 1.0;
        std::vector<double> col = g_apply(gop, e);
        for (int r = 0; r < rows; ++r) G.at(r, c) = col[r];
    }
    std::vector<double> w;
    for (const auto& b : blocks) w.insert(w.end(), b.selections.size(), b.weight);

    DenseMatrix A(K, K);
    for (int c = 0; c < K; ++c) A.at(c, c) = 1.0 / (sigma_b * sigma_b);
    for (int r = 0; r < rows; ++r)
        for (int c1 = 0; c1 < K; ++c1) {
            if (G.at(r, c1) == 0.0) continue;
            for (int c2 = 0; c2 < K; ++c2) A.at(c1, c2) += G.at(r, c1) * w[r] * G.at(r, c2);
        }
    std::vector<double> rhs(K, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < K; ++c) rhs[c] += G.at(r, c) * w[r] * d[r];
    std::vector<double> du_dense = dense_solve(A, rhs);

    double ref = 0.0;
    for (double v : du_dense) ref = std::max(ref, std::abs(v));
    double worst = 0.0;
    for (int c = 0; c < K; ++c) {
        int var = c / g.points_per_level(), rem = c % g.points_per_level();
        const double got = du.var(var).at(rem % g.nlon, rem / g.nlon);
        worst = std::max(worst, std::abs(got - du_dense[c]) / (1.0 + ref));
    }
    return {"normal_equations_oracle", worst <= cfg.oracle_tol, worst, cfg.oracle_tol, "<="};
}

}  // namespace

std::vector<CheckResult> run_validation_suite(const CheckSuiteConfig& cfg) {
    cfg.grid.validate();
    cfg.params.validate(cfg.grid);
    if (cfg.adjoint_pairs < 1) throw ConfigError("validate: adjoint_pairs must be positive");
    return {check_adjoint(cfg), check_taylor(cfg), check_partition(cfg), check_oracle(cfg)};
}

bool all_checks_passed(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.passed; });
}

std::string checks_csv(const std::vector<CheckResult>& checks) {
    std::string out = csv_row({"check", "passed", "measured", "bound", "comparison"});
    for (const CheckResult& c : checks)
        out += csv_row({c.name, c.passed ? "1" : "0", format_double(c.measured),
                        format_double(c.bound), c.comparison});
    return out;
}

}  // namespace ddvar
