#include "ddvar/swe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ddvar/errors.hpp"

namespace ddvar {

void SweParams::finalize_sigmas(const SpaceTimeGrid& grid) {
    sigma_lon = 1.0 / (2.0 * a * grid.dlambda);
    sigma_lat = 1.0 / (2.0 * a * grid.dtheta);
}

void SweParams::validate(const SpaceTimeGrid& grid) const {
    if (!(a > 0.0)) throw ConfigError("model: Earth radius a must be positive");
    if (!(g > 0.0)) throw ConfigError("model: gravity g must be positive");
    if (!(alpha_tz >= 0.0 && alpha_tz <= 1.0))
        throw ConfigError("model: alpha_tz must lie in [0,1], got " + std::to_string(alpha_tz));
    if (p_tz < 1) throw ConfigError("model: p_tz must be at least 1");
    if (q_tz < 1) throw ConfigError("model: q_tz must be at least 1");
    // 2p < nlon keeps i+p and i-p distinct modulo the periodic wrap; same
    // bound in latitude for symmetry.
    if (2 * p_tz >= grid.nlon)
        throw ConfigError("model: p_tz=" + std::to_string(p_tz) +
                          " too wide for nlon=" + std::to_string(grid.nlon));
    if (2 * q_tz >= grid.nlat)
        throw ConfigError("model: q_tz=" + std::to_string(q_tz) +
                          " too wide for nlat=" + std::to_string(grid.nlat));
    if (!(sigma_lon > 0.0 && sigma_lat > 0.0))
        throw ConfigError("model: sigma_lon/sigma_lat not set; call finalize_sigmas");
    if (!(cfl_limit > 0.0)) throw ConfigError("model: cfl_limit must be positive");
}

SweParams SweParams::for_grid(const SpaceTimeGrid& grid) {
    SweParams p;
    p.finalize_sigmas(grid);
    p.validate(grid);
    return p;
}

double coriolis(double omega_rot, double theta) { return 2.0 * omega_rot * std::sin(theta); }

namespace {

inline int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

inline int clampj(int j, int n) { return std::clamp(j, 0, n - 1); }

void check_shape(const SweState& z, const SpaceTimeGrid& grid, const char* who) {
    if (z.nx() != grid.nlon || z.ny() != grid.nlat)
        throw DimensionError(std::string(who) + ": state shape does not match the grid");
}

}  // namespace

SweState tendency(const SweState& z, const SweParams& P, const SpaceTimeGrid& G) {
    check_shape(z, G, "tendency");
    const int nlon = G.nlon, nlat = G.nlat;
    const int p = P.p_tz, q = P.q_tz;
    const double alpha = P.alpha_tz;
    const double sigL = P.sigma_lon, sigT = P.sigma_lat;
    const Field2& u = z.u;
    const Field2& v = z.v;
    const Field2& h = z.h;
    SweState out(nlon, nlat);

    for (int j = 0; j < nlat; ++j) {
        const double theta = G.theta(j);
        const double cosj = std::cos(theta);
        const double tanj = std::tan(theta);
        const double fj = coriolis(P.omega_rot, theta);
        const int j1 = clampj(j + 1, nlat), j_1 = clampj(j - 1, nlat);
        const int jq = clampj(j + q, nlat), j_q = clampj(j - q, nlat);
        const double cos_jq = G.cos_theta(jq), cos_j_q = G.cos_theta(j_q);
        const double theta_jq = G.theta(jq), theta_j_q = G.theta(j_q);
        for (int i = 0; i < nlon; ++i) {
            const int i1 = wrap(i + 1, nlon), i_1 = wrap(i - 1, nlon);
            const int ip = wrap(i + p, nlon), im = wrap(i - p, nlon);

            // Three-point averaged absolute vorticity factors.
            auto cor_u = [&](int ii) {
                return (fj + u.at(ii, j) * tanj / P.a) * v.at(ii, j);
            };
            auto cor_v = [&](int jj, double theta_jj) {
                return (coriolis(P.omega_rot, theta_jj) +
                        u.at(i, jj) * std::tan(theta_jj) / P.a) *
                       u.at(i, jj);
            };

            const double cor_bracket_u = (1.0 - alpha) * cor_u(i) +
                                         0.5 * alpha * cor_u(ip) + 0.5 * alpha * cor_u(im);
            const double cor_bracket_v = (1.0 - alpha) * cor_v(j, theta) +
                                         0.5 * alpha * cor_v(jq, theta_jq) +
                                         0.5 * alpha * cor_v(j_q, theta_j_q);

            // Wide-stencil divergence pieces: zonal velocity difference and
            // the cosine-weighted meridional one, both averaged with the
            // alpha weights over the transverse direction.
            const double wu = (1.0 - alpha) * (u.at(ip, j) - u.at(im, j)) +
                              0.5 * alpha * (u.at(ip, jq) - u.at(im, jq)) +
                              0.5 * alpha * (u.at(ip, j_q) - u.at(im, j_q));
            const double wv =
                (1.0 - alpha) * (v.at(i, jq) * cos_jq - v.at(i, j_q) * cos_j_q) +
                0.5 * alpha * (v.at(ip, jq) * cos_jq - v.at(ip, j_q) * cos_j_q) +
                0.5 * alpha * (v.at(im, jq) * cos_jq - v.at(im, j_q) * cos_j_q);

            const double cfac = P.strict_paper_stencils ? 2.0 : 1.0;

            out.u.at(i, j) = -sigL * (u.at(i, j) / cosj) * (u.at(i1, j) - u.at(i_1, j)) -
                             sigT * v.at(i, j) * (u.at(i, j1) - u.at(i, j_1)) -
                             sigL * (P.g / (p * cosj)) * (h.at(ip, j) - h.at(im, j)) +
                             cfac * cor_bracket_u;

            const double v_advect =
                P.strict_paper_stencils
                    ? sigT * v.at(i, j) * (u.at(i, j1) - u.at(i, j_1))
                    : sigT * v.at(i, j) * (v.at(i, j1) - v.at(i, j_1));
            out.v.at(i, j) = -sigL * (u.at(i, j) / cosj) * (v.at(i1, j) - v.at(i_1, j)) -
                             v_advect -
                             sigT * (P.g / q) * (h.at(i, jq) - h.at(i, j_q)) -
                             cfac * cor_bracket_v;

            if (P.strict_paper_stencils) {
                out.h.at(i, j) =
                    -alpha * ((u.at(i, j) / cosj) * (h.at(i1, j) - h.at(i_1, j)) +
                              v.at(i, j) * (h.at(i, j1) - h.at(i, j_1)) +
                              (h.at(i, j) / cosj) * wu / p + wv / q);
            } else {
                out.h.at(i, j) =
                    -sigL * (u.at(i, j) / cosj) * (h.at(i1, j) - h.at(i_1, j)) -
                    sigT * v.at(i, j) * (h.at(i, j1) - h.at(i, j_1)) -
                    sigL * (h.at(i, j) / (p * cosj)) * wu -
                    sigT * (h.at(i, j) / (q * cosj)) * wv;
            }
        }
    }
    return out;
}

double cfl_number(const SweState& z, const SweParams& P, const SpaceTimeGrid& G, double dt) {
    check_shape(z, G, "cfl_number");
    double speed = 0.0, hmax = 0.0;
    for (size_t n = 0; n < z.u.v.size(); ++n) {
        speed = std::max(speed, std::abs(z.u.v[n]));
        speed = std::max(speed, std::abs(z.v.v[n]));
        hmax = std::max(hmax, z.h.v[n]);
    }
    speed = std::max(speed, std::sqrt(P.g * std::max(hmax, 0.0)));
    double mincos = 1.0;
    for (int j = 0; j < G.nlat; ++j) mincos = std::min(mincos, G.cos_theta(j));
    const double spacing = P.a * std::min(G.dlambda, G.dtheta * mincos);
    return dt * speed / spacing;
}

namespace {

SweState step_checked(const SweState& z, const SweParams& P, const SpaceTimeGrid& G, double dt,
                      int step_index) {
    const double cfl = cfl_number(z, P, G, dt);
    if (!(cfl < P.cfl_limit)) {
        std::string where = step_index >= 0 ? " at step " + std::to_string(step_index) : "";
        throw CflError("time step unstable" + where + ": CFL number " + std::to_string(cfl) +
                           " reaches the limit " + std::to_string(P.cfl_limit),
                       cfl, P.cfl_limit, step_index);
    }
    SweState k1 = tendency(z, P, G);
    SweState z2 = z;
    axpy(z2, dt / 2.0, k1);
    SweState k2 = tendency(z2, P, G);
    SweState z3 = z;
    axpy(z3, dt / 2.0, k2);
    SweState k3 = tendency(z3, P, G);
    SweState z4 = z;
    axpy(z4, dt, k3);
    SweState k4 = tendency(z4, P, G);
    SweState out = z;
    axpy(out, dt / 6.0, k1);
    axpy(out, dt / 3.0, k2);
    axpy(out, dt / 3.0, k3);
    axpy(out, dt / 6.0, k4);
    if (!all_finite(out))
        throw NumericalError("time step produced non-finite values" +
                             (step_index >= 0 ? " at step " + std::to_string(step_index) : ""));
    return out;
}

}  // namespace

SweState step(const SweState& z, const SweParams& P, const SpaceTimeGrid& G, double dt) {
    return step_checked(z, P, G, dt, -1);
}

Trajectory propagate(const SweState& z0, const SweParams& P, const SpaceTimeGrid& G,
                     int nsteps) {
    if (nsteps < 0) throw ConfigError("propagate: nsteps must be non-negative");
    Trajectory traj;
    traj.grid = G;
    traj.params = P;
    traj.dt = G.dt;
    traj.states.reserve(nsteps + 1);
    traj.states.push_back(z0);
    for (int k = 0; k < nsteps; ++k)
        traj.states.push_back(step_checked(traj.states.back(), P, G, G.dt, k));
    return traj;
}

double min_height(const SweState& z) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : z.h.v) m = std::min(m, x);
    return m;
}

SweState balanced_zonal_state(const SpaceTimeGrid& grid, const SweParams& params, double u0,
                              double h0) {
    SweState z(grid.nlon, grid.nlat);
    for (int j = 0; j < grid.nlat; ++j) {
        const double s = std::sin(grid.theta(j));
        const double u = u0 * grid.cos_theta(j);
        const double h =
            h0 - (params.a * params.omega_rot * u0 + 0.5 * u0 * u0) * s * s / params.g;
        for (int i = 0; i < grid.nlon; ++i) {
            z.u.at(i, j) = u;
            z.h.at(i, j) = h;
        }
    }
    return z;
}

void add_height_hill(SweState& z, const SpaceTimeGrid& grid, double amplitude, int lon0,
                     int lat0, double radius_rad) {
    const double lam0 = lon0 * grid.dlambda;
    const double th0 = grid.theta(lat0);
    for (int j = 0; j < grid.nlat; ++j) {
        const double dth = grid.theta(j) - th0;
        for (int i = 0; i < grid.nlon; ++i) {
            double dlam = i * grid.dlambda - lam0;
            while (dlam > std::numbers::pi) dlam -= 2.0 * std::numbers::pi;
            while (dlam < -std::numbers::pi) dlam += 2.0 * std::numbers::pi;
            const double dx = dlam * grid.cos_theta(j);
            const double d2 = dx * dx + dth * dth;
            z.h.at(i, j) += amplitude * std::exp(-d2 / (radius_rad * radius_rad));
        }
    }
}

}  // namespace ddvar
