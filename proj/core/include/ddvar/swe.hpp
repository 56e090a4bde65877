#pragma once

#include <vector>

#include "ddvar/field.hpp"
#include "ddvar/grid.hpp"

namespace ddvar {

// Physical and discretization parameters of the shallow water model.
//
// sigma_lon = 1/(2*a*dlambda) and sigma_lat = 1/(2*a*dtheta) are the centered
// difference factors of the semi-discretization; finalize_sigmas derives them
// from the grid after any parameter overrides.
//
// strict_paper_stencils switches the tendency to a literal transcription of
// the published stencil formulas (doubled Coriolis bracket, u-differences in
// the meridional advection of v, alpha-prefactored height equation without
// the difference factors). The default keeps the stencils dimensionally
// consistent with the continuous equations; both modes share the rest-state
// fixed point.
struct SweParams {
    double a = 6.371e6;          // Earth radius (m)
    double g = 9.80616;          // gravity (m/s^2)
    double omega_rot = 7.292e-5; // Earth angular speed (rad/s)
    double alpha_tz = 0.5;       // three-point averaging weight, in [0,1]
    int p_tz = 2;                // wide-stencil skip in longitude
    int q_tz = 2;                // wide-stencil skip in latitude
    double sigma_lon = 0.0;
    double sigma_lat = 0.0;
    double cfl_limit = 0.8;
    bool strict_paper_stencils = false;

    void finalize_sigmas(const SpaceTimeGrid& grid);
    void validate(const SpaceTimeGrid& grid) const;
    static SweParams for_grid(const SpaceTimeGrid& grid);
};

// Model states at consecutive time levels, dt seconds apart, plus everything
// needed to linearize about them.
struct Trajectory {
    SpaceTimeGrid grid;
    SweParams params;
    double dt = 0.0;
    std::vector<SweState> states;

    int levels() const { return static_cast<int>(states.size()); }
};

// Coriolis parameter f = 2*Omega*sin(theta).
double coriolis(double omega_rot, double theta);

// Turkel-Zwas tendency (U, V, H) of the state. Longitude indices wrap;
// latitude indices clamp to the boundary rows (one-sided stencils there).
SweState tendency(const SweState& z, const SweParams& params, const SpaceTimeGrid& grid);

// Advective CFL number dt*c/(a*min(dlambda, dtheta*cos(theta))) with
// c = max(|u|, |v|, sqrt(g*max h)) and the cosine taken at the worst row.
double cfl_number(const SweState& z, const SweParams& params, const SpaceTimeGrid& grid,
                  double dt);

// One classical RK4 step. Throws CflError when the CFL number reaches the
// configured limit and NumericalError when the result is not finite.
SweState step(const SweState& z, const SweParams& params, const SpaceTimeGrid& grid, double dt);

// nsteps RK4 steps at the grid's dt; result has nsteps+1 states with
// states[0] == z0. A CFL failure reports the offending step index.
Trajectory propagate(const SweState& z0, const SweParams& params, const SpaceTimeGrid& grid,
                     int nsteps);

// Tangent-linear and adjoint of tendency, linearized about base. The two are
// exact transposes: both walk the same Jacobian-entry enumeration, one
// gathering, one scattering.
SweState tendency_tlm(const SweState& base, const SweState& dz, const SweParams& params,
                      const SpaceTimeGrid& grid);
SweState tendency_adj(const SweState& base, const SweState& az, const SweParams& params,
                      const SpaceTimeGrid& grid);

// Tangent-linear and adjoint of one RK4 step about base (stages recomputed).
SweState step_tlm(const SweState& base, const SweState& dz, const SweParams& params,
                  const SpaceTimeGrid& grid, double dt);
SweState step_adj(const SweState& base, const SweState& ay, const SweParams& params,
                  const SpaceTimeGrid& grid, double dt);

// Jacobian of the composed steps k_from..k_to applied to dz (forward), and
// its transpose applied to dy (reverse product). k_from <= k_to, both within
// the trajectory.
SweState tlm_apply(const Trajectory& traj, int k_from, int k_to, const SweState& dz);
SweState adj_apply(const Trajectory& traj, int k_from, int k_to, const SweState& dy);

// Smallest height value; admissible states keep it positive (reported as a
// warning by the tools, never fatal).
double min_height(const SweState& z);

// Zonal flow u = u0*cos(theta), v = 0 with the height field in gradient-wind
// balance: h = h0 - (a*omega_rot*u0 + u0^2/2)*sin^2(theta)/g. The zonal and
// height tendencies vanish identically for this state; the meridional one is
// second order in dtheta.
SweState balanced_zonal_state(const SpaceTimeGrid& grid, const SweParams& params, double u0,
                              double h0);

// Adds a Gaussian height bump of the given amplitude centered at grid point
// (lon0, lat0), with e-folding radius in radians measured in the local
// (lambda*cos(theta), theta) metric.
void add_height_hill(SweState& z, const SpaceTimeGrid& grid, double amplitude, int lon0,
                     int lat0, double radius_rad);

}  // namespace ddvar
