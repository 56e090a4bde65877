#pragma once

#include <cmath>
#include <vector>

namespace ddvar {

// Discretization of the space-time slab: a periodic longitude-latitude grid
// carrying the three prognostic variables (u, v, h) over M time levels.
//
// Latitude rows are theta_j = theta0 + j*dtheta and must stay strictly inside
// the poles by at least half a grid spacing so that cos(theta_j) > 0 holds
// with margin on every row.
struct SpaceTimeGrid {
    int nlon = 0;        // longitude points, index arithmetic is modulo nlon
    int nlat = 0;        // latitude points
    int M = 0;           // time levels in the assimilation window
    double dt = 0.0;     // seconds between time levels
    double dlambda = 0.0;  // longitude spacing (radians)
    double dtheta = 0.0;   // latitude spacing (radians)
    double theta0 = 0.0;   // southernmost latitude (radians)

    static constexpr int nvars = 3;

    double theta(int j) const { return theta0 + j * dtheta; }
    double cos_theta(int j) const { return std::cos(theta(j)); }

    // Problem size in space, K = nlon * nlat * 3.
    int spatial_size() const { return nlon * nlat * nvars; }
    int points_per_level() const { return nlon * nlat; }

    // Throws ConfigError when a structural invariant fails.
    void validate() const;
};

// Convenience constructor for the common square n x n grid centered on the
// equator: theta0 = -(nlat-1)/2 * dtheta.
SpaceTimeGrid make_square_grid(int n, int time_levels, double dt, double dlambda, double dtheta);

}  // namespace ddvar
