#include "ddvar/spacetime.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "ddvar/errors.hpp"

namespace ddvar {

void SpaceTimeGrid::validate() const {
    if (nlon < 3) throw ConfigError("grid: nlon must be at least 3, got " + std::to_string(nlon));
    if (nlat < 3) throw ConfigError("grid: nlat must be at least 3, got " + std::to_string(nlat));
    if (M < 1) throw ConfigError("grid: M must be at least 1, got " + std::to_string(M));
    if (!(dt > 0.0)) throw ConfigError("grid: dt must be positive");
    if (!(dlambda > 0.0)) throw ConfigError("grid: dlambda must be positive");
    if (!(dtheta > 0.0)) throw ConfigError("grid: dtheta must be positive");
    const double pole_margin = std::numbers::pi / 2.0 - dtheta / 2.0;
    for (int j = 0; j < nlat; ++j) {
        if (!(std::abs(theta(j)) < pole_margin))
            throw ConfigError("grid: latitude row " + std::to_string(j) +
                              " is closer to a pole than dtheta/2");
    }
}

SpaceTimeGrid make_square_grid(int n, int time_levels, double dt, double dlambda,
                               double dtheta) {
    SpaceTimeGrid g;
    g.nlon = n;
    g.nlat = n;
    g.M = time_levels;
    g.dt = dt;
    g.dlambda = dlambda;
    g.dtheta = dtheta;
    g.theta0 = -0.5 * (n - 1) * dtheta;
    g.validate();
    return g;
}

std::vector<int> AxisSpan::indices() const {
    std::vector<int> out;
    out.reserve(length);
    for (int l = 0; l < length; ++l) out.push_back(global_of(l));
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> span_intersection(const AxisSpan& a, const AxisSpan& b) {
    std::vector<int> out;
    for (int g : a.indices())
        if (b.contains(g)) out.push_back(g);
    return out;
}

namespace {

// Core interval of part k (0-based) on an axis of n points split into equal
// parts, widened by the halo. Bounded axes clip at the ends; the periodic
// longitude axis wraps instead.
AxisSpan part_span(int n, int parts, int k, int halo, bool periodic) {
    int core = n / parts;
    int lo = k * core - halo;
    int hi = (k + 1) * core - 1 + halo;
    if (periodic) {
        int start = ((lo % n) + n) % n;
        return {start, core + 2 * halo, n};
    }
    lo = std::max(lo, 0);
    hi = std::min(hi, n - 1);
    return {lo, hi - lo + 1, 0};
}

AxisSpan owned_span(int n, int parts, int k, bool periodic) {
    int core = n / parts;
    return {k * core, core, periodic ? n : 0};
}

void check_axis(const char* name, const char* count_name, int n, int parts,
                const char* halo_name, int halo) {
    if (parts < 1)
        throw ConfigError(std::string(count_name) + " must be at least 1, got " +
                          std::to_string(parts));
    if (halo < 0)
        throw ConfigError(std::string(halo_name) + " must be non-negative, got " +
                          std::to_string(halo));
    if (n % parts != 0)
        throw ConfigError(std::string(name) + ": " + count_name + "=" + std::to_string(parts) +
                          " does not divide the axis length " + std::to_string(n));
    if (2 * halo > n / parts)
        throw ConfigError(std::string(name) + ": halo " + halo_name + "=" + std::to_string(halo) +
                          " too wide, 2*" + halo_name + " must not exceed the core width " +
                          std::to_string(n / parts));
}

}  // namespace

Decomposition build_decomposition(const SpaceTimeGrid& grid, int q, int p1, int p2, int o_x,
                                  int o_y, int o_t) {
    grid.validate();
    check_axis("time", "q", grid.M, q, "o_t", o_t);
    check_axis("longitude", "p1", grid.nlon, p1, "o_x", o_x);
    check_axis("latitude", "p2", grid.nlat, p2, "o_y", o_y);
    if (p1 == 1 && o_x > 0)
        throw ConfigError("longitude: halo o_x=" + std::to_string(o_x) +
                          " requires p1 > 1 (a periodic halo would wrap onto its own core)");

    Decomposition dec;
    dec.grid = grid;
    dec.q = q;
    dec.p1 = p1;
    dec.p2 = p2;
    dec.o_x = o_x;
    dec.o_y = o_y;
    dec.o_t = o_t;
    dec.subdomains.reserve(static_cast<size_t>(q) * p1 * p2);
    for (int j = 1; j <= q; ++j)
        for (int i1 = 1; i1 <= p1; ++i1)
            for (int i2 = 1; i2 <= p2; ++i2) {
                Subdomain s;
                s.j = j;
                s.i1 = i1;
                s.i2 = i2;
                s.i = (i1 - 1) * p2 + i2;
                s.time_range = part_span(grid.M, q, j - 1, o_t, false);
                s.lon_range = part_span(grid.nlon, p1, i1 - 1, o_x, true);
                s.lat_range = part_span(grid.nlat, p2, i2 - 1, o_y, false);
                s.owned_time_range = owned_span(grid.M, q, j - 1, false);
                s.owned_lon_range = owned_span(grid.nlon, p1, i1 - 1, true);
                s.owned_lat_range = owned_span(grid.nlat, p2, i2 - 1, false);
                dec.subdomains.push_back(s);
            }

    dec.weights.nt = grid.M;
    dec.weights.nx = grid.nlon;
    dec.weights.ny = grid.nlat;
    std::vector<int> mult(static_cast<size_t>(grid.M) * grid.nlon * grid.nlat, 0);
    for (const Subdomain& s : dec.subdomains)
        for (int t : s.time_range.indices())
            for (int lat : s.lat_range.indices())
                for (int lon : s.lon_range.indices())
                    ++mult[(static_cast<size_t>(t) * grid.nlat + lat) * grid.nlon + lon];
    dec.weights.w.resize(mult.size());
    for (size_t n = 0; n < mult.size(); ++n) {
        int m = mult[n];
        if (m < 1 || (m & (m - 1)) != 0 || m > 8)
            throw ConfigError("decomposition: point shared by " + std::to_string(m) +
                              " subdomains, halo widths violate pairwise sharing");
        dec.weights.w[n] = 1.0 / m;
    }
    return dec;
}

SpaceTimeField restrict_field(const SpaceTimeField& global, const Decomposition& dec,
                              const Subdomain& sub, RestrictMode mode) {
    const SpaceTimeGrid& g = dec.grid;
    if (global.nt != g.M || global.nx != g.nlon || global.ny != g.nlat)
        throw DimensionError("restrict: field dimensions do not match the grid");
    SpaceTimeField local(sub.time_range.length, sub.lon_range.length, sub.lat_range.length);
    for (int lt = 0; lt < local.nt; ++lt) {
        int t = sub.time_range.global_of(lt);
        for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
            for (int lj = 0; lj < local.ny; ++lj) {
                int gj = sub.lat_range.global_of(lj);
                for (int li = 0; li < local.nx; ++li) {
                    int gi = sub.lon_range.global_of(li);
                    double v = global.at(t, var, gi, gj);
                    if (mode == RestrictMode::weighted) v *= dec.weights.at(t, gi, gj);
                    local.at(lt, var, li, lj) = v;
                }
            }
    }
    return local;
}

SpaceTimeField extend_field(const SpaceTimeField& local, const Decomposition& dec,
                            const Subdomain& sub) {
    if (local.nt != sub.time_range.length || local.nx != sub.lon_range.length ||
        local.ny != sub.lat_range.length)
        throw DimensionError("extend: local field dimensions do not match the subdomain");
    const SpaceTimeGrid& g = dec.grid;
    SpaceTimeField out(g.M, g.nlon, g.nlat);
    for (int lt = 0; lt < local.nt; ++lt) {
        int t = sub.time_range.global_of(lt);
        for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
            for (int lj = 0; lj < local.ny; ++lj) {
                int gj = sub.lat_range.global_of(lj);
                for (int li = 0; li < local.nx; ++li)
                    out.at(t, var, sub.lon_range.global_of(li), gj) = local.at(lt, var, li, lj);
            }
    }
    return out;
}

SpaceTimeField reconstruct(const std::vector<SpaceTimeField>& locals, const Decomposition& dec) {
    if (locals.size() != dec.subdomains.size())
        throw DimensionError("reconstruct: expected " + std::to_string(dec.subdomains.size()) +
                             " local fields, got " + std::to_string(locals.size()));
    const SpaceTimeGrid& g = dec.grid;
    for (size_t s = 0; s < locals.size(); ++s) {
        const Subdomain& sub = dec.subdomains[s];
        if (locals[s].nt != sub.time_range.length || locals[s].nx != sub.lon_range.length ||
            locals[s].ny != sub.lat_range.length)
            throw DimensionError("reconstruct: local field " + std::to_string(s) +
                                 " does not match its subdomain");
    }
    SpaceTimeField out(g.M, g.nlon, g.nlat);
    // Up to 8 subdomains can cover one point (longitude, latitude and time
    // overlaps combined). Pairwise summation keeps the sum of m equal values
    // exact for m a power of two, which gives the bitwise reconstruction
    // guarantee for consistent restrictions.
    double contrib[8];
    for (int t = 0; t < g.M; ++t)
        for (int gj = 0; gj < g.nlat; ++gj)
            for (int gi = 0; gi < g.nlon; ++gi) {
                double w = dec.weights.at(t, gi, gj);
                for (int var = 0; var < SpaceTimeGrid::nvars; ++var) {
                    int n = 0;
                    for (size_t s = 0; s < dec.subdomains.size(); ++s) {
                        const Subdomain& sub = dec.subdomains[s];
                        int lt = sub.time_range.local_of(t);
                        if (lt < 0) continue;
                        int li = sub.lon_range.local_of(gi);
                        if (li < 0) continue;
                        int lj = sub.lat_range.local_of(gj);
                        if (lj < 0) continue;
                        contrib[n++] = locals[s].at(lt, var, li, lj);
                    }
                    while (n > 1) {
                        int m = 0;
                        for (int k = 0; k + 1 < n; k += 2) contrib[m++] = contrib[k] + contrib[k + 1];
                        if (n % 2) contrib[m++] = contrib[n - 1];
                        n = m;
                    }
                    out.at(t, var, gi, gj) = (n == 1 ? contrib[0] * w : 0.0);
                }
            }
    return out;
}

OverlapRegion overlap_region(const Subdomain& a, const Subdomain& b) {
    OverlapRegion r;
    r.times = span_intersection(a.time_range, b.time_range);
    r.lons = span_intersection(a.lon_range, b.lon_range);
    r.lats = span_intersection(a.lat_range, b.lat_range);
    if (r.empty()) {
        r.times.clear();
        r.lons.clear();
        r.lats.clear();
    }
    return r;
}

}  // namespace ddvar
