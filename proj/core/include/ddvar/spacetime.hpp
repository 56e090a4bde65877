#pragma once

#include <string>
#include <vector>

#include "ddvar/field.hpp"
#include "ddvar/grid.hpp"

namespace ddvar {

// Contiguous index interval on one axis. A periodic axis (period > 0) wraps:
// the span {start, length} covers start, start+1, ..., start+length-1 modulo
// period, with start normalized into [0, period). Bounded axes use period = 0.
struct AxisSpan {
    int start = 0;
    int length = 0;
    int period = 0;

    bool contains(int g) const {
        if (period > 0) {
            int r = (g - start) % period;
            if (r < 0) r += period;
            return r < length;
        }
        return g >= start && g < start + length;
    }
    // Position of global index g within the span, -1 when not contained.
    int local_of(int g) const {
        if (period > 0) {
            int r = (g - start) % period;
            if (r < 0) r += period;
            return r < length ? r : -1;
        }
        int r = g - start;
        return (r >= 0 && r < length) ? r : -1;
    }
    int global_of(int l) const {
        int g = start + l;
        if (period > 0) g %= period;
        return g;
    }
    // All covered global indices in ascending order (a wrapping span yields
    // its low band first).
    std::vector<int> indices() const;
};

// Intersection of two spans on the same axis, as a sorted global index list.
// On a periodic axis the result can be two disjoint bands.
std::vector<int> span_intersection(const AxisSpan& a, const AxisSpan& b);

// One subdomain of the space-time decomposition. Identified by the temporal
// index j in 1..q and spatial index i in 1..p, where i unrolls the (i1, i2)
// pair row-major over the p1 x p2 spatial grid. The *_range spans include the
// halo; the owned_* spans are the halo-free cores, which tile the grid.
struct Subdomain {
    int j = 1;
    int i = 1;
    int i1 = 1;
    int i2 = 1;
    AxisSpan time_range;
    AxisSpan lon_range;
    AxisSpan lat_range;
    AxisSpan owned_time_range;
    AxisSpan owned_lon_range;
    AxisSpan owned_lat_range;

    bool contains(int t, int lon, int lat) const {
        return time_range.contains(t) && lon_range.contains(lon) && lat_range.contains(lat);
    }
    bool owns(int t, int lon, int lat) const {
        return owned_time_range.contains(t) && owned_lon_range.contains(lon) &&
               owned_lat_range.contains(lat);
    }
};

// Reciprocal multiplicity 1/m at every space-time point, where m is the
// number of subdomains whose halo-inclusive region covers the point. With
// pairwise sharing per direction m is a power of two (up to 8 at corners
// shared in longitude, latitude and time), so every weight is exact in
// binary floating point and the weighted restrictions sum back to the
// original field without rounding.
struct OverlapWeightField {
    int nt = 0;
    int nx = 0;
    int ny = 0;
    std::vector<double> w;

    double at(int t, int i, int j) const {
        return w[(static_cast<size_t>(t) * ny + j) * nx + i];
    }
};

struct Decomposition {
    SpaceTimeGrid grid;
    int q = 1;
    int p1 = 1;
    int p2 = 1;
    int o_x = 0;
    int o_y = 0;
    int o_t = 0;
    std::vector<Subdomain> subdomains;  // canonical order: j-major, then (i1, i2) row-major
    OverlapWeightField weights;

    int p() const { return p1 * p2; }
    int size() const { return q * p1 * p2; }
    const Subdomain& at(int j, int i) const {  // 1-based indices
        return subdomains[static_cast<size_t>(j - 1) * p() + (i - 1)];
    }
};

// Validates divisibility (q | M, p1 | nlon, p2 | nlat) and halo widths
// (2*o <= core width per direction, and o_x = 0 when p1 = 1 since a periodic
// halo would wrap onto its own core). Throws ConfigError naming the offending
// direction.
Decomposition build_decomposition(const SpaceTimeGrid& grid, int q, int p1, int p2, int o_x,
                                  int o_y, int o_t);

enum class RestrictMode { plain, weighted };

// Copies the global field's values on the subdomain's halo-inclusive box.
// Local storage is (t, var, i, j) over the box, time-major. Weighted mode
// additionally multiplies each value by the overlap weight (exact, since
// weights are powers of 1/2).
SpaceTimeField restrict_field(const SpaceTimeField& global, const Decomposition& dec,
                              const Subdomain& sub, RestrictMode mode);

// Zero-padding extension: the local field's values on the subdomain's box,
// exactly zero everywhere else.
SpaceTimeField extend_field(const SpaceTimeField& local, const Decomposition& dec,
                            const Subdomain& sub);

// Partition-of-unity summation: per point, gathers the covering subdomains'
// values in canonical order, pairwise-sums them, and scales by the overlap
// weight. For locals that are plain restrictions of one global field the
// gathered values are equal, so the result reproduces that field bitwise.
SpaceTimeField reconstruct(const std::vector<SpaceTimeField>& locals, const Decomposition& dec);

// Intersection of two subdomains' halo-inclusive boxes, as per-axis global
// index lists; the region is their Cartesian product. overlap_region(a, a)
// is a's full box; disjoint subdomains give an empty region.
struct OverlapRegion {
    std::vector<int> times;
    std::vector<int> lons;
    std::vector<int> lats;

    bool empty() const { return times.empty() || lons.empty() || lats.empty(); }
    size_t size() const { return times.size() * lons.size() * lats.size(); }
};

OverlapRegion overlap_region(const Subdomain& a, const Subdomain& b);

// Geometry summary (counts, halo widths, per-subdomain index ranges with
// 1-based subdomain ids) as a JSON document for reports.
std::string decomposition_to_json(const Decomposition& dec);

}  // namespace ddvar
