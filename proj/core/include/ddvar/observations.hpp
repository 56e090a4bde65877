#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddvar/field.hpp"
#include "ddvar/grid.hpp"
#include "ddvar/swe.hpp"

namespace ddvar {

// One observed scalar: grid point plus variable index (0 = u, 1 = v, 2 = h).
struct ObsLocation {
    int lon = 0;
    int lat = 0;
    int var = 0;

    bool operator==(const ObsLocation&) const = default;
};

// Point-sampling observation map for one time level. Each row selects exactly
// one state entry, so the map is linear, equals its own tangent, and its
// transpose is a scatter-add.
struct ObservationOperator {
    std::vector<ObsLocation> locations;

    std::vector<double> apply(const SweState& z) const;
    void apply_transpose(const std::vector<double>& y, SweState& acc) const;
};

// Observations grouped by time level; times are ascending and unique, with
// one location list and value vector per listed time. sigma_o is the standard
// deviation of the noise the values were drawn with (0 = exact samples);
// seed records the draw for provenance.
struct ObservationSet {
    std::vector<int> times;
    std::vector<std::vector<ObsLocation>> locations;
    std::vector<std::vector<double>> values;
    double sigma_o = 0.0;
    uint64_t seed = 0;

    // Index into times/locations/values for level k, -1 when k is unobserved.
    int time_slot(int k) const;
    size_t total_count() const;
    // Checks index ranges, times within the window, per-time count of
    // observed scalars at most a quarter of the state size, and matching
    // location/value lengths.
    void validate(const SpaceTimeGrid& grid) const;
};

// d_k = v_k - H^(k)(trajectory at level k); empty when k is unobserved.
std::vector<double> misfit(int k, const Trajectory& traj, const ObservationSet& obs);

// Sampling pattern for synthetic observations.
//   random:  a seeded draw of `coverage` of the allowed grid points per
//            observed level, all three variables at each point;
//   strided: the fixed lattice of every (stride_x, stride_y)-th point, all
//            three variables (2x2 strides give exactly a quarter of the
//            state, the densest admissible set).
// Levels 0, stride_t, 2*stride_t, ... are observed. Rows within q_tz of the
// latitude boundary carry one-sided stencils and are skipped unless
// include_clamped_rows is set.
struct ObsLayout {
    enum class Kind { random, strided };
    Kind kind = Kind::random;
    double coverage = 0.1;
    int stride_t = 2;
    int stride_x = 2;
    int stride_y = 2;
    bool include_clamped_rows = false;
};

// Samples the truth trajectory per the layout and adds N(0, sigma_o^2) noise
// from the seeded generator; byte-identical output for identical arguments.
ObservationSet synth_observations(const Trajectory& truth, const ObsLayout& layout,
                                  double sigma_o, uint64_t seed);

std::string observations_to_json(const ObservationSet& obs);
ObservationSet observations_from_json(const std::string& text);

}  // namespace ddvar
