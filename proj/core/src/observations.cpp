#include "ddvar/observations.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "ddvar/errors.hpp"
#include "ddvar/rng.hpp"

namespace ddvar {

std::vector<double> ObservationOperator::apply(const SweState& z) const {
    std::vector<double> y(locations.size());
    for (size_t r = 0; r < locations.size(); ++r) {
        const ObsLocation& L = locations[r];
        y[r] = z.var(L.var).at(L.lon, L.lat);
    }
    return y;
}

void ObservationOperator::apply_transpose(const std::vector<double>& y, SweState& acc) const {
    if (y.size() != locations.size())
        throw DimensionError("observation transpose: value count does not match locations");
    for (size_t r = 0; r < locations.size(); ++r) {
        const ObsLocation& L = locations[r];
        acc.var(L.var).at(L.lon, L.lat) += y[r];
    }
}

int ObservationSet::time_slot(int k) const {
    for (size_t s = 0; s < times.size(); ++s)
        if (times[s] == k) return static_cast<int>(s);
    return -1;
}

size_t ObservationSet::total_count() const {
    size_t n = 0;
    for (const auto& v : values) n += v.size();
    return n;
}

void ObservationSet::validate(const SpaceTimeGrid& grid) const {
    if (times.size() != locations.size() || times.size() != values.size())
        throw ConfigError("observation set: times, locations and values lists differ in length");
    int prev = -1;
    for (size_t s = 0; s < times.size(); ++s) {
        int k = times[s];
        if (k <= prev)
            throw ConfigError("observation set: times must be ascending and unique");
        prev = k;
        if (k < 0 || k >= grid.M)
            throw ConfigError("observation set: time level " + std::to_string(k) +
                              " outside the assimilation window");
        if (locations[s].size() != values[s].size())
            throw ConfigError("observation set: location/value count mismatch at level " +
                              std::to_string(k));
        // Sparse-data regime: at most a quarter of the state observed per level.
        if (4 * locations[s].size() > static_cast<size_t>(grid.spatial_size()))
            throw ConfigError("observation set: more than a quarter of the state observed at level " +
                              std::to_string(k));
        for (const ObsLocation& L : locations[s]) {
            if (L.lon < 0 || L.lon >= grid.nlon || L.lat < 0 || L.lat >= grid.nlat ||
                L.var < 0 || L.var >= SpaceTimeGrid::nvars)
                throw ConfigError("observation set: location index out of range at level " +
                                  std::to_string(k));
        }
    }
    if (sigma_o < 0.0) throw ConfigError("observation set: sigma_o must be nonnegative");
}

std::vector<double> misfit(int k, const Trajectory& traj, const ObservationSet& obs) {
    if (k < 0 || k >= traj.levels())
        throw DimensionError("misfit: time level " + std::to_string(k) +
                             " outside the trajectory");
    int slot = obs.time_slot(k);
    if (slot < 0) return {};
    ObservationOperator H{obs.locations[slot]};
    std::vector<double> d = H.apply(traj.states[k]);
    for (size_t r = 0; r < d.size(); ++r) d[r] = obs.values[slot][r] - d[r];
    return d;
}

namespace {

// Grid points admitted by the layout, ordered row-major (j, then i).
std::vector<std::pair<int, int>> allowed_points(const SpaceTimeGrid& grid, int q_tz,
                                               bool include_clamped_rows) {
    int j_lo = include_clamped_rows ? 0 : q_tz;
    int j_hi = include_clamped_rows ? grid.nlat : grid.nlat - q_tz;
    std::vector<std::pair<int, int>> pts;
    for (int j = j_lo; j < j_hi; ++j)
        for (int i = 0; i < grid.nlon; ++i) pts.emplace_back(i, j);
    return pts;
}

}  // namespace

ObservationSet synth_observations(const Trajectory& truth, const ObsLayout& layout,
                                  double sigma_o, uint64_t seed) {
    const SpaceTimeGrid& grid = truth.grid;
    if (layout.stride_t < 1) throw ConfigError("observation layout: stride_t must be >= 1");
    if (layout.kind == ObsLayout::Kind::strided &&
        (layout.stride_x < 2 || layout.stride_y < 2))
        throw ConfigError("observation layout: strides below 2 would observe more than a "
                          "quarter of the state");
    if (layout.kind == ObsLayout::Kind::random &&
        (layout.coverage <= 0.0 || layout.coverage > 1.0))
        throw ConfigError("observation layout: coverage must lie in (0, 1]");

    std::vector<std::pair<int, int>> pts =
        allowed_points(grid, truth.params.q_tz, layout.include_clamped_rows);
    if (pts.empty())
        throw ConfigError("observation layout: no admissible grid points (grid too small "
                          "for the clamped-row exclusion)");

    // Never exceed the quarter-of-state bound regardless of coverage.
    size_t max_points = static_cast<size_t>(grid.points_per_level()) / 4;

    Rng loc_rng(seed, "obs-locations");
    Rng noise_rng(seed, "obs-noise");

    ObservationSet out;
    out.sigma_o = sigma_o;
    out.seed = seed;

    for (int k = 0; k < truth.levels(); k += layout.stride_t) {
        std::vector<std::pair<int, int>> chosen;
        if (layout.kind == ObsLayout::Kind::strided) {
            for (const auto& [i, j] : pts)
                if (i % layout.stride_x == 0 && j % layout.stride_y == 0) chosen.push_back({i, j});
        } else {
            size_t want = static_cast<size_t>(std::llround(layout.coverage * pts.size()));
            want = std::min(std::max<size_t>(want, 1), std::min(max_points, pts.size()));
            // Partial Fisher-Yates with our own uniform draws; std::sample's
            // selection order is implementation defined.
            std::vector<size_t> idx(pts.size());
            for (size_t r = 0; r < idx.size(); ++r) idx[r] = r;
            for (size_t r = 0; r < want; ++r) {
                size_t span = idx.size() - r;
                size_t pick = r + std::min(span - 1, static_cast<size_t>(loc_rng.uniform01() * span));
                std::swap(idx[r], idx[pick]);
            }
            idx.resize(want);
            std::sort(idx.begin(), idx.end());
            for (size_t r : idx) chosen.push_back(pts[r]);
        }
        if (chosen.size() > max_points) chosen.resize(max_points);

        std::vector<ObsLocation> locs;
        std::vector<double> vals;
        locs.reserve(3 * chosen.size());
        vals.reserve(3 * chosen.size());
        const SweState& z = truth.states[k];
        for (const auto& [i, j] : chosen)
            for (int var = 0; var < SpaceTimeGrid::nvars; ++var) {
                locs.push_back({i, j, var});
                vals.push_back(z.var(var).at(i, j) + sigma_o * noise_rng.normal());
            }
        out.times.push_back(k);
        out.locations.push_back(std::move(locs));
        out.values.push_back(std::move(vals));
    }
    return out;
}

std::string observations_to_json(const ObservationSet& obs) {
    nlohmann::ordered_json j;
    j["magic"] = "ddvar-observations";
    j["sigma_o"] = obs.sigma_o;
    j["seed"] = obs.seed;
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (size_t s = 0; s < obs.times.size(); ++s) {
        nlohmann::ordered_json lev;
        lev["time"] = obs.times[s];
        nlohmann::ordered_json locs = nlohmann::ordered_json::array();
        for (const ObsLocation& L : obs.locations[s])
            locs.push_back(nlohmann::ordered_json::array({L.lon, L.lat, L.var}));
        lev["locations"] = std::move(locs);
        lev["values"] = obs.values[s];
        levels.push_back(std::move(lev));
    }
    j["levels"] = std::move(levels);
    return j.dump(2) + "\n";
}

ObservationSet observations_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("observation file: invalid JSON: ") + e.what());
    }
    try {
        if (!j.contains("magic") || j["magic"] != "ddvar-observations")
            throw ProtocolError("observation file: missing or wrong magic");
        ObservationSet out;
        out.sigma_o = j.at("sigma_o").get<double>();
        out.seed = j.at("seed").get<uint64_t>();
        for (const auto& lev : j.at("levels")) {
            out.times.push_back(lev.at("time").get<int>());
            std::vector<ObsLocation> locs;
            for (const auto& t : lev.at("locations")) {
                if (!t.is_array() || t.size() != 3)
                    throw ProtocolError("observation file: location triplet malformed");
                locs.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
            }
            out.locations.push_back(std::move(locs));
            out.values.push_back(lev.at("values").get<std::vector<double>>());
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("observation file: missing field: ") + e.what());
    }
}

}  // namespace ddvar
