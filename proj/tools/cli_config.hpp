#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "ddvar/covariance.hpp"
#include "ddvar/checks.hpp"
#include "ddvar/grid.hpp"
#include "ddvar/observations.hpp"
#include "ddvar/orchestrator.hpp"
#include "ddvar/swe.hpp"

namespace ddvar::cli {

// One registry entry: dotted key, default value ("auto" = derived from the
// grid size at resolve time), one-line help.
struct KeySpec {
    const char* key;
    const char* default_value;
    const char* help;
};

const std::vector<KeySpec>& config_registry();

// Effective configuration: the full registry with defaults, overlaid by the
// config file, the environment and --set flags, in that order. Unknown or
// duplicate keys and malformed values throw ConfigError naming the key.
class CliConfig {
public:
    static CliConfig defaults();

    // key = value lines; '#' comments and blank lines ignored. A key may
    // appear at most once per file.
    void load_file(const std::filesystem::path& path);
    void set(const std::string& key, const std::string& value);
    // "key=value" as passed to --set.
    void set_pair(const std::string& pair);

    // Replaces every "auto" with its derived value; call once after all
    // overrides and before any getter that depends on them.
    void resolve();

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_list(const std::string& key) const;
    std::vector<int> get_int_list(const std::string& key) const;

    // Assembled module inputs (each validated by the owning module).
    SpaceTimeGrid grid() const;
    SweParams params(const SpaceTimeGrid& g) const;
    CovarianceFactor background_covariance(const SpaceTimeGrid& g) const;
    ObsLayout obs_layout() const;
    GnConfig gn() const;
    // Everything except background and observations, which the command fills.
    DdRunConfig dd_base() const;
    CheckSuiteConfig check_suite() const;

    // Cross-module validation of the whole document before any compute:
    // grid, model parameters, decomposition shape, solver and covariance
    // settings all checked with their owning module's preconditions.
    void validate_all() const;

    // Full echo in registry order, every default included.
    std::vector<std::pair<std::string, std::string>> echo() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace ddvar::cli
