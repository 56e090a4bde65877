#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ddvar/orchestrator.hpp"

namespace ddvar {

inline constexpr const char* kArtifactVersion = "ddvar 0.1.0";

// Deterministic serializations of a run's results. State payloads go to
// snapshot files and wall-clock times to the timings document, so everything
// here is byte-reproducible for a fixed seed.
std::string report_to_json(const AnalysisReport& rep);
std::string convergence_csv(const AnalysisReport& rep);

// Phase timings plus the caller's total. Never part of reproducibility
// comparisons.
std::string timings_to_json(const AnalysisReport& rep, double wall_seconds);

// Error-vs-reference table; one column per subdomain in canonical order.
std::string e_table_csv(const ETable& table, const Decomposition& dec);

// Root-mean-square distance to a reference state, per variable and over all
// three fields together.
struct RmseRow {
    std::string label;
    double u = 0.0;
    double v = 0.0;
    double h = 0.0;
    double combined = 0.0;
};
RmseRow rmse_row(const std::string& label, const SweState& state, const SweState& reference);
std::string rmse_csv(const std::vector<RmseRow>& rows);

// Everything needed to reproduce a run: the full config echo (defaults
// included), the artifact version and seed, plus content hashes of the
// outputs. Written once before the run (finalized = false, no outputs) and
// rewritten afterwards.
struct ManifestFile {
    std::string name;
    std::string sha256_hex;
};
struct RunManifest {
    std::string command;
    std::string version = kArtifactVersion;
    std::uint64_t seed = 0;
    std::string host;
    std::string started_utc;
    double wall_seconds = 0.0;
    bool finalized = false;
    std::vector<std::pair<std::string, std::string>> config;  // key order as given
    std::vector<ManifestFile> outputs;
};
std::string manifest_to_json(const RunManifest& m);

}  // namespace ddvar
