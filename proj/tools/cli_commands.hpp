#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "cli_config.hpp"
#include "ddvar/report_io.hpp"
#include "ddvar/swe.hpp"

namespace ddvar::cli {

// Output side of one command invocation: the directory, the manifest that
// brackets the run, and the content hashes of everything written. The
// manifest goes to disk before any computation (finalized = false) and is
// rewritten at the end with the output list and wall clock; every file write
// is atomic, so a crash leaves either no file or a complete one.
class CommandIo {
public:
    CommandIo(std::string command, CliConfig cfg, std::filesystem::path out_dir,
              std::ostream& notices);

    const CliConfig& cfg() const { return cfg_; }
    std::ostream& notices() { return *notices_; }
    const std::filesystem::path& out_dir() const { return out_dir_; }

    void begin();
    void emit(const std::string& name, const std::string& content);
    void emit_snapshot(const std::string& name, const SweState& state, const SweParams& params);
    void finish();
    double elapsed_seconds() const;

private:
    std::string command_;
    CliConfig cfg_;
    std::filesystem::path out_dir_;
    std::ostream* notices_;
    RunManifest manifest_;
    std::chrono::steady_clock::time_point start_;
};

// Each returns the process exit code; module errors propagate as exceptions
// and are mapped by the caller (ConfigError family to 2, numerical to 3).
int cmd_validate(CommandIo& io);
int cmd_twin(CommandIo& io);
int cmd_run(CommandIo& io, bool global);
int cmd_perf(CommandIo& io);

}  // namespace ddvar::cli
