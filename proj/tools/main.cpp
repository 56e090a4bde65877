#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_commands.hpp"
#include "cli_config.hpp"
#include "ddvar/errors.hpp"
#include "ddvar/report_io.hpp"

namespace {

using ddvar::cli::CliConfig;
using ddvar::cli::CommandIo;

struct CommonOpts {
    std::string config_path;
    std::string output_dir;
    std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
    sub->add_option("-c,--config", opts.config_path,
                    "configuration file: 'key = value' lines, '#' comments");
    sub->add_option("-s,--set", opts.sets, "override one key, e.g. --set grid.n=8");
    sub->add_option("-o,--output", opts.output_dir,
                    "output directory (beats DDVAR_OUTPUT_DIR and the config)");
}

// Precedence, lowest to highest: registry defaults, config file,
// DDVAR_OUTPUT_DIR (output.dir only), --set overrides, --output.
CliConfig build_config(const CommonOpts& opts) {
    CliConfig cfg = CliConfig::defaults();
    if (!opts.config_path.empty()) cfg.load_file(opts.config_path);
    if (const char* env = std::getenv("DDVAR_OUTPUT_DIR"); env && *env)
        cfg.set("output.dir", env);
    for (const std::string& pair : opts.sets) cfg.set_pair(pair);
    if (!opts.output_dir.empty()) cfg.set("output.dir", opts.output_dir);
    cfg.resolve();
    return cfg;
}

int dispatch(const std::string& name, const CommonOpts& opts) {
    CliConfig cfg = build_config(opts);
    CommandIo io(name, cfg, cfg.get("output.dir"), std::cout);
    if (name == "validate") return ddvar::cli::cmd_validate(io);
    if (name == "twin") return ddvar::cli::cmd_twin(io);
    if (name == "run-dd") return ddvar::cli::cmd_run(io, false);
    if (name == "run-global") return ddvar::cli::cmd_run(io, true);
    return ddvar::cli::cmd_perf(io);
}

void print_registry() {
    for (const auto& spec : ddvar::cli::config_registry()) {
        std::string def = spec.default_value;
        std::cout << spec.key << " = " << (def.empty() ? "(empty)" : def) << "\n    "
                  << spec.help << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Domain-decomposed four-dimensional variational assimilation for the "
        "shallow water model on the sphere"};
    app.set_version_flag("--version", ddvar::kArtifactVersion);
    bool list_keys = false;
    app.add_flag("--keys", list_keys, "list every configuration key with default and meaning");
    app.require_subcommand(0, 1);

    CommonOpts opts;
    const std::pair<const char*, const char*> commands[] = {
        {"validate", "run the operator checks (adjoint, Taylor, partition, dense oracle)"},
        {"twin", "synthetic-truth experiment: observe, perturb, assimilate, score"},
        {"run-dd", "decomposed assimilation of a background and observation files"},
        {"run-global", "undecomposed assimilation of the same inputs"},
        {"perf", "performance model tables: memory, speedup, scalability, surface-to-volume"},
    };
    for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (list_keys) {
        print_registry();
        return 0;
    }
    std::vector<CLI::App*> chosen = app.get_subcommands();
    if (chosen.empty()) {
        std::cerr << "error: a command is required (see --help)\n";
        return 2;
    }

    try {
        return dispatch(chosen.front()->get_name(), opts);
    } catch (const ddvar::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ddvar::DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ddvar::ProtocolError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const ddvar::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
