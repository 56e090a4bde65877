#include "cli_commands.hpp"

#include <unistd.h>

#include <ctime>
#include <ostream>
#include <utility>
#include <vector>

#include "ddvar/checks.hpp"
#include "ddvar/errors.hpp"
#include "ddvar/io.hpp"
#include "ddvar/orchestrator.hpp"
#include "ddvar/perfmodel.hpp"
#include "ddvar/rng.hpp"
#include "ddvar/sha256.hpp"
#include "ddvar/spacetime.hpp"
#include "ddvar/swe_io.hpp"

namespace ddvar::cli {

namespace {

std::string utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string host_name() {
    char buf[256] = {};
    if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
    return buf[0] ? buf : "unknown";
}

}  // namespace

CommandIo::CommandIo(std::string command, CliConfig cfg, std::filesystem::path out_dir,
                     std::ostream& notices)
    : command_(std::move(command)),
      cfg_(std::move(cfg)),
      out_dir_(std::move(out_dir)),
      notices_(&notices) {}

void CommandIo::begin() {
    start_ = std::chrono::steady_clock::now();
    manifest_.command = command_;
    manifest_.seed = cfg_.get_u64("assim.seed");
    manifest_.host = host_name();
    manifest_.started_utc = utc_now();
    manifest_.finalized = false;
    manifest_.config = cfg_.echo();
    manifest_.outputs.clear();
    atomic_write(out_dir_ / "manifest.json", manifest_to_json(manifest_));
}

void CommandIo::emit(const std::string& name, const std::string& content) {
    atomic_write(out_dir_ / name, content);
    manifest_.outputs.push_back({name, sha256_hex(content)});
}

void CommandIo::emit_snapshot(const std::string& name, const SweState& state,
                              const SweParams& params) {
    emit(name, state_to_snapshot(state, params));
}

void CommandIo::finish() {
    manifest_.wall_seconds = elapsed_seconds();
    manifest_.finalized = true;
    atomic_write(out_dir_ / "manifest.json", manifest_to_json(manifest_));
}

double CommandIo::elapsed_seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

int cmd_validate(CommandIo& io) {
    io.cfg().validate_all();
    io.begin();
    std::vector<CheckResult> checks = run_validation_suite(io.cfg().check_suite());
    io.emit("checks.csv", checks_csv(checks));
    for (const CheckResult& c : checks)
        io.notices() << (c.passed ? "[ ok ] " : "[FAIL] ") << c.name << ": "
                     << format_double(c.measured) << " " << c.comparison << " "
                     << format_double(c.bound) << "\n";
    const bool ok = all_checks_passed(checks);
    io.notices() << (ok ? "validation suite passed\n" : "validation suite FAILED\n");
    io.finish();
    return ok ? 0 : 1;
}

int cmd_twin(CommandIo& io) {
    const CliConfig& cfg = io.cfg();
    cfg.validate_all();
    io.begin();

    DdRunConfig run = cfg.dd_base();
    const SpaceTimeGrid& g = run.grid;

    SweState truth0 =
        balanced_zonal_state(g, run.params, cfg.get_double("twin.u0"), cfg.get_double("twin.h0"));
    add_height_hill(truth0, g, cfg.get_double("twin.hill_amplitude"),
                    cfg.get_int("twin.hill_lon"), cfg.get_int("twin.hill_lat"),
                    cfg.get_double("twin.hill_radius"));
    Trajectory truth = propagate(truth0, run.params, g, g.M - 1);

    const std::uint64_t seed = cfg.get_u64("assim.seed");
    run.obs = synth_observations(truth, cfg.obs_layout(), cfg.get_double("assim.sigma_o"),
                                 seed);

    Rng perturb(seed, "truth-perturbation");
    SweState w(g.nlon, g.nlat);
    for (int var = 0; var < 3; ++var)
        for (double& x : w.var(var).v) x = perturb.normal();
    run.background = truth0;
    axpy(run.background, cfg.get_double("twin.noise_scale"), run.b.v_apply(w));

    AnalysisReport rep = run_dd(run);

    io.emit_snapshot("truth.bin", truth0, run.params);
    io.emit_snapshot("background.bin", run.background, run.params);
    io.emit("observations.json", observations_to_json(run.obs));
    io.emit_snapshot("analysis.bin", rep.analysis, run.params);
    io.emit("report.json", report_to_json(rep));
    io.emit("convergence.csv", convergence_csv(rep));

    std::vector<RmseRow> rmse = {rmse_row("background", run.background, truth0),
                                 rmse_row("analysis", rep.analysis, truth0)};
    io.emit("rmse.csv", rmse_csv(rmse));

    Decomposition dec = build_decomposition(g, run.q, run.p1, run.p2, run.o_x, run.o_y,
                                            run.o_t);
    io.emit("e_table.csv", e_table_csv(convergence_history(rep, run, truth0), dec));
    io.emit("timings.json", timings_to_json(rep, io.elapsed_seconds()));

    io.notices() << "twin: " << rep.rounds << " rounds, "
                 << (rep.converged ? "converged" : "round cap reached")
                 << ", analysis cost " << format_double(rep.analysis_cost.total)
                 << ", rho " << rep.rho << "\n";
    io.notices() << "rmse: background " << format_double(rmse[0].combined) << " -> analysis "
                 << format_double(rmse[1].combined) << "\n";
    io.finish();
    return 0;
}

int cmd_run(CommandIo& io, bool global) {
    const CliConfig& cfg = io.cfg();
    cfg.validate_all();
    const std::string bg_path = cfg.get("input.background");
    const std::string obs_path = cfg.get("input.observations");
    if (bg_path.empty())
        throw ConfigError("config: input.background is required for this command");
    if (obs_path.empty())
        throw ConfigError("config: input.observations is required for this command");

    DdRunConfig run = cfg.dd_base();
    run.background = read_state_snapshot(bg_path);
    run.obs = observations_from_json(read_file(obs_path));

    io.begin();
    AnalysisReport rep = global ? run_global(run) : run_dd(run);

    io.emit_snapshot("analysis.bin", rep.analysis, run.params);
    io.emit("report.json", report_to_json(rep));
    io.emit("convergence.csv", convergence_csv(rep));
    io.emit("timings.json", timings_to_json(rep, io.elapsed_seconds()));

    io.notices() << (global ? "run-global: " : "run-dd: ") << rep.rounds << " rounds, "
                 << (rep.converged ? "converged" : "round cap reached")
                 << ", analysis cost " << format_double(rep.analysis_cost.total)
                 << ", rho " << rep.rho << "\n";
    io.finish();
    return 0;
}

namespace {

std::vector<ScalabilityRecord> records_from_csv(const std::string& text) {
    const std::string expected = "qp,n_loc,rho_g,rho_dd,t_flop,t_oh,s_loc";
    std::vector<ScalabilityRecord> out;
    size_t pos = 0;
    int lineno = 0;
    while (pos < text.size()) {
        size_t nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() : nl + 1;
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line != expected)
                throw ConfigError("perf.timings: expected header '" + expected + "'");
            continue;
        }
        std::vector<double> f;
        size_t p = 0;
        while (p <= line.size()) {
            size_t comma = line.find(',', p);
            try {
                f.push_back(std::stod(line.substr(p, comma - p)));
            } catch (const std::exception&) {
                throw ConfigError("perf.timings: line " + std::to_string(lineno) +
                                  " is not numeric");
            }
            if (comma == std::string::npos) break;
            p = comma + 1;
        }
        if (f.size() != 7)
            throw ConfigError("perf.timings: line " + std::to_string(lineno) + " has " +
                              std::to_string(f.size()) + " fields, expected 7");
        ScalabilityRecord r{f[0], f[1], f[2], f[3], f[4], f[5], f[6]};
        r.validate();
        out.push_back(r);
    }
    if (out.empty()) throw ConfigError("perf.timings: no records");
    return out;
}

}  // namespace

int cmd_perf(CommandIo& io) {
    const CliConfig& cfg = io.cfg();
    cfg.validate_all();
    ComplexityPoly poly;
    poly.a = cfg.get_list("perf.poly");
    poly.validate();

    std::vector<ScalabilityRecord> records;
    const std::string timings_path = cfg.get("perf.timings");
    if (!timings_path.empty()) {
        records = records_from_csv(read_file(timings_path));
    } else {
        io.notices() << "notice: no timing source configured (perf.timings); "
                        "scalability table uses modeled inputs\n";
        const double n_loc = cfg.get_double("perf.n_loc");
        const double t_flop = cfg.get_double("perf.time_scale") * poly.eval(n_loc);
        for (int qp : cfg.get_int_list("perf.qp_list")) {
            ScalabilityRecord r;
            r.qp = qp;
            r.n_loc = n_loc;
            r.rho_g = cfg.get_double("perf.rho_g");
            r.rho_dd = cfg.get_double("perf.rho_dd");
            r.t_flop = t_flop;
            r.t_oh = cfg.get_double("perf.oh_fraction") * t_flop;
            r.s_loc = cfg.get_double("perf.s_loc");
            r.validate();
            records.push_back(r);
        }
    }

    io.begin();
    io.emit("memory.csv", memory_table_csv());
    io.emit("speedup.csv", speedup_table_csv());
    io.emit("scalability.csv",
            scalability_table_csv(records, poly, cfg.get_bool("perf.literal_formula")));

    std::string sv = csv_row({"D_t (time levels)", "D_s (space columns)",
                              "surface_to_volume (dimensionless)"});
    for (int dt : cfg.get_int_list("perf.d_t_list"))
        for (int ds : cfg.get_int_list("perf.d_s_list"))
            sv += csv_row({std::to_string(dt), std::to_string(ds),
                           format_double(surface_to_volume(dt, ds))});
    io.emit("surface_to_volume.csv", sv);

    io.notices() << "perf: wrote memory.csv, speedup.csv, scalability.csv, "
                    "surface_to_volume.csv\n";
    io.finish();
    return 0;
}

}  // namespace ddvar::cli
