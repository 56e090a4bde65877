#include "cli_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ddvar/errors.hpp"
#include "ddvar/io.hpp"
#include "ddvar/spacetime.hpp"

namespace ddvar::cli {

const std::vector<KeySpec>& config_registry() {
    static const std::vector<KeySpec> registry = {
        {"grid.n", "6", "points per side of the square lon-lat grid"},
        {"grid.M", "3", "time levels in the assimilation window"},
        {"grid.dt", "300", "seconds between time levels"},
        {"grid.dlambda", "auto", "longitude spacing in radians (auto: 2*pi/n)"},
        {"grid.dtheta", "auto", "latitude spacing in radians (auto: pi/(2n) band)"},
        {"grid.theta0", "auto", "southernmost latitude in radians (auto: centered band)"},
        {"model.a", "6.371e6", "planet radius (m)"},
        {"model.g", "9.80616", "gravity (m/s^2)"},
        {"model.omega_rot", "7.292e-5", "rotation rate (rad/s)"},
        {"model.alpha_tz", "0.5", "three-point averaging weight in [0,1]"},
        {"model.p_tz", "2", "wide-stencil skip in longitude"},
        {"model.q_tz", "2", "wide-stencil skip in latitude"},
        {"model.cfl_limit", "0.8", "advective CFL rejection threshold"},
        {"model.strict_paper_stencils", "false", "literal published stencil transcription"},
        {"dd.q", "1", "temporal subdomain count (divides M)"},
        {"dd.p1", "1", "longitudinal subdomain count (divides n)"},
        {"dd.p2", "1", "latitudinal subdomain count (divides n)"},
        {"dd.o_x", "0", "longitude halo width (0 when p1 = 1)"},
        {"dd.o_y", "0", "latitude halo width"},
        {"dd.o_t", "0", "temporal halo width"},
        {"assim.lambda", "1", "observation term multiplier"},
        {"assim.mu", "1", "overlap term multiplier"},
        {"assim.sigma_b", "10", "background error standard deviation"},
        {"assim.sigma_r", "0.5", "observation error standard deviation in the functional"},
        {"assim.sigma_o", "0", "noise added to synthetic observations"},
        {"assim.b_kind", "diagonal", "background covariance kind: diagonal | gaussian"},
        {"assim.length_scale", "2", "gaussian covariance e-folding distance (grid points)"},
        {"assim.seed", "1", "master seed; every random stage draws a named substream"},
        {"obs.layout", "strided", "synthetic observation pattern: strided | random"},
        {"obs.coverage", "0.25", "fraction of admissible points per level (random layout)"},
        {"obs.stride_t", "1", "observe every stride_t-th time level"},
        {"obs.stride_x", "2", "longitude stride (strided layout)"},
        {"obs.stride_y", "2", "latitude stride (strided layout)"},
        {"obs.include_clamped_rows", "false", "also observe one-sided-stencil boundary rows"},
        {"solver.max_outer", "8", "Gauss-Newton outer iteration cap"},
        {"solver.outer_tol", "1e-8", "relative stationarity threshold for the outer loop"},
        {"solver.max_inner", "300", "conjugate-gradient iteration cap"},
        {"solver.inner_tol", "1e-10", "relative residual target for the inner solve"},
        {"solver.damping", "0", "Levenberg damping added to the normal equations"},
        {"solver.eps", "5e-8", "round-to-round stop, relative to the background norm"},
        {"solver.max_rounds", "60", "exchange round cap (reaching it flags, not fails)"},
        {"solver.exchange_every", "round", "carrier refresh: round | iteration"},
        {"twin.u0", "20", "zonal jet speed of the truth state (m/s)"},
        {"twin.h0", "5200", "mean free-surface height of the truth state (m)"},
        {"twin.hill_amplitude", "40", "height anomaly added to the truth (m)"},
        {"twin.hill_lon", "auto", "anomaly center, longitude index (auto: n/3)"},
        {"twin.hill_lat", "auto", "anomaly center, latitude index (auto: n/2)"},
        {"twin.hill_radius", "0.5", "anomaly e-folding radius (radians)"},
        {"twin.noise_scale", "1", "background perturbation in units of sigma_b"},
        {"input.background", "", "background snapshot path (run-dd / run-global)"},
        {"input.observations", "", "observation set path (run-dd / run-global)"},
        {"output.dir", "ddvar_out", "output directory (DDVAR_OUTPUT_DIR overrides)"},
        {"runtime.workers", "1", "subdomain solver threads; results are identical for any"},
        {"validate.adjoint_pairs", "100", "random direction pairs for the adjoint check"},
        {"validate.adjoint_tol", "1e-12", "adjoint pairing defect bound, relative"},
        {"validate.taylor_min_order", "1.9", "least-squares convergence order bound"},
        {"validate.oracle_tol", "1e-8", "dense normal-equations agreement bound"},
        {"validate.inject_fault", "none", "deliberate corruption: none | adjoint_sign_flip"},
        {"perf.poly", "0,0,1", "cost polynomial coefficients a_0..a_d, ascending"},
        {"perf.qp_list", "2,4,8,16,32,64", "subdomain counts for the scalability table"},
        {"perf.n_loc", "3072", "local problem size for modeled records"},
        {"perf.time_scale", "1e-9", "seconds per cost-polynomial unit (modeled records)"},
        {"perf.oh_fraction", "0.1", "overhead as a fraction of local flop time (modeled)"},
        {"perf.s_loc", "18", "local accelerator speedup for modeled records"},
        {"perf.rho_g", "10", "global iteration product for modeled records"},
        {"perf.rho_dd", "10", "decomposed iteration product for modeled records"},
        {"perf.timings", "", "measured scalability records CSV; empty = modeled fallback"},
        {"perf.literal_formula", "false", "use the literal printed measured-scale-up form"},
        {"perf.d_t_list", "1,2,4,8", "temporal subdomain sizes for the surface-to-volume table"},
        {"perf.d_s_list", "4,8,16,64", "spatial subdomain sizes for the surface-to-volume table"},
    };
    return registry;
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
    throw ConfigError("config: key '" + key + "' has value '" + value + "', expected " +
                      expected);
}

}  // namespace

CliConfig CliConfig::defaults() {
    CliConfig cfg;
    for (const KeySpec& spec : config_registry()) cfg.values_[spec.key] = spec.default_value;
    return cfg;
}

void CliConfig::set(const std::string& key, const std::string& value) {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
    it->second = value;
}

void CliConfig::set_pair(const std::string& pair) {
    size_t eq = pair.find('=');
    if (eq == std::string::npos)
        throw ConfigError("config: override '" + pair + "' is not of the form key=value");
    set(trim(pair.substr(0, eq)), trim(pair.substr(eq + 1)));
}

void CliConfig::load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: " + path.filename().string() + ":" +
                              std::to_string(lineno) + ": expected key = value");
        std::string key = trim(s.substr(0, eq));
        if (auto [it, fresh] = seen.emplace(key, lineno); !fresh)
            throw ConfigError("config: " + path.filename().string() + ":" +
                              std::to_string(lineno) + ": duplicate key '" + key +
                              "' (first on line " + std::to_string(it->second) + ")");
        set(key, trim(s.substr(eq + 1)));
    }
}

void CliConfig::resolve() {
    const int n = get_int("grid.n");
    if (n < 1) bad_value("grid.n", get("grid.n"), "a positive count");
    if (get("grid.dlambda") == "auto")
        values_["grid.dlambda"] = format_double(2.0 * std::numbers::pi / n);
    if (get("grid.dtheta") == "auto")
        values_["grid.dtheta"] = format_double(std::numbers::pi / (2 * n));
    if (get("grid.theta0") == "auto")
        values_["grid.theta0"] = format_double(-0.5 * (n - 1) * get_double("grid.dtheta"));
    if (get("twin.hill_lon") == "auto") values_["twin.hill_lon"] = std::to_string(n / 3);
    if (get("twin.hill_lat") == "auto") values_["twin.hill_lat"] = std::to_string(n / 2);
}

const std::string& CliConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("config: unknown key '" + key + "'");
    return it->second;
}

int CliConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "an integer");
    return out;
}

std::uint64_t CliConfig::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size())
        bad_value(key, v, "a nonnegative integer");
    return out;
}

double CliConfig::get_double(const std::string& key) const {
    const std::string& v = get(key);
    double out = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) bad_value(key, v, "a number");
    return out;
}

bool CliConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    bad_value(key, v, "true or false");
}

std::vector<double> CliConfig::get_list(const std::string& key) const {
    const std::string& v = get(key);
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= v.size()) {
        size_t comma = v.find(',', pos);
        std::string item = trim(v.substr(pos, comma - pos));
        double x = 0.0;
        auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
        if (item.empty() || ec != std::errc{} || p != item.data() + item.size())
            bad_value(key, v, "a comma-separated number list");
        out.push_back(x);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<int> CliConfig::get_int_list(const std::string& key) const {
    std::vector<int> out;
    for (double x : get_list(key)) {
        if (x != std::floor(x)) bad_value(key, get(key), "a comma-separated integer list");
        out.push_back(static_cast<int>(x));
    }
    return out;
}

SpaceTimeGrid CliConfig::grid() const {
    SpaceTimeGrid g;
    g.nlon = get_int("grid.n");
    g.nlat = get_int("grid.n");
    g.M = get_int("grid.M");
    g.dt = get_double("grid.dt");
    g.dlambda = get_double("grid.dlambda");
    g.dtheta = get_double("grid.dtheta");
    g.theta0 = get_double("grid.theta0");
    g.validate();
    return g;
}

SweParams CliConfig::params(const SpaceTimeGrid& g) const {
    SweParams p;
    p.a = get_double("model.a");
    p.g = get_double("model.g");
    p.omega_rot = get_double("model.omega_rot");
    p.alpha_tz = get_double("model.alpha_tz");
    p.p_tz = get_int("model.p_tz");
    p.q_tz = get_int("model.q_tz");
    p.cfl_limit = get_double("model.cfl_limit");
    p.strict_paper_stencils = get_bool("model.strict_paper_stencils");
    p.finalize_sigmas(g);
    p.validate(g);
    return p;
}

CovarianceFactor CliConfig::background_covariance(const SpaceTimeGrid& g) const {
    const std::string& kind = get("assim.b_kind");
    if (kind == "diagonal") return make_diagonal_b(get_double("assim.sigma_b"), g);
    if (kind == "gaussian")
        return make_gaussian_b(get_double("assim.sigma_b"), get_double("assim.length_scale"),
                               g);
    bad_value("assim.b_kind", kind, "diagonal or gaussian");
}

ObsLayout CliConfig::obs_layout() const {
    ObsLayout layout;
    const std::string& kind = get("obs.layout");
    if (kind == "random")
        layout.kind = ObsLayout::Kind::random;
    else if (kind == "strided")
        layout.kind = ObsLayout::Kind::strided;
    else
        bad_value("obs.layout", kind, "strided or random");
    layout.coverage = get_double("obs.coverage");
    layout.stride_t = get_int("obs.stride_t");
    layout.stride_x = get_int("obs.stride_x");
    layout.stride_y = get_int("obs.stride_y");
    layout.include_clamped_rows = get_bool("obs.include_clamped_rows");
    if (layout.coverage <= 0.0 || layout.coverage > 1.0)
        bad_value("obs.coverage", get("obs.coverage"), "a fraction in (0, 1]");
    if (layout.stride_t < 1 || layout.stride_x < 1 || layout.stride_y < 1)
        throw ConfigError("config: obs strides must be positive");
    return layout;
}

GnConfig CliConfig::gn() const {
    GnConfig c;
    c.max_outer = get_int("solver.max_outer");
    c.outer_tol = get_double("solver.outer_tol");
    c.max_inner = get_int("solver.max_inner");
    c.inner_tol = get_double("solver.inner_tol");
    c.damping = get_double("solver.damping");
    c.validate();
    return c;
}

DdRunConfig CliConfig::dd_base() const {
    DdRunConfig cfg;
    cfg.grid = grid();
    cfg.params = params(cfg.grid);
    cfg.q = get_int("dd.q");
    cfg.p1 = get_int("dd.p1");
    cfg.p2 = get_int("dd.p2");
    cfg.o_x = get_int("dd.o_x");
    cfg.o_y = get_int("dd.o_y");
    cfg.o_t = get_int("dd.o_t");
    cfg.b = background_covariance(cfg.grid);
    cfg.lambda = get_double("assim.lambda");
    cfg.mu = get_double("assim.mu");
    cfg.sigma_r = get_double("assim.sigma_r");
    cfg.gn = gn();
    cfg.eps = get_double("solver.eps");
    cfg.max_rounds = get_int("solver.max_rounds");
    const std::string& ex = get("solver.exchange_every");
    if (ex == "round")
        cfg.exchange = DdRunConfig::Exchange::outer_round;
    else if (ex == "iteration")
        cfg.exchange = DdRunConfig::Exchange::every_gn_iteration;
    else
        bad_value("solver.exchange_every", ex, "round or iteration");
    cfg.workers = get_int("runtime.workers");
    return cfg;
}

CheckSuiteConfig CliConfig::check_suite() const {
    CheckSuiteConfig cfg;
    cfg.grid = grid();
    cfg.params = params(cfg.grid);
    cfg.seed = get_u64("assim.seed");
    cfg.adjoint_pairs = get_int("validate.adjoint_pairs");
    cfg.adjoint_tol = get_double("validate.adjoint_tol");
    cfg.taylor_min_order = get_double("validate.taylor_min_order");
    cfg.oracle_tol = get_double("validate.oracle_tol");
    const std::string& fault = get("validate.inject_fault");
    if (fault == "none")
        cfg.fault = FaultInjection::none;
    else if (fault == "adjoint_sign_flip")
        cfg.fault = FaultInjection::adjoint_sign_flip;
    else
        bad_value("validate.inject_fault", fault, "none or adjoint_sign_flip");
    return cfg;
}

void CliConfig::validate_all() const {
    SpaceTimeGrid g = grid();
    SweParams p = params(g);
    (void)p;
    build_decomposition(g, get_int("dd.q"), get_int("dd.p1"), get_int("dd.p2"),
                        get_int("dd.o_x"), get_int("dd.o_y"), get_int("dd.o_t"));
    gn().validate();
    background_covariance(g).validate();
    (void)obs_layout();
    (void)get_u64("assim.seed");
    if (get_int("runtime.workers") < 1)
        throw ConfigError("config: runtime.workers must be at least 1");
    if (get_double("solver.eps") <= 0.0)
        throw ConfigError("config: solver.eps must be positive");
    if (get_int("solver.max_rounds") < 1)
        throw ConfigError("config: solver.max_rounds must be at least 1");
    if (get_double("assim.sigma_r") <= 0.0)
        throw ConfigError("config: assim.sigma_r must be positive");
    if (get_double("assim.lambda") < 0.0 || get_double("assim.mu") < 0.0)
        throw ConfigError("config: assim.lambda and assim.mu must be nonnegative");
    if (get_double("assim.sigma_o") < 0.0)
        throw ConfigError("config: assim.sigma_o must be nonnegative");
}

std::vector<std::pair<std::string, std::string>> CliConfig::echo() const {
    std::vector<std::pair<std::string, std::string>> out;
    out.reserve(values_.size());
    for (const KeySpec& spec : config_registry()) out.emplace_back(spec.key, get(spec.key));
    return out;
}

}  // namespace ddvar::cli
