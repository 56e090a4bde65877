#include "ddvar/perfmodel.hpp"

#include <cmath>
#include <cstddef>

#include "ddvar/errors.hpp"
#include "ddvar/io.hpp"

namespace ddvar {

double ComplexityPoly::eval(double n) const {
    double v = 0.0;
    for (size_t i = a.size(); i-- > 0;) v = v * n + a[i];
    return v;
}

void ComplexityPoly::validate() const {
    if (a.size() < 2)
        throw ConfigError("complexity polynomial: degree must be at least 1");
    if (a.back() == 0.0)
        throw ConfigError("complexity polynomial: leading coefficient must be nonzero");
}

double surface_to_volume(double d_t, double d_s) {
    if (d_t < 1.0 || d_s < 1.0)
        throw ConfigError("surface_to_volume: subdomain extents must be at least 1");
    return 2.0 * (1.0 / d_t + 1.0 / d_s);
}

double scaleup_alpha(double n_loc, double qp, const ComplexityPoly& poly) {
    poly.validate();
    if (n_loc < 1.0 || qp < 1.0)
        throw ConfigError("scaleup_alpha: n_loc and qp must be at least 1");
    const int d = poly.degree();
    const double n = qp * n_loc;
    // Low-order coefficients are damped by the global size in the numerator
    // and amplified by qp/n_loc in the denominator; a pure monomial leaves
    // exactly a_d / a_d = 1.
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i <= d; ++i) {
        num += poly.a[i] / std::pow(n, d - i);
        den += poly.a[i] * std::pow(qp / n_loc, d - i);
    }
    if (den <= 0.0)
        throw ConfigError("scaleup_alpha: cost polynomial is not positive at these sizes");
    return num / den;
}

double theoretical_scaleup(double rho_g, double rho_dd, double n_loc,
                           double qp, const ComplexityPoly& poly) {
    if (rho_g <= 0.0 || rho_dd <= 0.0)
        throw ConfigError("theoretical_scaleup: iteration products must be positive");
    return rho_g / rho_dd * scaleup_alpha(n_loc, qp, poly) *
           std::pow(qp, poly.degree() - 1);
}

double measured_scaleup(double t_global, double t_flop_local,
                        double t_oh_local, double qp) {
    if (t_global <= 0.0 || t_flop_local <= 0.0 || t_oh_local < 0.0 || qp < 1.0)
        throw ConfigError("measured_scaleup: times must be positive and qp at least 1");
    return t_global / (qp * (t_flop_local + t_oh_local));
}

double measured_scaleup_literal(double t_flop_local, double t_oh_local,
                                double qp) {
    if (t_flop_local <= 0.0 || t_oh_local < 0.0 || qp < 1.0)
        throw ConfigError("measured_scaleup: times must be positive and qp at least 1");
    return t_flop_local / (qp * (t_flop_local + t_oh_local));
}

SpeedupFactor alpha_measured(double s_loc, double sv_ratio) {
    if (s_loc < 1.0)
        throw ConfigError("alpha_measured: local speedup must be at least 1");
    const double den = 1.0 + s_loc * sv_ratio;
    if (den <= 0.0)
        throw ConfigError("alpha_measured: 1 + s_loc*sv_ratio must be positive");
    SpeedupFactor f;
    f.value = s_loc / den;
    f.in_model = sv_ratio >= 0.0 && sv_ratio < 1.0 - 1.0 / s_loc;
    return f;
}

const std::array<ReferenceMemoryRow, 8> reference_memory_rows{{
    {32.0, 177.0},
    {40.0, 286.0},
    {48.0, 485.0},
    {56.0, 812.0},
    {64.0, 1313.0},
    {72.0, 2041.0},
    {80.0, 3057.0},
    {88.0, 4427.0},
}};

const std::array<ReferenceSpeedupRow, 8> reference_speedup_rows{{
    {32.0, 15.3},
    {40.0, 17.5},
    {48.0, 18.08},
    {56.0, 19.0},
    {64.0, 19.8},
    {72.0, 20.2},
    {80.0, 22.5},
    {88.0, 20.54},
}};

const std::array<ReferenceScaleupRow, 6> reference_scaleup_rows{{
    {2.0, 6.1e3, 3.3},
    {4.0, 1.2e4, 15.4},
    {8.0, 2.4e4, 54.1},
    {16.0, 4.9e4, 123.0},
    {32.0, 9.8e4, 230.0},
    {64.0, 1.9e5, 320.0},
}};

MemoryModel fitted_memory_model() {
    // Ordinary least squares of megabytes against n^4 and a constant over the
    // eight reference rows. Closed-form normal equations; the 2x2 system is
    // far from singular because the n^4 values span three decades.
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double rows = static_cast<double>(reference_memory_rows.size());
    for (const auto& r : reference_memory_rows) {
        const double x = r.n_loc * r.n_loc * r.n_loc * r.n_loc;
        sx += x;
        sy += r.megabytes;
        sxx += x * x;
        sxy += x * r.megabytes;
    }
    MemoryModel m;
    m.c = (rows * sxy - sx * sy) / (rows * sxx - sx * sx);
    m.e = (sy - m.c * sx) / rows;
    return m;
}

double memory_estimate(double n_loc) {
    if (n_loc < 1.0) throw ConfigError("memory_estimate: n_loc must be at least 1");
    return fitted_memory_model().megabytes(n_loc) * 1048576.0;
}

double artifact_memory_bytes(int nlon, int nlat, int levels) {
    if (nlon < 1 || nlat < 1 || levels < 0)
        throw ConfigError("artifact_memory_bytes: grid sizes must be positive");
    // Background and current trajectories of levels+1 states each, plus the
    // solver's fixed complement of state-sized vectors (iterate, step,
    // residual stack, conjugate-gradient workspace).
    const double state = 3.0 * nlon * nlat * 8.0;
    return state * (2.0 * (levels + 1) + 12.0);
}

void ScalabilityRecord::validate() const {
    if (qp < 1.0 || n_loc < 1.0)
        throw ConfigError("scalability record: qp and n_loc must be at least 1");
    if (rho_g <= 0.0 || rho_dd <= 0.0)
        throw ConfigError("scalability record: iteration products must be positive");
    if (t_flop <= 0.0 || t_oh < 0.0)
        throw ConfigError("scalability record: times must be positive");
    if (s_loc < 1.0)
        throw ConfigError("scalability record: local speedup must be at least 1");
}

std::string memory_table_csv() {
    const MemoryModel m = fitted_memory_model();
    std::string out = csv_row({"n_loc (points per side)", "reference (MB)",
                               "model (MB)", "model error (relative)",
                               "artifact (MB)"});
    for (const auto& r : reference_memory_rows) {
        const double model = m.megabytes(r.n_loc);
        const double n = r.n_loc;
        const double artifact =
            artifact_memory_bytes(static_cast<int>(n), static_cast<int>(n),
                                  static_cast<int>(n)) /
            1048576.0;
        out += csv_row({format_double(n), format_double(r.megabytes),
                        format_double(model),
                        format_double((model - r.megabytes) / r.megabytes),
                        format_double(artifact)});
    }
    return out;
}

std::string speedup_table_csv() {
    std::string out =
        csv_row({"n_loc (points per side)", "s_loc (dimensionless)"});
    for (const auto& r : reference_speedup_rows)
        out += csv_row({format_double(r.n_loc), format_double(r.s_loc)});
    return out;
}

std::string scalability_table_csv(const std::vector<ScalabilityRecord>& rows,
                                  const ComplexityPoly& poly,
                                  bool literal_formula) {
    poly.validate();
    std::string out = csv_row({"QP (subdomains)", "N (state values)",
                               "N_loc (state values)", "rho_G (iterations)",
                               "rho_DD (iterations)", "T_flop (s)", "T_oh (s)",
                               "s_loc (dimensionless)",
                               "Sc_theoretical (dimensionless)",
                               "Sc_measured (dimensionless)"});
    for (const auto& r : rows) {
        r.validate();
        const double n = r.qp * r.n_loc;
        // The undecomposed time is extrapolated from the measured local flop
        // time through the cost polynomial.
        const double t_global = r.t_flop * poly.eval(n) / poly.eval(r.n_loc);
        const double sc_meas =
            literal_formula ? measured_scaleup_literal(r.t_flop, r.t_oh, r.qp)
                            : measured_scaleup(t_global, r.t_flop, r.t_oh, r.qp);
        const double sc_th =
            theoretical_scaleup(r.rho_g, r.rho_dd, r.n_loc, r.qp, poly);
        out += csv_row({format_double(r.qp), format_double(n),
                        format_double(r.n_loc), format_double(r.rho_g),
                        format_double(r.rho_dd), format_double(r.t_flop),
                        format_double(r.t_oh), format_double(r.s_loc),
                        format_double(sc_th), format_double(sc_meas)});
    }
    return out;
}

}  // namespace ddvar
