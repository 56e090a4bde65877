#pragma once

#include <array>
#include <string>
#include <vector>

namespace ddvar {

// Cost of one linearized-model iteration on a problem with n state values,
// C(n) = a0 + a1*n + ... + ad*n^d. The default is the pure quadratic that
// matches the tangent-linear sweep cost of this code.
struct ComplexityPoly {
    std::vector<double> a{0.0, 0.0, 1.0};

    int degree() const { return static_cast<int>(a.size()) - 1; }
    double eval(double n) const;
    void validate() const;  // degree >= 1 and leading coefficient nonzero
};

// Ratio of halo data exchanged to interior work for a subdomain of D_t time
// levels by D_s flattened space cells: 2*(1/D_t + 1/D_s). The discrete
// halo-point/core-point count of an actual decomposition matches this up to
// corner terms of one halo-width band.
double surface_to_volume(double d_t, double d_s);

// Degradation factor of the decomposed solve relative to perfect QP^(d-1)
// scaling. Rational in the low-order coefficients; exactly 1 for a monomial
// cost, and tends to 1 as n_loc grows with qp fixed.
double scaleup_alpha(double n_loc, double qp, const ComplexityPoly& poly);

// Lower bound on the scale-up of qp local solves of size n_loc against one
// global solve of size qp*n_loc: (rho_g/rho_dd) * alpha * qp^(d-1).
// rho_g and rho_dd are the outer*inner iteration products of the global and
// decomposed solvers.
double theoretical_scaleup(double rho_g, double rho_dd, double n_loc,
                           double qp, const ComplexityPoly& poly);

// Measured scale-up: undecomposed wall time over qp times the local wall
// time including overhead, Sc = t_global / (qp * (t_flop_local + t_oh_local)).
double measured_scaleup(double t_global, double t_flop_local,
                        double t_oh_local, double qp);

// Same denominator but with the local flop time in the numerator, which can
// never exceed 1/qp. Kept selectable because reports built from local times
// alone sometimes quote this form.
double measured_scaleup_literal(double t_flop_local, double t_oh_local,
                                double qp);

// Speedup-adjusted scale-up factor s_loc / (1 + s_loc * sv_ratio) for a local
// solver accelerated s_loc times with surface-to-volume ratio sv_ratio.
// in_model is false when 0 <= sv_ratio < 1 - 1/s_loc fails; the value is
// still returned so out-of-model what-if inputs stay inspectable.
struct SpeedupFactor {
    double value;
    bool in_model;
};
SpeedupFactor alpha_measured(double s_loc, double sv_ratio);

// Dense-workspace memory model mb(n) = c*n^4 + e, least-squares calibrated
// against the published per-card measurements below. The offset absorbs the
// fixed runtime footprint the pure quartic cannot represent.
struct MemoryModel {
    double c;
    double e;
    double megabytes(double n_loc) const { return c * n_loc * n_loc * n_loc * n_loc + e; }
};
MemoryModel fitted_memory_model();

// Bytes predicted by the fitted dense model for a subdomain of n_loc points
// per side. 1 MB = 2^20 bytes.
double memory_estimate(double n_loc);

// Peak footprint of this code's matrix-free solver on an nlon x nlat grid
// with `levels` propagation steps: two full trajectories plus a fixed number
// of state-sized solver vectors. Orders of magnitude below the dense model.
double artifact_memory_bytes(int nlon, int nlat, int levels);

// One row of a scalability study: qp subdomains of n_loc state values each,
// iteration products of the two solvers, measured local times in seconds and
// the local accelerator speedup.
struct ScalabilityRecord {
    double qp = 1.0;
    double n_loc = 1.0;
    double rho_g = 1.0;
    double rho_dd = 1.0;
    double t_flop = 1.0;
    double t_oh = 0.0;
    double s_loc = 1.0;

    void validate() const;
};

// Published reference measurements (5 GB accelerator card): memory per
// subdomain side length, local accelerator speedups, and a weak-scalability
// study. Used to calibrate the memory model and to format what-if reports;
// they are reference data, not reproduction targets.
struct ReferenceMemoryRow {
    double n_loc;
    double megabytes;
};
struct ReferenceSpeedupRow {
    double n_loc;
    double s_loc;
};
struct ReferenceScaleupRow {
    double qp;
    double problem_size;
    double sc_measured;
};
extern const std::array<ReferenceMemoryRow, 8> reference_memory_rows;
extern const std::array<ReferenceSpeedupRow, 8> reference_speedup_rows;
extern const std::array<ReferenceScaleupRow, 6> reference_scaleup_rows;

// CSV tables, one header row naming units, values in shortest round-trip
// form. The memory table sets the artifact column on an n x n grid with n
// time levels so both columns scale in the same single parameter.
std::string memory_table_csv();
std::string speedup_table_csv();
std::string scalability_table_csv(const std::vector<ScalabilityRecord>& rows,
                                  const ComplexityPoly& poly,
                                  bool literal_formula = false);

}  // namespace ddvar
