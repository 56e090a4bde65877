#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ddvar/grid.hpp"
#include "ddvar/swe.hpp"

namespace ddvar {

// Deliberate corruption hooks for proving the suite catches broken operators.
// The flip is applied to the adjoint's output inside the dot-product check
// only; nothing outside the suite is affected.
enum class FaultInjection { none, adjoint_sign_flip };

// One check outcome. `passed` compares the worst measured figure of merit
// against the bound in the direction given: "<=" for error bounds, ">=" for
// the Taylor order.
struct CheckResult {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double bound = 0.0;
    std::string comparison;
};

struct CheckSuiteConfig {
    SpaceTimeGrid grid;  // sizes and spatial geometry for the generic checks
    SweParams params;
    std::uint64_t seed = 1;
    int adjoint_pairs = 100;
    double adjoint_tol = 1e-12;    // relative to |dx|_2 |dy|_2
    double taylor_min_order = 1.9;
    double oracle_tol = 1e-8;      // dense normal-equations agreement
    FaultInjection fault = FaultInjection::none;
};

// The four operator checks behind the validate command.
//
//   adjoint_dot_product   <dy, L dx> == <L* dy, dx> over random pairs on the
//                         configured grid, with a rest-depth base chosen so
//                         the configured dt is CFL-safe.
//   tlm_taylor_order      centered finite differences of the window map
//                         against the tangent-linear prediction, slope fitted
//                         over eps in {1e-2..1e-5}. Runs on a tuned probe
//                         window (same sizes, band latitudes, CFL-derived dt,
//                         shallow rest depth): the flow must be nonlinear
//                         enough that the quadratic remainder stays above the
//                         finite-difference roundoff floor across the range.
//   partition_of_unity    reconstruct(restrict-all(f)) == f element-wise over
//                         random space-time fields and every halo shape the
//                         configured sizes admit, periodic seams included.
//   normal_equations_oracle  matrix-free preconditioned increment against a
//                         dense direct solve of the same normal equations on
//                         a fixed 4x4, three-level window.
std::vector<CheckResult> run_validation_suite(const CheckSuiteConfig& cfg);

bool all_checks_passed(const std::vector<CheckResult>& checks);
std::string checks_csv(const std::vector<CheckResult>& checks);

}  // namespace ddvar
