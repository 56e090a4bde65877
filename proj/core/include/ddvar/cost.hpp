#pragma once

#include <vector>

#include "ddvar/covariance.hpp"
#include "ddvar/field.hpp"
#include "ddvar/grid.hpp"
#include "ddvar/observations.hpp"
#include "ddvar/swe.hpp"

namespace ddvar {

// Additive pieces of the variational cost. Each term is a sum of squares and
// therefore nonnegative; total = background_term + lambda*observation_term
// + mu*overlap_term. The global functional has no overlap term.
struct CostBreakdown {
    double background_term = 0.0;
    double observation_term = 0.0;
    double overlap_term = 0.0;
    double lambda = 1.0;
    double mu = 1.0;
    double total = 0.0;
};

CostBreakdown make_breakdown(double background, double observation, double overlap,
                             double lambda, double mu);

// Everything the global functional depends on: the window (grid), the model,
// the background state and its covariance factor, the observations, and the
// weights. R_k = sigma_r^2 * I; sigma_r is the error the assimilation
// assumes, decoupled from the sigma_o the observations were drawn with so
// that exact (sigma_o = 0) twin observations still leave R invertible.
struct AssimSetup {
    SpaceTimeGrid grid;
    SweParams params;
    SweState background;
    CovarianceFactor b;
    ObservationSet obs;
    double lambda = 1.0;
    double mu = 1.0;
    double sigma_r = 1e-2;

    void validate() const;
};

// sigma_o when positive, else a 1e-2 floor.
double default_sigma_r(double sigma_o);

// J evaluated on an arbitrary level sequence Phi (not necessarily a model
// orbit): |Phi_0 - background|^2 in the B^{-1} norm plus lambda times the
// sum of squared misfits over observed levels in units of sigma_r^2.
CostBreakdown trajectory_cost(const std::vector<SweState>& levels, const AssimSetup& setup);

// J(u0) = trajectory_cost of the model orbit started at u0.
CostBreakdown global_cost(const SweState& u0, const AssimSetup& setup);

// Exact gradient of global_cost: 2 B^{-1}(u0 - background) minus 2*lambda
// times the adjoint-accumulated observation pullback. One forward propagation
// and one backward sweep.
SweState cost_gradient(const SweState& u0, const AssimSetup& setup);

}  // namespace ddvar
