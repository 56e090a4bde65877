#pragma once

#include "ddvar/field.hpp"
#include "ddvar/grid.hpp"

namespace ddvar {

// Factored background covariance B = V V^T over one spatial state.
//
// diagonal: V = sigma_b * I, so B = sigma_b^2 * I exactly.
// gaussian: V = sigma_b * S with S a symmetric positive definite smoother,
//           a separable truncated-Gaussian convolution (periodic in
//           longitude, zero-padded in latitude) blended with 5% identity to
//           keep it invertible. Correlations attenuate near the latitude
//           boundary instead of renormalizing; renormalization would break
//           the symmetry of S and with it the factored form of B.
//
// Both kinds are symmetric, so V^T = V and B = V^2.
struct CovarianceFactor {
    enum class Kind { diagonal, gaussian };

    Kind kind = Kind::diagonal;
    double sigma_b = 1.0;
    double length_scale = 2.0;  // e-folding distance in grid points (gaussian)
    int nlon = 0;
    int nlat = 0;

    // Throws ConfigError on a singular factor (sigma_b <= 0) or bad shapes.
    void validate() const;

    SweState v_apply(const SweState& w) const;
    SweState v_transpose_apply(const SweState& x) const;

    // w solving V w = x. Diagonal is exact; gaussian solves the SPD system by
    // conjugate gradients to near round-off, with a fixed operation order so
    // results are reproducible.
    SweState v_inverse_apply(const SweState& x) const;

    // y solving B y = x, via two V solves since B = V^2.
    SweState b_inverse_apply(const SweState& x) const;

    // <x, B^{-1} x>, computed as |V^{-1} x|^2 so it is nonnegative by
    // construction.
    double weighted_sq_norm(const SweState& x) const;
};

CovarianceFactor make_diagonal_b(double sigma_b, const SpaceTimeGrid& grid);
CovarianceFactor make_gaussian_b(double sigma_b, double length_scale, const SpaceTimeGrid& grid);

}  // namespace ddvar
