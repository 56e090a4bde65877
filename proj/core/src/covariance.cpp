#include "ddvar/covariance.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ddvar/errors.hpp"

namespace ddvar {

namespace {

constexpr double kIdentityBlend = 0.05;  // keeps the smoother invertible

std::vector<double> gaussian_kernel(double length_scale) {
    int radius = std::max(1, static_cast<int>(std::ceil(3.0 * length_scale)));
    std::vector<double> w(2 * radius + 1);
    double sum = 0.0;
    for (int r = -radius; r <= radius; ++r) {
        double g = std::exp(-0.5 * (r * r) / (length_scale * length_scale));
        w[r + radius] = g;
        sum += g;
    }
    for (double& x : w) x /= sum;
    return w;
}

Field2 smooth_lon(const Field2& in, const std::vector<double>& w) {
    int radius = (static_cast<int>(w.size()) - 1) / 2;
    Field2 out(in.nx, in.ny);
    for (int j = 0; j < in.ny; ++j)
        for (int i = 0; i < in.nx; ++i) {
            double acc = 0.0;
            for (int r = -radius; r <= radius; ++r) {
                int ii = ((i + r) % in.nx + in.nx) % in.nx;
                acc += w[r + radius] * in.at(ii, j);
            }
            out.at(i, j) = acc;
        }
    return out;
}

Field2 smooth_lat(const Field2& in, const std::vector<double>& w) {
    int radius = (static_cast<int>(w.size()) - 1) / 2;
    Field2 out(in.nx, in.ny);
    for (int j = 0; j < in.ny; ++j)
        for (int i = 0; i < in.nx; ++i) {
            double acc = 0.0;
            for (int r = -radius; r <= radius; ++r) {
                int jj = j + r;
                if (jj < 0 || jj >= in.ny) continue;  // zero padding keeps symmetry
                acc += w[r + radius] * in.at(i, jj);
            }
            out.at(i, j) = acc;
        }
    return out;
}

// Conjugate gradients on the state space for the small SPD solves V w = x.
template <class Op>
SweState cg_state_solve(const SweState& rhs, Op&& apply) {
    SweState x(rhs.nx(), rhs.ny());
    SweState r = rhs;
    SweState p = r;
    double rs = dot(r, r);
    if (rs == 0.0) return x;
    double stop = 1e-28 * rs;  // relative residual 1e-14
    int max_iter = 10 * rhs.nx() * rhs.ny() * 3 + 50;
    for (int it = 0; it < max_iter; ++it) {
        SweState ap = apply(p);
        double pap = dot(p, ap);
        if (pap <= 0.0)
            throw NumericalError("covariance solve: factor not positive definite at iteration " +
                                 std::to_string(it));
        double alpha = rs / pap;
        axpy(x, alpha, p);
        axpy(r, -alpha, ap);
        double rs_new = dot(r, r);
        if (rs_new <= stop) break;
        double beta = rs_new / rs;
        rs = rs_new;
        scale(p, beta);
        axpy(p, 1.0, r);
    }
    return x;
}

}  // namespace

void CovarianceFactor::validate() const {
    if (!(sigma_b > 0.0))
        throw ConfigError("background covariance factor is singular: sigma_b must be positive");
    if (kind == Kind::gaussian && !(length_scale > 0.0))
        throw ConfigError("background covariance factor: length_scale must be positive");
    if (nlon < 1 || nlat < 1)
        throw ConfigError("background covariance factor: grid shape not set");
}

SweState CovarianceFactor::v_apply(const SweState& w) const {
    if (w.nx() != nlon || w.ny() != nlat)
        throw DimensionError("covariance factor: state shape does not match the grid");
    SweState out(nlon, nlat);
    if (kind == Kind::diagonal) {
        out = w;
        scale(out, sigma_b);
        return out;
    }
    std::vector<double> kernel = gaussian_kernel(length_scale);
    for (int var = 0; var < SpaceTimeGrid::nvars; ++var) {
        Field2 s = smooth_lat(smooth_lon(w.var(var), kernel), kernel);
        Field2& o = out.var(var);
        const Field2& in = w.var(var);
        for (size_t n = 0; n < o.v.size(); ++n)
            o.v[n] = sigma_b * ((1.0 - kIdentityBlend) * s.v[n] + kIdentityBlend * in.v[n]);
    }
    return out;
}

SweState CovarianceFactor::v_transpose_apply(const SweState& x) const {
    // Both kinds are symmetric operators.
    return v_apply(x);
}

SweState CovarianceFactor::v_inverse_apply(const SweState& x) const {
    if (x.nx() != nlon || x.ny() != nlat)
        throw DimensionError("covariance factor: state shape does not match the grid");
    validate();
    if (kind == Kind::diagonal) {
        SweState out = x;
        for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
            for (double& v : out.var(var).v) v /= sigma_b;
        return out;
    }
    return cg_state_solve(x, [this](const SweState& p) { return v_apply(p); });
}

SweState CovarianceFactor::b_inverse_apply(const SweState& x) const {
    if (kind == Kind::diagonal) {
        validate();
        SweState out = x;
        for (int var = 0; var < SpaceTimeGrid::nvars; ++var)
            for (double& v : out.var(var).v) v /= sigma_b * sigma_b;
        return out;
    }
    return v_inverse_apply(v_inverse_apply(x));
}

double CovarianceFactor::weighted_sq_norm(const SweState& x) const {
    SweState r = v_inverse_apply(x);
    return dot(r, r);
}

CovarianceFactor make_diagonal_b(double sigma_b, const SpaceTimeGrid& grid) {
    CovarianceFactor b;
    b.kind = CovarianceFactor::Kind::diagonal;
    b.sigma_b = sigma_b;
    b.nlon = grid.nlon;
    b.nlat = grid.nlat;
    b.validate();
    return b;
}

CovarianceFactor make_gaussian_b(double sigma_b, double length_scale, const SpaceTimeGrid& grid) {
    CovarianceFactor b;
    b.kind = CovarianceFactor::Kind::gaussian;
    b.sigma_b = sigma_b;
    b.length_scale = length_scale;
    b.nlon = grid.nlon;
    b.nlat = grid.nlat;
    b.validate();
    return b;
}

}  // namespace ddvar
