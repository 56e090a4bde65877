#include <algorithm>
#include <cmath>

#include "ddvar/errors.hpp"
#include "ddvar/swe.hpp"

namespace ddvar {

namespace {

inline int wrap(int i, int n) {
    int r = i % n;
    return r < 0 ? r + n : r;
}

inline int clampj(int j, int n) { return std::clamp(j, 0, n - 1); }

// Enumerates every entry of the tendency Jacobian at the base state:
// op(out_var, out_i, out_j, in_var, in_i, in_j, coefficient). The tangent
// linear gathers over these entries and the adjoint scatters over the very
// same ones, which makes the pair an exact transpose by construction.
// Clamped latitude rows emit several entries for one input point; they
// accumulate identically on both sides.
template <class Op>
void foreach_jacobian_entry(const SweState& z, const SweParams& P, const SpaceTimeGrid& G,
                            Op&& op) {
    const int nlon = G.nlon, nlat = G.nlat;
    const int p = P.p_tz, q = P.q_tz;
    const double alpha = P.alpha_tz;
    const double sigL = P.sigma_lon, sigT = P.sigma_lat;
    const bool strict = P.strict_paper_stencils;
    const double cfac = strict ? 2.0 : 1.0;
    const Field2& u = z.u;
    const Field2& v = z.v;
    const Field2& h = z.h;

    for (int j = 0; j < nlat; ++j) {
        const double theta = G.theta(j);
        const double cosj = std::cos(theta);
        const double tanj = std::tan(theta);
        const double fj = coriolis(P.omega_rot, theta);
        const int j1 = clampj(j + 1, nlat), j_1 = clampj(j - 1, nlat);
        const int jq = clampj(j + q, nlat), j_q = clampj(j - q, nlat);
        const double cos_jq = G.cos_theta(jq), cos_j_q = G.cos_theta(j_q);
        const double theta_jq = G.theta(jq), theta_j_q = G.theta(j_q);
        for (int i = 0; i < nlon; ++i) {
            const int i1 = wrap(i + 1, nlon), i_1 = wrap(i - 1, nlon);
            const int ip = wrap(i + p, nlon), im = wrap(i - p, nlon);

            // --- zonal momentum ---
            // -sigL*(u/cos)*(u_E - u_W)
            op(0, i, j, 0, i, j, -(sigL / cosj) * (u.at(i1, j) - u.at(i_1, j)));
            op(0, i, j, 0, i1, j, -(sigL / cosj) * u.at(i, j));
            op(0, i, j, 0, i_1, j, (sigL / cosj) * u.at(i, j));
            // -sigT*v*(u_N - u_S)
            op(0, i, j, 1, i, j, -sigT * (u.at(i, j1) - u.at(i, j_1)));
            op(0, i, j, 0, i, j1, -sigT * v.at(i, j));
            op(0, i, j, 0, i, j_1, sigT * v.at(i, j));
            // -sigL*g/(p*cos)*(h_{+p} - h_{-p})
            op(0, i, j, 2, ip, j, -sigL * P.g / (p * cosj));
            op(0, i, j, 2, im, j, sigL * P.g / (p * cosj));
            // +cfac*[averaged (f + u*tan/a)*v over i, i+p, i-p]
            {
                const int cols[3] = {i, ip, im};
                const double w[3] = {1.0 - alpha, 0.5 * alpha, 0.5 * alpha};
                for (int t = 0; t < 3; ++t) {
                    op(0, i, j, 0, cols[t], j, cfac * w[t] * (tanj / P.a) * v.at(cols[t], j));
                    op(0, i, j, 1, cols[t], j,
                       cfac * w[t] * (fj + u.at(cols[t], j) * tanj / P.a));
                }
            }

            // --- meridional momentum ---
            // -sigL*(u/cos)*(v_E - v_W)
            op(1, i, j, 0, i, j, -(sigL / cosj) * (v.at(i1, j) - v.at(i_1, j)));
            op(1, i, j, 1, i1, j, -(sigL / cosj) * u.at(i, j));
            op(1, i, j, 1, i_1, j, (sigL / cosj) * u.at(i, j));
            if (strict) {
                // literal form advects u, not v, in the meridional direction
                op(1, i, j, 1, i, j, -sigT * (u.at(i, j1) - u.at(i, j_1)));
                op(1, i, j, 0, i, j1, -sigT * v.at(i, j));
                op(1, i, j, 0, i, j_1, sigT * v.at(i, j));
            } else {
                op(1, i, j, 1, i, j, -sigT * (v.at(i, j1) - v.at(i, j_1)));
                op(1, i, j, 1, i, j1, -sigT * v.at(i, j));
                op(1, i, j, 1, i, j_1, sigT * v.at(i, j));
            }
            // -sigT*g/q*(h_{+q} - h_{-q})
            op(1, i, j, 2, i, jq, -sigT * P.g / q);
            op(1, i, j, 2, i, j_q, sigT * P.g / q);
            // -cfac*[averaged (f + u*tan/a)*u over j, j+q, j-q];
            // d/du[(f + u*tan/a)*u] = f + 2*u*tan/a
            {
                const int rows[3] = {j, jq, j_q};
                const double ths[3] = {theta, theta_jq, theta_j_q};
                const double w[3] = {1.0 - alpha, 0.5 * alpha, 0.5 * alpha};
                for (int t = 0; t < 3; ++t) {
                    const double tn = std::tan(ths[t]);
                    op(1, i, j, 0, i, rows[t],
                       -cfac * w[t] *
                           (coriolis(P.omega_rot, ths[t]) + 2.0 * u.at(i, rows[t]) * tn / P.a));
                }
            }

            // --- height ---
            const double wu = (1.0 - alpha) * (u.at(ip, j) - u.at(im, j)) +
                              0.5 * alpha * (u.at(ip, jq) - u.at(im, jq)) +
                              0.5 * alpha * (u.at(ip, j_q) - u.at(im, j_q));
            const double wv =
                (1.0 - alpha) * (v.at(i, jq) * cos_jq - v.at(i, j_q) * cos_j_q) +
                0.5 * alpha * (v.at(ip, jq) * cos_jq - v.at(ip, j_q) * cos_j_q) +
                0.5 * alpha * (v.at(im, jq) * cos_jq - v.at(im, j_q) * cos_j_q);
            // Advection coefficients: cA for the zonal, cB for the meridional
            // piece; divergence factors cU (zonal) and cV (meridional).
            const double cA = strict ? alpha / cosj : sigL / cosj;
            const double cB = strict ? alpha : sigT;
            const double cU = strict ? alpha / (p * cosj) : sigL / (p * cosj);
            const double cV = strict ? alpha / q : sigT / (q * cosj);

            op(2, i, j, 0, i, j, -cA * (h.at(i1, j) - h.at(i_1, j)));
            op(2, i, j, 2, i1, j, -cA * u.at(i, j));
            op(2, i, j, 2, i_1, j, cA * u.at(i, j));
            op(2, i, j, 1, i, j, -cB * (h.at(i, j1) - h.at(i, j_1)));
            op(2, i, j, 2, i, j1, -cB * v.at(i, j));
            op(2, i, j, 2, i, j_1, cB * v.at(i, j));
            op(2, i, j, 2, i, j, -cU * wu);
            {
                const int rows[3] = {j, jq, j_q};
                const double w[3] = {1.0 - alpha, 0.5 * alpha, 0.5 * alpha};
                for (int t = 0; t < 3; ++t) {
                    op(2, i, j, 0, ip, rows[t], -cU * h.at(i, j) * w[t]);
                    op(2, i, j, 0, im, rows[t], cU * h.at(i, j) * w[t]);
                }
            }
            // The literal height equation has no h factor on the meridional
            // divergence, so its h-derivative entry vanishes there.
            if (!strict) op(2, i, j, 2, i, j, -cV * wv);
            {
                const double hfac = strict ? 1.0 : h.at(i, j);
                const int cols[3] = {i, ip, im};
                const double w[3] = {1.0 - alpha, 0.5 * alpha, 0.5 * alpha};
                for (int t = 0; t < 3; ++t) {
                    op(2, i, j, 1, cols[t], jq, -cV * hfac * w[t] * cos_jq);
                    op(2, i, j, 1, cols[t], j_q, cV * hfac * w[t] * cos_j_q);
                }
            }
        }
    }
}

void check_pair(const SweState& a, const SweState& b, const SpaceTimeGrid& G, const char* who) {
    if (a.nx() != G.nlon || a.ny() != G.nlat || !a.same_shape(b))
        throw DimensionError(std::string(who) + ": state shapes do not match the grid");
}

}  // namespace

SweState tendency_tlm(const SweState& base, const SweState& dz, const SweParams& P,
                      const SpaceTimeGrid& G) {
    check_pair(base, dz, G, "tendency_tlm");
    SweState out(G.nlon, G.nlat);
    foreach_jacobian_entry(base, P, G,
                           [&](int ov, int oi, int oj, int iv, int ii, int ij, double c) {
                               out.var(ov).at(oi, oj) += c * dz.var(iv).at(ii, ij);
                           });
    return out;
}

SweState tendency_adj(const SweState& base, const SweState& az, const SweParams& P,
                      const SpaceTimeGrid& G) {
    check_pair(base, az, G, "tendency_adj");
    SweState out(G.nlon, G.nlat);
    foreach_jacobian_entry(base, P, G,
                           [&](int ov, int oi, int oj, int iv, int ii, int ij, double c) {
                               out.var(iv).at(ii, ij) += c * az.var(ov).at(oi, oj);
                           });
    return out;
}

SweState step_tlm(const SweState& base, const SweState& dz, const SweParams& P,
                  const SpaceTimeGrid& G, double dt) {
    check_pair(base, dz, G, "step_tlm");
    // Recompute the RK4 stage states about the base.
    SweState k1 = tendency(base, P, G);
    SweState z2 = base;
    axpy(z2, dt / 2.0, k1);
    SweState k2 = tendency(z2, P, G);
    SweState z3 = base;
    axpy(z3, dt / 2.0, k2);
    SweState k3 = tendency(z3, P, G);
    SweState z4 = base;
    axpy(z4, dt, k3);

    SweState dk1 = tendency_tlm(base, dz, P, G);
    SweState dz2 = dz;
    axpy(dz2, dt / 2.0, dk1);
    SweState dk2 = tendency_tlm(z2, dz2, P, G);
    SweState dz3 = dz;
    axpy(dz3, dt / 2.0, dk2);
    SweState dk3 = tendency_tlm(z3, dz3, P, G);
    SweState dz4 = dz;
    axpy(dz4, dt, dk3);
    SweState dk4 = tendency_tlm(z4, dz4, P, G);

    SweState out = dz;
    axpy(out, dt / 6.0, dk1);
    axpy(out, dt / 3.0, dk2);
    axpy(out, dt / 3.0, dk3);
    axpy(out, dt / 6.0, dk4);
    return out;
}

SweState step_adj(const SweState& base, const SweState& ay, const SweParams& P,
                  const SpaceTimeGrid& G, double dt) {
    check_pair(base, ay, G, "step_adj");
    SweState k1 = tendency(base, P, G);
    SweState z2 = base;
    axpy(z2, dt / 2.0, k1);
    SweState k2 = tendency(z2, P, G);
    SweState z3 = base;
    axpy(z3, dt / 2.0, k2);
    SweState k3 = tendency(z3, P, G);
    SweState z4 = base;
    axpy(z4, dt, k3);

    // Reverse sweep of the stage recurrence. adk_s collects the sensitivity
    // of the output to stage slope s; adz accumulates the direct paths.
    SweState adz = ay;
    SweState adk1(G.nlon, G.nlat), adk2(G.nlon, G.nlat), adk3(G.nlon, G.nlat),
        adk4(G.nlon, G.nlat);
    axpy(adk1, dt / 6.0, ay);
    axpy(adk2, dt / 3.0, ay);
    axpy(adk3, dt / 3.0, ay);
    axpy(adk4, dt / 6.0, ay);

    SweState adz4 = tendency_adj(z4, adk4, P, G);
    axpy(adz, 1.0, adz4);
    axpy(adk3, dt, adz4);

    SweState adz3 = tendency_adj(z3, adk3, P, G);
    axpy(adz, 1.0, adz3);
    axpy(adk2, dt / 2.0, adz3);

    SweState adz2 = tendency_adj(z2, adk2, P, G);
    axpy(adz, 1.0, adz2);
    axpy(adk1, dt / 2.0, adz2);

    SweState adz1 = tendency_adj(base, adk1, P, G);
    axpy(adz, 1.0, adz1);
    return adz;
}

namespace {

void check_levels(const Trajectory& traj, int k_from, int k_to) {
    if (k_from < 0 || k_to >= traj.levels() || k_from > k_to)
        throw DimensionError("trajectory level range [" + std::to_string(k_from) + ", " +
                             std::to_string(k_to) + "] out of range for " +
                             std::to_string(traj.levels()) + " levels");
}

}  // namespace

SweState tlm_apply(const Trajectory& traj, int k_from, int k_to, const SweState& dz) {
    check_levels(traj, k_from, k_to);
    SweState d = dz;
    for (int k = k_from; k < k_to; ++k)
        d = step_tlm(traj.states[k], d, traj.params, traj.grid, traj.dt);
    return d;
}

SweState adj_apply(const Trajectory& traj, int k_from, int k_to, const SweState& dy) {
    check_levels(traj, k_from, k_to);
    SweState a = dy;
    for (int k = k_to - 1; k >= k_from; --k)
        a = step_adj(traj.states[k], a, traj.params, traj.grid, traj.dt);
    return a;
}

}  // namespace ddvar
