#pragma once

#include <cstddef>
#include <vector>

#include "ddvar/grid.hpp"

namespace ddvar {

// One scalar field on an nx x ny index box. Storage is latitude-major:
// element (i, j) lives at j*nx + i. Longitude wrapping is the caller's
// responsibility; at() takes in-range indices only.
struct Field2 {
    int nx = 0;
    int ny = 0;
    std::vector<double> v;

    Field2() = default;
    Field2(int nx_, int ny_) : nx(nx_), ny(ny_), v(static_cast<size_t>(nx_) * ny_, 0.0) {}

    double& at(int i, int j) { return v[static_cast<size_t>(j) * nx + i]; }
    double at(int i, int j) const { return v[static_cast<size_t>(j) * nx + i]; }
    size_t size() const { return v.size(); }
};

// The prognostic state Z = (u, v, h) on one time level.
struct SweState {
    Field2 u;  // zonal velocity (m/s)
    Field2 v;  // meridional velocity (m/s)
    Field2 h;  // height of the free surface (m)

    SweState() = default;
    SweState(int nx, int ny) : u(nx, ny), v(nx, ny), h(nx, ny) {}

    int nx() const { return u.nx; }
    int ny() const { return u.ny; }

    Field2& var(int k) { return k == 0 ? u : (k == 1 ? v : h); }
    const Field2& var(int k) const { return k == 0 ? u : (k == 1 ? v : h); }

    bool same_shape(const SweState& o) const { return u.nx == o.u.nx && u.ny == o.u.ny; }
};

// this += a * x, elementwise over all three variables.
void axpy(SweState& self, double a, const SweState& x);
// this = a * this
void scale(SweState& s, double a);
void fill(SweState& s, double value);
double dot(const SweState& a, const SweState& b);
double linf_norm(const SweState& s);
double linf_diff(const SweState& a, const SweState& b);
// Root-mean-square of (a - b) over all variables and points.
double rms_diff(const SweState& a, const SweState& b);
bool all_finite(const SweState& s);

// Space-time scalar stack over the three variables: value (t, var, i, j).
// Used by the restriction/extension operators, which act on whole space-time
// fields rather than single-level states.
struct SpaceTimeField {
    int nt = 0;
    int nx = 0;
    int ny = 0;
    std::vector<double> v;

    SpaceTimeField() = default;
    SpaceTimeField(int nt_, int nx_, int ny_)
        : nt(nt_), nx(nx_), ny(ny_),
          v(static_cast<size_t>(nt_) * SpaceTimeGrid::nvars * nx_ * ny_, 0.0) {}

    size_t index(int t, int var, int i, int j) const {
        return ((static_cast<size_t>(t) * SpaceTimeGrid::nvars + var) * ny + j) * nx + i;
    }
    double& at(int t, int var, int i, int j) { return v[index(t, var, i, j)]; }
    double at(int t, int var, int i, int j) const { return v[index(t, var, i, j)]; }
};

SpaceTimeField to_field(const std::vector<SweState>& states);
std::vector<SweState> to_states(const SpaceTimeField& f);

}  // namespace ddvar
