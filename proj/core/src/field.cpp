#include "ddvar/field.hpp"

#include <cmath>

#include "ddvar/errors.hpp"

namespace ddvar {

void axpy(SweState& self, double a, const SweState& x) {
    for (int k = 0; k < 3; ++k) {
        auto& dst = self.var(k).v;
        const auto& src = x.var(k).v;
        for (size_t n = 0; n < dst.size(); ++n) dst[n] += a * src[n];
    }
}

void scale(SweState& s, double a) {
    for (int k = 0; k < 3; ++k)
        for (double& x : s.var(k).v) x *= a;
}

void fill(SweState& s, double value) {
    for (int k = 0; k < 3; ++k)
        for (double& x : s.var(k).v) x = value;
}

double dot(const SweState& a, const SweState& b) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto& x = a.var(k).v;
        const auto& y = b.var(k).v;
        for (size_t n = 0; n < x.size(); ++n) acc += x[n] * y[n];
    }
    return acc;
}

double linf_norm(const SweState& s) {
    double m = 0.0;
    for (int k = 0; k < 3; ++k)
        for (double x : s.var(k).v) m = std::max(m, std::abs(x));
    return m;
}

double linf_diff(const SweState& a, const SweState& b) {
    double m = 0.0;
    for (int k = 0; k < 3; ++k) {
        const auto& x = a.var(k).v;
        const auto& y = b.var(k).v;
        for (size_t n = 0; n < x.size(); ++n) m = std::max(m, std::abs(x[n] - y[n]));
    }
    return m;
}

double rms_diff(const SweState& a, const SweState& b) {
    double acc = 0.0;
    size_t count = 0;
    for (int k = 0; k < 3; ++k) {
        const auto& x = a.var(k).v;
        const auto& y = b.var(k).v;
        for (size_t n = 0; n < x.size(); ++n) {
            double d = x[n] - y[n];
            acc += d * d;
        }
        count += x.size();
    }
    return count == 0 ? 0.0 : std::sqrt(acc / count);
}

bool all_finite(const SweState& s) {
    for (int k = 0; k < 3; ++k)
        for (double x : s.var(k).v)
            if (!std::isfinite(x)) return false;
    return true;
}

SpaceTimeField to_field(const std::vector<SweState>& states) {
    if (states.empty()) return {};
    SpaceTimeField f(static_cast<int>(states.size()), states[0].nx(), states[0].ny());
    for (size_t t = 0; t < states.size(); ++t) {
        if (!states[t].same_shape(states[0]))
            throw DimensionError("to_field: time levels have mismatched shapes");
        for (int k = 0; k < 3; ++k) {
            const auto& src = states[t].var(k).v;
            size_t base = f.index(static_cast<int>(t), k, 0, 0);
            for (size_t n = 0; n < src.size(); ++n) f.v[base + n] = src[n];
        }
    }
    return f;
}

std::vector<SweState> to_states(const SpaceTimeField& f) {
    std::vector<SweState> states(f.nt, SweState(f.nx, f.ny));
    for (int t = 0; t < f.nt; ++t)
        for (int k = 0; k < 3; ++k) {
            auto& dst = states[t].var(k).v;
            size_t base = f.index(t, k, 0, 0);
            for (size_t n = 0; n < dst.size(); ++n) dst[n] = f.v[base + n];
        }
    return states;
}

}  // namespace ddvar
