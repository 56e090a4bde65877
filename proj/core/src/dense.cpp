#include "ddvar/dense.hpp"

#include <cmath>
#include <string>

#include "ddvar/errors.hpp"

namespace ddvar {

std::vector<double> dense_solve(DenseMatrix a, std::vector<double> b) {
    if (a.rows != a.cols || static_cast<size_t>(a.rows) != b.size())
        throw DimensionError("dense_solve: system must be square and match rhs");
    const int n = a.rows;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::fabs(a.at(k, k));
        for (int r = k + 1; r < n; ++r) {
            double v = std::fabs(a.at(r, k));
            if (v > best) {
                best = v;
                piv = r;
            }
        }
        if (best == 0.0)
            throw NumericalError("dense_solve: singular pivot at column " + std::to_string(k));
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(a.at(k, c), a.at(piv, c));
            std::swap(b[k], b[piv]);
        }
        for (int r = k + 1; r < n; ++r) {
            double m = a.at(r, k) / a.at(k, k);
            if (m == 0.0) continue;
            for (int c = k; c < n; ++c) a.at(r, c) -= m * a.at(k, c);
            b[r] -= m * b[k];
        }
    }
    std::vector<double> x(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a.at(r, c) * x[c];
        x[r] = s / a.at(r, r);
    }
    return x;
}

}  // namespace ddvar
