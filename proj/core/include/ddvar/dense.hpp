#pragma once

#include <vector>

namespace ddvar {

// Minimal dense linear algebra for oracle cross-checks and the validation
// command. Not intended for production-size systems; the solver module is
// matrix-free everywhere else.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;  // row-major

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
};

// Solves A x = b by LU factorization with partial pivoting. Throws
// NumericalError on a numerically singular pivot.
std::vector<double> dense_solve(DenseMatrix a, std::vector<double> b);

}  // namespace ddvar
