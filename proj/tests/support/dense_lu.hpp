// Dense direct-solve oracle: LU factorization with partial pivoting.
//
// Deliberately naive O(n^3) reference used to cross-check the sparse matvec
// and the iterative solver.  Shares no code with the library.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "evsurf/assembly.hpp"

namespace testsupport {

/// Expand a row-compressed sparse matrix into a dense row-major n x n array.
inline std::vector<double> dense_from(const evsurf::SparseSystem& sys) {
    const std::size_t n = sys.nrows;
    std::vector<double> a(n * n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
            a[r * n + sys.col[k]] += sys.val[k];
    return a;
}

/// Dense row-major matrix-vector product.
inline std::vector<double> dense_matvec(const std::vector<double>& a,
                                        const std::vector<double>& x) {
    const std::size_t n = x.size();
    std::vector<double> y(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < n; ++c) s += a[r * n + c] * x[c];
        y[r] = s;
    }
    return y;
}

/// Solve a x = b by LU with partial pivoting; throws on numerical singularity.
inline std::vector<double> lu_solve(std::vector<double> a,
                                    std::vector<double> b) {
    const std::size_t n = b.size();
    if (a.size() != n * n) throw std::runtime_error("lu_solve: shape mismatch");
    std::vector<std::size_t> piv(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = std::fabs(a[k * n + k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            const double v = std::fabs(a[r * n + k]);
            if (v > best) {
                best = v;
                p = r;
            }
        }
        if (best == 0.0) throw std::runtime_error("lu_solve: singular matrix");
        piv[k] = p;
        if (p != k) {
            for (std::size_t c = 0; c < n; ++c)
                std::swap(a[k * n + c], a[p * n + c]);
            std::swap(b[k], b[p]);
        }
        const double d = a[k * n + k];
        for (std::size_t r = k + 1; r < n; ++r) {
            const double m = a[r * n + k] / d;
            if (m == 0.0) continue;
            a[r * n + k] = m;
            for (std::size_t c = k + 1; c < n; ++c) a[r * n + c] -= m * a[k * n + c];
            b[r] -= m * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t ri = n; ri-- > 0;) {
        double s = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) s -= a[ri * n + c] * x[c];
        x[ri] = s / a[ri * n + ri];
    }
    return x;
}

} // namespace testsupport
