// Matrix-free evaluation of the discretized optimality system: A.w - rhs
// computed by applying the finite-difference formulas to w directly.  This is
// an intentionally independent re-implementation of the discretization (no
// code shared with the sparse assembler) used to cross-check it.
#include <cmath>
#include <vector>

#include "evsurf/assembly.hpp"
#include "evsurf/errors.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

namespace {

/// w^m at node, 1-based component.
inline double wv(const FrameField& w, const Grid3& g, std::size_t t,
                 std::size_t i, std::size_t j, int m) {
    return w.values[g.index(t, i, j)][std::size_t(m - 1)];
}

/// Central first difference of w^m along axis (assumes neighbors exist).
double cdiff(const FrameField& w, const Grid3& g, int axis, std::size_t t,
             std::size_t i, std::size_t j, int m) {
    switch (axis) {
    case 0:
        return (wv(w, g, t + 1, i, j, m) - wv(w, g, t - 1, i, j, m)) / (2.0 * g.h0);
    case 1:
        return (wv(w, g, t, i + 1, j, m) - wv(w, g, t, i - 1, j, m)) / (2.0 * g.h1);
    default:
        return (wv(w, g, t, i, j + 1, m) - wv(w, g, t, i, j - 1, m)) / (2.0 * g.h2);
    }
}

/// Central second difference along one axis.
double cdiff2(const FrameField& w, const Grid3& g, int axis, std::size_t t,
              std::size_t i, std::size_t j, int m) {
    switch (axis) {
    case 0:
        return (wv(w, g, t + 1, i, j, m) - 2.0 * wv(w, g, t, i, j, m) +
                wv(w, g, t - 1, i, j, m)) /
               (g.h0 * g.h0);
    case 1:
        return (wv(w, g, t, i + 1, j, m) - 2.0 * wv(w, g, t, i, j, m) +
                wv(w, g, t, i - 1, j, m)) /
               (g.h1 * g.h1);
    default:
        return (wv(w, g, t, i, j + 1, m) - 2.0 * wv(w, g, t, i, j, m) +
                wv(w, g, t, i, j - 1, m)) /
               (g.h2 * g.h2);
    }
}

/// Central mixed difference in the (xi1, xi2) plane.
double cdiff12(const FrameField& w, const Grid3& g, std::size_t t, std::size_t i,
               std::size_t j, int m) {
    return (wv(w, g, t, i + 1, j + 1, m) - wv(w, g, t, i + 1, j - 1, m) -
            wv(w, g, t, i - 1, j + 1, m) + wv(w, g, t, i - 1, j - 1, m)) /
           (4.0 * g.h1 * g.h2);
}

/// One-sided first difference along axis toward the interior.
double odiff(const FrameField& w, const Grid3& g, int axis, std::size_t t,
             std::size_t i, std::size_t j, int m, bool low_side) {
    const double h = axis == 0 ? g.h0 : (axis == 1 ? g.h1 : g.h2);
    const long s = low_side ? 1 : -1;
    std::size_t tt = t, ii = i, jj = j;
    (axis == 0 ? tt : axis == 1 ? ii : jj) += std::size_t(s);
    const double a = wv(w, g, tt, ii, jj, m);
    const double b = wv(w, g, t, i, j, m);
    return low_side ? (a - b) / h : (b - a) / h;
}

} // namespace

std::vector<double> el_residual(const FrameField& w, const ElCoefficients& C) {
    const Grid3& g = C.grid;
    if (w.grid != g) throw DimMismatch("el_residual: grid mismatch");
    const double lam0 = C.reg.lambda0;

    std::vector<double> res(2 * g.size(), 0.0);
    parallel_for(0, g.n0, [&](std::size_t t) {
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j) {
                const std::size_t pt = g.index(t, i, j);
                const bool iext = (i == 0 || i + 1 == g.n1);
                const bool jext = (j == 0 || j + 1 == g.n2);
                const bool text = (t == 0 || t + 1 == g.n0);

                for (int m = 1; m <= 2; ++m) {
                    double r;
                    if (iext && jext) {
                        // corner: beta * (w(p) - w(p - 2 n_diag)) / (2 sqrt2 h)
                        // + (n1 p^{1m}_i + n2 p^{2m}_i) w^i
                        const double n1s = (i == 0) ? -1.0 : 1.0;
                        const double n2s = (j == 0) ? -1.0 : 1.0;
                        const double q11 = C.q_at(pt, 1, 1), q12 = C.q_at(pt, 1, 2);
                        const double q21 = C.q_at(pt, 2, 1), q22 = C.q_at(pt, 2, 2);
                        const double beta =
                            0.5 * ((n1s * q11 + n2s * q21) * n1s +
                                   (n1s * q12 + n2s * q22) * n2s);
                        const std::size_t i2 = std::size_t(long(i) - 2 * long(n1s));
                        const std::size_t j2 = std::size_t(long(j) - 2 * long(n2s));
                        r = beta *
                            (wv(w, g, t, i, j, m) - wv(w, g, t, i2, j2, m)) /
                            (2.0 * std::sqrt(2.0) * g.h1);
                        for (int ii = 1; ii <= 2; ++ii)
                            r += (n1s * C.p_at(pt, 1, m, ii) +
                                  n2s * C.p_at(pt, 2, m, ii)) *
                                 wv(w, g, t, i, j, ii);
                    } else if (iext || jext) {
                        // spatial face nu with outward normal sign ns
                        const int nu = iext ? 1 : 2;
                        const bool low = (nu == 1) ? (i == 0) : (j == 0);
                        const double ns = low ? -1.0 : 1.0;
                        r = 0.0;
                        // q^{nu 0} vanishes structurally, so sigma in {1,2}
                        for (int sigma = 1; sigma <= 2; ++sigma) {
                            const double q = C.q_at(pt, nu, sigma);
                            if (q == 0.0) continue;
                            const double dws =
                                (sigma == nu)
                                    ? odiff(w, g, sigma, t, i, j, m, low)
                                    : cdiff(w, g, sigma, t, i, j, m);
                            r += ns * q * dws;
                        }
                        for (int ii = 1; ii <= 2; ++ii)
                            r += ns * C.p_at(pt, nu, m, ii) * wv(w, g, t, i, j, ii);
                    } else if (text && lam0 > 0.0) {
                        // temporal face: ns (q^{00} dt w^m + p^{0m}_i w^i)
                        const bool low = (t == 0);
                        const double ns = low ? -1.0 : 1.0;
                        r = ns * C.q_at(pt, 0, 0) * odiff(w, g, 0, t, i, j, m, low);
                        for (int ii = 1; ii <= 2; ++ii)
                            r += ns * C.p_at(pt, 0, m, ii) * wv(w, g, t, i, j, ii);
                    } else {
                        // interior PDE row minus rhs
                        r = -C.a_at(pt, m);
                        for (int ii = 1; ii <= 2; ++ii)
                            r += C.b_at(pt, m, ii) * wv(w, g, t, i, j, ii);
                        for (int sigma = 0; sigma <= 2; ++sigma) {
                            if (sigma == 0 && text) {
                                // all temporal coefficients vanish here
                                continue;
                            }
                            for (int ii = 1; ii <= 2; ++ii) {
                                const double c = C.c_at(pt, sigma, m, ii);
                                if (c != 0.0)
                                    r += c * cdiff(w, g, sigma, t, i, j, ii);
                            }
                        }
                        for (int nu = 0; nu <= 2; ++nu)
                            for (int sigma = 0; sigma <= 2; ++sigma) {
                                const double d = C.d_at(pt, nu, sigma);
                                if (d == 0.0) continue;
                                double dd;
                                if (nu == sigma)
                                    dd = cdiff2(w, g, nu, t, i, j, m);
                                else if (nu != 0 && sigma != 0)
                                    dd = cdiff12(w, g, t, i, j, m);
                                else
                                    throw ModeMismatch(
                                        "el_residual: unexpected temporal "
                                        "mixed-derivative coefficient");
                                r += d * dd;
                            }
                    }
                    res[unknown_index(g, t, i, j, m)] = r;
                }
            }
    });
    return res;
}

} // namespace evsurf
