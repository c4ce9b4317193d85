#include "evsurf/assembly.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <utility>

#include "evsurf/errors.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

namespace {

/// Entry accumulator for one matrix row (a handful of entries each).
struct RowAccum {
    std::vector<std::pair<std::size_t, double>> entries;

    void add(std::size_t col, double v) {
        for (auto& e : entries)
            if (e.first == col) {
                e.second += v;
                return;
            }
        entries.emplace_back(col, v);
    }

    void sorted() {
        std::sort(entries.begin(), entries.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
    }
};

/// Signed axis offset of a node index triple.
struct NodeRef {
    std::size_t t, i, j;
    NodeRef shifted(int axis, long step) const {
        NodeRef r = *this;
        switch (axis) {
        case 0: r.t = std::size_t(long(t) + step); break;
        case 1: r.i = std::size_t(long(i) + step); break;
        default: r.j = std::size_t(long(j) + step); break;
        }
        return r;
    }
};

double step_of(const Grid3& g, int axis) {
    return axis == 0 ? g.h0 : (axis == 1 ? g.h1 : g.h2);
}

} // namespace

SparseSystem assemble(const ElCoefficients& coeffs, AssembleMode mode,
                      std::size_t frame) {
    const Grid3& g = coeffs.grid;
    const bool framewise = mode == AssembleMode::Framewise;
    if (framewise && coeffs.reg.lambda0 != 0.0)
        throw ModeMismatch("assemble: framewise mode requires lambda0 == 0");
    if (framewise && frame >= g.n0)
        throw ModeMismatch("assemble: frame index out of range");

    const std::size_t nrows = framewise ? 2 * g.frame_size() : 2 * g.size();
    if (nrows > std::numeric_limits<std::uint32_t>::max())
        throw GridTooSmall("assemble: system too large for 32-bit column indices");

    auto col_of = [&](const NodeRef& n, int m) -> std::size_t {
        return framewise ? unknown_index_frame(g, n.i, n.j, m)
                         : unknown_index(g, n.t, n.i, n.j, m);
    };

    std::vector<RowAccum> rows(nrows);
    std::vector<double> rhs(nrows, 0.0);

    const std::size_t t_begin = framewise ? frame : 0;
    const std::size_t t_end = framewise ? frame + 1 : g.n0;

    auto build_node = [&](std::size_t t, std::size_t i, std::size_t j) {
        const std::size_t pt = g.index(t, i, j);
        const NodeRef here{t, i, j};
        const bool i_ext = (i == 0 || i + 1 == g.n1);
        const bool j_ext = (j == 0 || j + 1 == g.n2);
        // In framewise mode there is no temporal boundary: each system is
        // purely spatial and all temporal coefficients vanish (lambda0 = 0).
        const bool t_ext = !framewise && (t == 0 || t + 1 == g.n0);

        // In-range guard used only when a coefficient is nonzero; a violation
        // would mean the point classification is inconsistent.
        [[maybe_unused]] auto in_range = [&](const NodeRef& n) {
            return n.t < g.n0 && n.i < g.n1 && n.j < g.n2 &&
                   (!framewise || n.t == frame);
        };

        for (int m = 1; m <= 2; ++m) {
            RowAccum& row = rows[col_of(here, m)];

            if (i_ext && j_ext) {
                // Corner set C: diagonal-derivative condition with
                // n = (0, n1s, n2s), the direction of the unconstrained
                // diagonal neighbor.
                const int n1s = (i == 0) ? -1 : 1;
                const int n2s = (j == 0) ? -1 : 1;
                double Q[3];
                for (int sigma = 0; sigma <= 2; ++sigma)
                    Q[sigma] = n1s * coeffs.q_at(pt, 1, sigma) +
                               n2s * coeffs.q_at(pt, 2, sigma);
                // Q^1 d_1 + Q^2 d_2 projected on the outward diagonal
                // n1s d_1 + n2s d_2; the remaining (anti-diagonal) component
                // has no representable stencil at a corner and is dropped.
                const double beta = 0.5 * (Q[1] * n1s + Q[2] * n2s);
                if (beta != 0.0) {
                    // (n1s d_1 + n2s d_2) w ~ (w(p) - w(p - 2 n_diag)) / (2 sqrt2 h1),
                    // the diagonal difference centered on the inward neighbor.
                    const double wgt = beta / (2.0 * std::sqrt(2.0) * g.h1);
                    NodeRef inner = here;
                    inner.i = std::size_t(long(i) - 2 * n1s);
                    inner.j = std::size_t(long(j) - 2 * n2s);
                    assert(in_range(inner));
                    row.add(col_of(here, m), wgt);
                    row.add(col_of(inner, m), -wgt);
                }
                for (int ii = 1; ii <= 2; ++ii) {
                    const double P = n1s * coeffs.p_at(pt, 1, m, ii) +
                                     n2s * coeffs.p_at(pt, 2, m, ii);
                    if (P != 0.0) row.add(col_of(here, ii), P);
                }
                continue; // rhs stays 0
            }

            int face_nu = -1;
            if (i_ext) face_nu = 1;
            else if (j_ext) face_nu = 2;
            else if (t_ext && coeffs.reg.lambda0 > 0.0) face_nu = 0;

            if (face_nu >= 0) {
                // Natural boundary row: n_nu (q^{nu sigma} d_sigma w^m
                //                              + p^{nu m}_i w^i) = 0.
                const std::size_t idx_nu =
                    face_nu == 0 ? t : (face_nu == 1 ? i : j);
                const std::size_t n_nu =
                    face_nu == 0 ? g.n0 : (face_nu == 1 ? g.n1 : g.n2);
                const double ns = (idx_nu == 0) ? -1.0 : 1.0;
                const double h_nu = step_of(g, face_nu);

                for (int sigma = 0; sigma <= 2; ++sigma) {
                    const double coef = ns * coeffs.q_at(pt, face_nu, sigma);
                    if (coef == 0.0) continue;
                    if (sigma == face_nu) {
                        // one-sided difference across the face
                        const long inward = (idx_nu == 0) ? 1 : -1;
                        NodeRef nb = here.shifted(sigma, inward);
                        assert(in_range(nb));
                        // low side: (w_+ - w_p)/h; high side: (w_p - w_-)/h
                        row.add(col_of(here, m), -double(inward) * coef / h_nu);
                        row.add(col_of(nb, m), double(inward) * coef / h_nu);
                    } else {
                        // central difference along the face
                        const double h = step_of(g, sigma);
                        NodeRef plus = here.shifted(sigma, 1);
                        NodeRef minus = here.shifted(sigma, -1);
                        assert(in_range(plus) && in_range(minus));
                        row.add(col_of(plus, m), coef / (2.0 * h));
                        row.add(col_of(minus, m), -coef / (2.0 * h));
                    }
                }
                for (int ii = 1; ii <= 2; ++ii) {
                    const double coef = ns * coeffs.p_at(pt, face_nu, m, ii);
                    if (coef != 0.0) row.add(col_of(here, ii), coef);
                }
                (void)n_nu;
                continue; // rhs stays 0
            }

            // Interior row:
            //   d^{nu sigma} d_{nu sigma} w^m + c^{sigma m}_i d_sigma w^i
            //     + b^m_i w^i = a^m.
            rhs[col_of(here, m)] = coeffs.a_at(pt, m);

            for (int ii = 1; ii <= 2; ++ii) {
                const double coef = coeffs.b_at(pt, m, ii);
                if (coef != 0.0) row.add(col_of(here, ii), coef);
            }

            for (int sigma = 0; sigma <= 2; ++sigma)
                for (int ii = 1; ii <= 2; ++ii) {
                    const double coef = coeffs.c_at(pt, sigma, m, ii);
                    if (coef == 0.0) continue;
                    const double h = step_of(g, sigma);
                    NodeRef plus = here.shifted(sigma, 1);
                    NodeRef minus = here.shifted(sigma, -1);
                    assert(in_range(plus) && in_range(minus));
                    row.add(col_of(plus, ii), coef / (2.0 * h));
                    row.add(col_of(minus, ii), -coef / (2.0 * h));
                }

            for (int nu = 0; nu <= 2; ++nu)
                for (int sigma = 0; sigma <= 2; ++sigma) {
                    const double coef = coeffs.d_at(pt, nu, sigma);
                    if (coef == 0.0) continue;
                    if (nu == sigma) {
                        const double h = step_of(g, sigma);
                        NodeRef plus = here.shifted(sigma, 1);
                        NodeRef minus = here.shifted(sigma, -1);
                        assert(in_range(plus) && in_range(minus));
                        row.add(col_of(here, m), -2.0 * coef / (h * h));
                        row.add(col_of(plus, m), coef / (h * h));
                        row.add(col_of(minus, m), coef / (h * h));
                    } else {
                        const double hn = step_of(g, nu);
                        const double hs = step_of(g, sigma);
                        const double wgt = coef / (4.0 * hn * hs);
                        NodeRef pp = here.shifted(nu, 1).shifted(sigma, 1);
                        NodeRef pm = here.shifted(nu, 1).shifted(sigma, -1);
                        NodeRef mp = here.shifted(nu, -1).shifted(sigma, 1);
                        NodeRef mm = here.shifted(nu, -1).shifted(sigma, -1);
                        assert(in_range(pp) && in_range(pm) && in_range(mp) &&
                               in_range(mm));
                        row.add(col_of(pp, m), wgt);
                        row.add(col_of(pm, m), -wgt);
                        row.add(col_of(mp, m), -wgt);
                        row.add(col_of(mm, m), wgt);
                    }
                }
        }
    };

    parallel_for(t_begin, t_end, [&](std::size_t t) {
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j) build_node(t, i, j);
    });

    SparseSystem sys;
    sys.nrows = nrows;
    sys.rhs = std::move(rhs);
    sys.row_ptr.resize(nrows + 1, 0);
    std::size_t nnz = 0;
    for (std::size_t r = 0; r < nrows; ++r) {
        rows[r].sorted();
        assert(!rows[r].entries.empty() && "structurally empty matrix row");
        sys.row_ptr[r] = nnz;
        nnz += rows[r].entries.size();
    }
    sys.row_ptr[nrows] = nnz;
    sys.col.resize(nnz);
    sys.val.resize(nnz);
    parallel_for(0, nrows, [&](std::size_t r) {
        std::size_t k = sys.row_ptr[r];
        for (const auto& e : rows[r].entries) {
            sys.col[k] = std::uint32_t(e.first);
            sys.val[k] = e.second;
            ++k;
        }
    });
    return sys;
}

void dump_coo(const SparseSystem& sys, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoFailure("dump_coo: cannot open " + path);
    char line[96];
    for (std::size_t r = 0; r < sys.nrows; ++r)
        for (std::size_t k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k) {
            std::snprintf(line, sizeof line, "%zu %u %.17g\n", r, sys.col[k],
                          sys.val[k]);
            out << line;
        }
    if (!out) throw IoFailure("dump_coo: write failed for " + path);
}

} // namespace evsurf
