// Discretization of the Euler-Lagrange optimality system into sparse linear
// systems: interior 11-point stencil rows, natural boundary rows on the six
// faces, and diagonal-derivative rows at the corner set
//   C = ({xi1 extremal} intersect {xi2 extremal}, every time level),
// where the mixed-derivative stencil would otherwise leave unknowns
// unconstrained.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "evsurf/fields.hpp"
#include "evsurf/grid.hpp"
#include "evsurf/variational.hpp"

namespace evsurf {

/// Row-compressed sparse matrix with right-hand side.
struct SparseSystem {
    std::size_t nrows = 0;
    std::vector<std::size_t> row_ptr; // nrows + 1 offsets
    std::vector<std::uint32_t> col;   // strictly increasing within a row
    std::vector<double> val;
    std::vector<double> rhs;

    std::size_t nnz() const { return val.size(); }
};

/// One coupled system over all time levels, or one system per frame
/// (framewise requires lambda0 == 0, which makes the spatiotemporal matrix
/// block-diagonal over frames).
enum class AssembleMode { Spatiotemporal, Framewise };

/// Unknown ordering: component m in {1,2} fastest, then j, i, t.
inline std::size_t unknown_index(const Grid3& g, std::size_t t, std::size_t i,
                                 std::size_t j, int m) {
    return (t * g.n1 * g.n2 + i * g.n2 + j) * 2 + std::size_t(m - 1);
}

/// Unknown ordering within a single frame.
inline std::size_t unknown_index_frame(const Grid3& g, std::size_t i,
                                       std::size_t j, int m) {
    return (i * g.n2 + j) * 2 + std::size_t(m - 1);
}

/// Assemble the discrete optimality system.
///
/// Row layout per gridpoint and component m:
///   - interior points: d^{nu sigma} central second/mixed differences
///     + c^{sigma m}_i central first differences + b^m_i pointwise, rhs a^m;
///   - face points (exactly one extremal axis, or t extremal with lambda0 > 0
///     at spatially interior points): n_nu (q^{nu sigma} d_sigma w^m
///     + p^{nu m}_i w^i) with one-sided differences across the face and
///     central along it, rhs 0;
///   - corner points (xi1 and xi2 both extremal, any t): the outward-diagonal
///     directional difference (1/(2 sqrt(2) h1)) (w(p) - w(p - 2 n_diag)) with
///     weight from the q-form, plus the matching p terms, rhs 0;
///   - t-extremal, spatially interior points with lambda0 == 0: interior row
///     (every temporal coefficient vanishes identically).
///
/// A contribution is added only if its coefficient is nonzero; structural
/// zeros (e.g. q^{10}, q^{20}, all temporal couplings at lambda0 = 0) never
/// generate entries or out-of-range neighbor references.
///
/// Framewise mode assembles the 2 n1 n2 system of time level `frame` and
/// throws ModeMismatch unless lambda0 == 0.
SparseSystem assemble(const ElCoefficients& coeffs, AssembleMode mode,
                      std::size_t frame = 0);

/// A . w - rhs of the spatiotemporal system evaluated directly from the
/// coefficient fields, without forming the matrix.  Independent
/// re-implementation used for diagnostics and cross-checking.
std::vector<double> el_residual(const FrameField& w, const ElCoefficients& coeffs);

/// Debug dump in coordinate format ("row col value" per line, 17 significant
/// digits), rows in order.
void dump_coo(const SparseSystem& sys, const std::string& path);

} // namespace evsurf
