// Finite-difference stencils on Grid3 node data.
//
// Interior nodes use second-order central differences; boundary nodes fall
// back to first-order one-sided differences.  The same rule is applied along
// every axis, so a derivative of gridded data is defined at every node.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "evsurf/grid.hpp"

namespace evsurf {

namespace detail {

/// 1-D difference of samples addressed through an accessor `get(k)` with
/// k in [0, n).  Central in the interior, one-sided at the two ends.
template <class Get>
double diff_line(const Get& get, std::size_t k, std::size_t n, double h) {
    if (k == 0) return (get(1) - get(0)) / h;
    if (k + 1 == n) return (get(n - 1) - get(n - 2)) / h;
    return (get(k + 1) - get(k - 1)) / (2.0 * h);
}

} // namespace detail

/// Derivative of a scalar node array along axis (0=t, 1=xi1, 2=xi2) at one node.
inline double diff1(const std::vector<double>& a, const Grid3& g, int axis,
                    std::size_t t, std::size_t i, std::size_t j) {
    switch (axis) {
    case 0:
        return detail::diff_line(
            [&](std::size_t k) { return a[g.index(k, i, j)]; }, t, g.n0, g.h0);
    case 1:
        return detail::diff_line(
            [&](std::size_t k) { return a[g.index(t, k, j)]; }, i, g.n1, g.h1);
    default:
        return detail::diff_line(
            [&](std::size_t k) { return a[g.index(t, i, k)]; }, j, g.n2, g.h2);
    }
}

/// Same stencil applied to one component of an array-of-structs node array.
template <std::size_t K>
double diff1_component(const std::vector<std::array<double, K>>& a,
                       const Grid3& g, std::size_t comp, int axis,
                       std::size_t t, std::size_t i, std::size_t j) {
    switch (axis) {
    case 0:
        return detail::diff_line(
            [&](std::size_t k) { return a[g.index(k, i, j)][comp]; }, t, g.n0,
            g.h0);
    case 1:
        return detail::diff_line(
            [&](std::size_t k) { return a[g.index(t, k, j)][comp]; }, i, g.n1,
            g.h1);
    default:
        return detail::diff_line(
            [&](std::size_t k) { return a[g.index(t, i, k)][comp]; }, j, g.n2,
            g.h2);
    }
}

} // namespace evsurf
