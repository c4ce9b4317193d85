// Regular space-time grid over [0,1] x [0,1] x [0,1].
#pragma once

#include <cstddef>

#include "evsurf/errors.hpp"

namespace evsurf {

/// Uniform tensor-product grid with n0 time levels and n1 x n2 spatial nodes.
///
/// Node (t,i,j) sits at parameter (t*h0, i*h1, j*h2).  The spatial steps must
/// be equal (the discrete operators assume an isotropic spatial grid), there
/// must be at least two time levels, and at least three nodes per spatial
/// axis so that one-sided and centered stencils both fit.
struct Grid3 {
    std::size_t n0 = 0, n1 = 0, n2 = 0;
    double h0 = 0.0, h1 = 0.0, h2 = 0.0;

    Grid3() = default;

    Grid3(std::size_t nt, std::size_t nx, std::size_t ny,
          double ht, double hx, double hy)
        : n0(nt), n1(nx), n2(ny), h0(ht), h1(hx), h2(hy) {
        if (n0 < 2 || n1 < 3 || n2 < 3)
            throw GridTooSmall("Grid3 requires n0 >= 2, n1 >= 3, n2 >= 3");
        if (h0 <= 0.0 || h1 <= 0.0 || h2 <= 0.0)
            throw GridTooSmall("Grid3 requires positive steps");
        if (h1 != h2)
            throw GridTooSmall("Grid3 requires h1 == h2");
    }

    /// Grid over the unit cube with steps 1/(n-1) along each axis.
    static Grid3 unit_cube(std::size_t n0, std::size_t n1, std::size_t n2) {
        if (n1 != n2)
            throw GridTooSmall("unit_cube requires n1 == n2");
        return Grid3(n0, n1, n2,
                     1.0 / double(n0 - 1), 1.0 / double(n1 - 1),
                     1.0 / double(n2 - 1));
    }

    std::size_t size() const { return n0 * n1 * n2; }
    std::size_t frame_size() const { return n1 * n2; }

    /// Row-major linear index of node (t,i,j).
    std::size_t index(std::size_t t, std::size_t i, std::size_t j) const {
        return (t * n1 + i) * n2 + j;
    }

    double t_of(std::size_t t) const { return double(t) * h0; }
    double x1_of(std::size_t i) const { return double(i) * h1; }
    double x2_of(std::size_t j) const { return double(j) * h2; }

    bool operator==(const Grid3&) const = default;
};

} // namespace evsurf
