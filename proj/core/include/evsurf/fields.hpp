// Gridded field containers: scalars, ambient vectors, frame coefficients.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "evsurf/grid.hpp"

namespace evsurf {

/// Scalar samples on every node of a Grid3, row-major (t, xi1, xi2).
struct ScalarField3 {
    Grid3 grid;
    std::vector<double> values;

    ScalarField3() = default;
    explicit ScalarField3(const Grid3& g, double fill = 0.0)
        : grid(g), values(g.size(), fill) {}

    double& at(std::size_t t, std::size_t i, std::size_t j) {
        return values[grid.index(t, i, j)];
    }
    double at(std::size_t t, std::size_t i, std::size_t j) const {
        return values[grid.index(t, i, j)];
    }
};

/// Surface heights z(t, xi1, xi2) share the scalar layout.
using HeightField = ScalarField3;

/// Ambient R^3 vector per node, stored as three scalar planes.
struct VectorField3 {
    Grid3 grid;
    std::vector<std::array<double, 3>> values;

    VectorField3() = default;
    explicit VectorField3(const Grid3& g)
        : grid(g), values(g.size(), {0.0, 0.0, 0.0}) {}

    std::array<double, 3>& at(std::size_t t, std::size_t i, std::size_t j) {
        return values[grid.index(t, i, j)];
    }
    const std::array<double, 3>& at(std::size_t t, std::size_t i,
                                    std::size_t j) const {
        return values[grid.index(t, i, j)];
    }
};

/// Two frame coefficients per node (components of a tangent field in the
/// orthonormal frame, or of a flow in frame coordinates).
struct FrameField {
    Grid3 grid;
    std::vector<std::array<double, 2>> values;

    FrameField() = default;
    explicit FrameField(const Grid3& g)
        : grid(g), values(g.size(), {0.0, 0.0}) {}

    std::array<double, 2>& at(std::size_t t, std::size_t i, std::size_t j) {
        return values[grid.index(t, i, j)];
    }
    const std::array<double, 2>& at(std::size_t t, std::size_t i,
                                    std::size_t j) const {
        return values[grid.index(t, i, j)];
    }
};

} // namespace evsurf
