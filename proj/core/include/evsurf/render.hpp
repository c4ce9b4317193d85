// Color-coded flow visualization.
//
// Vectors are projected to the chart plane with a length-preserving scaling,
// then colored on the standard 55-bin optical-flow color wheel: hue encodes
// direction, darkness encodes magnitude, zero maps to white.
#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "evsurf/fields.hpp"

namespace evsurf {

/// One frame of 2D vectors on the (xi1, xi2) node lattice.
struct VectorField2 {
    std::size_t n1 = 0, n2 = 0;
    std::vector<std::array<double, 2>> values; ///< row-major, xi1-major

    double& at(std::size_t i, std::size_t j, std::size_t c) {
        return values[i * n2 + j][c];
    }
    double at(std::size_t i, std::size_t j, std::size_t c) const {
        return values[i * n2 + j][c];
    }
};

/// 8-bit RGB image; rows top-to-bottom correspond to increasing xi1.
struct FlowImage {
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> rgb; ///< 3 * width * height bytes

    std::uint8_t at(std::size_t row, std::size_t col, std::size_t ch) const {
        return rgb[(row * width + col) * 3 + ch];
    }
};

/// Length-preserving projection of one frame:
/// out = (|u| / |P u|) (u1, u2) with P the drop-x3 projection; vectors with
/// |P u| < 1e-14 map to (0, 0).
VectorField2 scaled_projection(const VectorField3& u, std::size_t frame);

/// The 55-entry wheel (RY 15, YG 6, GC 4, CB 11, BM 13, MR 6 sectors with
/// linear 0..255 ramps); channel values in [0, 255].
std::array<std::array<double, 3>, 55> make_colorwheel();

/// Magnitudes of every vector in the frame, row-major.
std::vector<double> magnitudes(const VectorField2& f);

/// 99th-percentile (nearest-rank: element ceil(0.99 n) of the ascending
/// sort) — the automatic normalization magnitude.
double percentile_99(std::vector<double> mags);

/// Color-code one frame.  max_magnitude is the saturation normalizer;
/// nullopt selects the frame's own 99th-percentile magnitude.  Magnitudes
/// at or beyond the normalizer clip to full saturation; a nonpositive
/// normalizer renders everything white.
FlowImage colorize(const VectorField2& f, std::optional<double> max_magnitude);

/// Binary PPM (P6), deterministic bytes: "P6\n{w} {h}\n255\n" + RGB payload.
void write_ppm(const FlowImage& image, const std::string& path);

/// Zero-padded per-frame output name: "flow_0007.ppm".
std::string frame_filename(std::size_t frame);

} // namespace evsurf
