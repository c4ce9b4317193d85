// Raw 4D microscopy-style volumes -> (surface, intensity) pairs.
//
// Per frame: Gaussian smoothing, detection of bright cell centers,
// regularized least-squares fitting of a height field through the centers,
// and trilinear sampling of the smoothed volume on the fitted surface.
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "evsurf/fields.hpp"
#include "evsurf/grid.hpp"

namespace evsurf {

/// One time frame of voxel data, row-major (x-major) with index
/// (ix * ny + iy) * nz + iz.
struct VoxelVolume {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<double> values;

    double at(std::size_t ix, std::size_t iy, std::size_t iz) const {
        return values[(ix * ny + iy) * nz + iz];
    }
    double& at(std::size_t ix, std::size_t iy, std::size_t iz) {
        return values[(ix * ny + iy) * nz + iz];
    }
    std::size_t size() const { return nx * ny * nz; }
};

/// Full 4D sequence, dims (nt, nx, ny, nz) row-major.
struct Volume4 {
    std::size_t nt = 0, nx = 0, ny = 0, nz = 0;
    std::vector<double> values;

    VoxelVolume frame(std::size_t t) const;
    std::size_t size() const { return nt * nx * ny * nz; }
};

/// Detected cell center in physical units (voxel index * voxel size).
struct CellCenter {
    double x = 0.0, y = 0.0, z = 0.0;
    double intensity = 0.0;
};

struct FitConfig {
    double reg_weight = 1e-2; ///< first-order penalty weight (> 0)
    std::size_t grid_n1 = 64, grid_n2 = 64;
};

struct PreprocessConfig {
    std::array<double, 3> sigma = {2.0, 2.0, 2.0}; ///< smoothing, voxel units
    double threshold = 0.3;                        ///< detection threshold
    FitConfig fit;
    std::array<double, 3> voxel_size = {1.0, 1.0, 1.0};
    /// Frames without detected centers produce a zero height field when
    /// true; otherwise NoCenters is thrown.
    bool allow_empty_frames = false;
};

/// Separable truncated-Gaussian convolution (radius ceil(4 sigma) per axis),
/// half-sample reflect padding, kernels normalized to sum 1.
VoxelVolume gaussian_filter3(const VoxelVolume& v,
                             const std::array<double, 3>& sigma);

/// Strict 26-neighborhood maxima with value > threshold, interior voxels
/// only, in row-major voxel order; coordinates scaled by voxel_size.
std::vector<CellCenter> detect_cells(const VoxelVolume& v, double threshold,
                                     const std::array<double, 3>& voxel_size);

/// Center expressed in chart units: (xi1, xi2) in the chart rectangle and
/// height in xi1-units.
struct ChartCenter {
    double xi1 = 0.0, xi2 = 0.0, height = 0.0;
};

/// Minimize  sum_c (B(xi_c) . z - z_c)^2 + mu * sum_edges (z_next - z_cur)^2
/// over nodal values z on an n1 x n2 grid, where B are bilinear weights at
/// the center's chart position and the edge sum runs over forward-difference
/// neighbor pairs (the h^2 of the gradient form cancels against the squared
/// difference quotients).  Solved via the normal equations with the in-repo
/// iterative solver.  Throws NoCenters when `centers` is empty and
/// SingularFit when reg_weight <= 0.
std::vector<double> fit_surface(const std::vector<ChartCenter>& centers,
                                const FitConfig& cfg);

/// Trilinear sample of the volume on the surface.
struct SampledFrame {
    std::vector<double> f;      ///< n1 x n2 chart samples in [0,1]
    std::size_t clamped = 0;    ///< surface points outside the volume z-range
};

/// Evaluate the volume at (xi1, xi2, z(xi1, xi2)) for every grid node by
/// trilinear interpolation; out-of-volume heights clamp to the nearest voxel
/// layer and are counted.  Output values clamp to [0, 1].
SampledFrame sample_intensity(const VoxelVolume& v,
                              const std::vector<double>& z_chart,
                              std::size_t n1, std::size_t n2,
                              const std::array<double, 3>& voxel_size);

struct PreprocessResult {
    HeightField z;
    ScalarField3 f;
    std::vector<std::vector<CellCenter>> centers; ///< per frame
    std::size_t clamped_samples = 0;
};

/// Full per-frame pipeline; frames run in parallel.  The output grid spans
/// the unit interval in xi1 with equal spatial steps (so the chart is
/// [0,1] x [0,(n2-1)/(n1-1)]) and unit total time.  Chart coordinates map
/// linearly onto the full voxel extents; heights are physical z divided by
/// the physical x-extent.
PreprocessResult preprocess(const Volume4& volume, const PreprocessConfig& cfg);

/// CSV rows: frame,x,y,z,intensity (%.17g).
void write_centers_csv(const std::string& path,
                       const std::vector<std::vector<CellCenter>>& centers);

} // namespace evsurf
