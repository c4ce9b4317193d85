// Manufactured evolving surfaces and intensity sequences with exact
// ground-truth flow.
//
// Intensities are advected analytically, f(t, xi) = f0(xi - t*v), so the
// local-coordinate transport equation df/dt + u^i @_i f = 0 holds exactly in
// the continuum with coordinate velocity u^i = v^i.  The returned w_true is
// that velocity expressed in the orthonormal frame of the generated surface.
#pragma once

#include <cstdint>
#include <vector>

#include "evsurf/fields.hpp"
#include "evsurf/geometry.hpp"
#include "evsurf/grid.hpp"

namespace evsurf {

/// 64-bit linear congruential generator (Knuth MMIX multiplier/increment).
/// Documented constants so fixtures are reproducible across languages:
///   state <- state * 6364136223846793005 + 1442695040888963407
/// next_double() maps the top 53 bits to [0, 1).
class Lcg64 {
  public:
    explicit Lcg64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next_u64() {
        state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
        return state_;
    }
    double next_double() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

  private:
    std::uint64_t state_;
};

enum class SurfaceKind { Flat, Tilt, Bump, Wave };
enum class TextureKind { GaussianBlobs, Polynomial };

struct SynthSpec {
    SurfaceKind surface = SurfaceKind::Flat;
    double slope = 0.5;         ///< tilt: z = slope * xi1
    double amplitude = 0.2;     ///< bump/wave amplitude (>= 0)
    double width = 0.2;         ///< bump width (> 0)
    double spatial_freq = 1.0;  ///< wave: cycles across the unit chart
    double temporal_freq = 1.0; ///< wave: cycles over unit time

    double v1 = 0.0, v2 = 0.0; ///< constant chart velocity per unit time

    TextureKind texture = TextureKind::GaussianBlobs;
    int blob_count = 12;
    double blob_width = 0.05;      ///< blob Gaussian sigma (> 0)
    std::uint64_t rng_seed = 1;    ///< blob placement / noise stream
    int poly_degree = 2;           ///< polynomial texture degree (0..2)
    double noise_sigma = 0.0;      ///< optional additive Gaussian noise

    void validate() const;
};

struct SynthResult {
    HeightField z;
    ScalarField3 f;
    FrameField w_true;
    VectorField3 u_true;
};

/// Deterministic generation on `grid`.  Blob centers are drawn by rejection
/// (pairwise separation 2.5 * blob_width) inside a box shrunk so the 3-sigma
/// support, advected by v over the whole sequence, stays inside the chart;
/// an empty box raises MotionExitsDomain.  Amplitudes are uniform in
/// [0.3, 0.55], which keeps the summed texture inside [0, 1] for any
/// admissible placement.  Samples are verified to lie in [0, 1].
SynthResult generate(const SynthSpec& spec, const Grid3& grid,
                     FrameOrder order = FrameOrder::Dx1First);

} // namespace evsurf
