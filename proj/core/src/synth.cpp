#include "evsurf/synth.hpp"

#include <cmath>
#include <numbers>

#include "evsurf/errors.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Blob {
    double cx, cy, amp;
};

double surface_height(const SynthSpec& s, double t, double x1, double x2) {
    switch (s.surface) {
    case SurfaceKind::Flat:
        return 0.0;
    case SurfaceKind::Tilt:
        return s.slope * x1;
    case SurfaceKind::Bump: {
        const double r2 = (x1 - 0.5) * (x1 - 0.5) + (x2 - 0.5) * (x2 - 0.5);
        return s.amplitude * std::exp(-r2 / (2.0 * s.width * s.width));
    }
    case SurfaceKind::Wave:
        return s.amplitude * std::sin(kTwoPi * s.spatial_freq * x1) *
               std::sin(kTwoPi * s.spatial_freq * x2) *
               std::cos(kTwoPi * s.temporal_freq * t);
    }
    return 0.0;
}

double texture_value(const SynthSpec& s, const std::vector<Blob>& blobs,
                     double x1, double x2) {
    if (s.texture == TextureKind::Polynomial) {
        double v = s.poly_degree == 0 ? 0.5 : 0.3 + 0.15 * x1 + 0.1 * x2;
        if (s.poly_degree >= 2) v += 0.05 * x1 * x2;
        return v;
    }
    double v = 0.0;
    for (const Blob& b : blobs) {
        const double r2 =
            (x1 - b.cx) * (x1 - b.cx) + (x2 - b.cy) * (x2 - b.cy);
        v += b.amp * std::exp(-r2 / (2.0 * s.blob_width * s.blob_width));
    }
    return v;
}

std::vector<Blob> place_blobs(const SynthSpec& s, const Grid3& grid, Lcg64& rng) {
    // Support must stay in the chart over the whole sequence: the texture is
    // advected by t*v, so a center admissible at t = 0 must remain admissible
    // after the total drift.
    const double x1max = double(grid.n1 - 1) * grid.h1;
    const double x2max = double(grid.n2 - 1) * grid.h2;
    const double total_t = double(grid.n0 - 1) * grid.h0;
    const double margin = 3.0 * s.blob_width;
    const double lo1 = margin + std::max(0.0, -s.v1 * total_t);
    const double hi1 = x1max - margin - std::max(0.0, s.v1 * total_t);
    const double lo2 = margin + std::max(0.0, -s.v2 * total_t);
    const double hi2 = x2max - margin - std::max(0.0, s.v2 * total_t);
    if (!(lo1 < hi1) || !(lo2 < hi2))
        throw MotionExitsDomain(
            "generate: no admissible blob centers for this motion/width");

    const double min_sep2 = 2.5 * s.blob_width * 2.5 * s.blob_width;
    std::vector<Blob> blobs;
    blobs.reserve(std::size_t(s.blob_count));
    for (int b = 0; b < s.blob_count; ++b) {
        double cx = 0.0, cy = 0.0;
        bool placed = false;
        for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
            cx = lo1 + (hi1 - lo1) * rng.next_double();
            cy = lo2 + (hi2 - lo2) * rng.next_double();
            placed = true;
            for (const Blob& other : blobs) {
                const double dx = cx - other.cx, dy = cy - other.cy;
                if (dx * dx + dy * dy < min_sep2) {
                    placed = false;
                    break;
                }
            }
        }
        if (!placed)
            throw BadConfig("generate: cannot place blobs with the requested "
                            "count/width/separation");
        const double amp = 0.3 + 0.25 * rng.next_double();
        blobs.push_back({cx, cy, amp});
    }
    return blobs;
}

} // namespace

void SynthSpec::validate() const {
    if (!(amplitude >= 0.0)) throw BadConfig("SynthSpec: amplitude must be >= 0");
    if (!(width > 0.0)) throw BadConfig("SynthSpec: width must be > 0");
    if (!(blob_width > 0.0)) throw BadConfig("SynthSpec: blob_width must be > 0");
    if (blob_count < 1 && texture == TextureKind::GaussianBlobs)
        throw BadConfig("SynthSpec: blob_count must be >= 1");
    if (poly_degree < 0 || poly_degree > 2)
        throw BadConfig("SynthSpec: poly_degree must be 0, 1 or 2");
    if (!(spatial_freq > 0.0) || !(temporal_freq >= 0.0))
        throw BadConfig("SynthSpec: wave frequencies must be positive");
    if (!(noise_sigma >= 0.0)) throw BadConfig("SynthSpec: noise_sigma must be >= 0");
}

SynthResult generate(const SynthSpec& spec, const Grid3& grid, FrameOrder order) {
    spec.validate();
    Lcg64 rng(spec.rng_seed);
    std::vector<Blob> blobs;
    if (spec.texture == TextureKind::GaussianBlobs)
        blobs = place_blobs(spec, grid, rng);

    SynthResult out;
    out.z.grid = grid;
    out.z.values.resize(grid.size());
    out.f.grid = grid;
    out.f.values.resize(grid.size());

    for_nodes(grid, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        const double tt = grid.t_of(t);
        const double x1 = grid.x1_of(i);
        const double x2 = grid.x2_of(j);
        out.z.values[p] = surface_height(spec, tt, x1, x2);
        out.f.values[p] = texture_value(spec, blobs, x1 - tt * spec.v1,
                                        x2 - tt * spec.v2);
    });

    if (spec.noise_sigma > 0.0) {
        // Sequential row-major Box-Muller stream so outputs are reproducible
        // independent of thread count.
        for (double& v : out.f.values) {
            const double u1 = 1.0 - rng.next_double();
            const double u2 = rng.next_double();
            const double n =
                std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
            v += spec.noise_sigma * n;
            if (v < 0.0) v = 0.0;
            if (v > 1.0) v = 1.0;
        }
    }

    for (double v : out.f.values)
        if (!(v >= 0.0 && v <= 1.0))
            throw BadConfig("generate: texture leaves [0,1]; adjust the "
                            "texture/motion configuration");

    const GeometryAtlas atlas = build_atlas(out.z, order);
    out.w_true.grid = grid;
    out.w_true.values.resize(grid.size());
    out.u_true.grid = grid;
    out.u_true.values.resize(grid.size());
    for_nodes(grid, [&](std::size_t p, std::size_t, std::size_t, std::size_t) {
        // coordinate velocity u^j = v^j; frame coordinates solve
        // alpha^j_i w^i = v^j (2x2 Cramer, frame-order agnostic)
        const double a11 = atlas.alpha_at(p, 1, 1), a12 = atlas.alpha_at(p, 1, 2);
        const double a21 = atlas.alpha_at(p, 2, 1), a22 = atlas.alpha_at(p, 2, 2);
        const double det = a11 * a22 - a12 * a21;
        out.w_true.values[p][0] = (spec.v1 * a22 - a12 * spec.v2) / det;
        out.w_true.values[p][1] = (a11 * spec.v2 - spec.v1 * a21) / det;
        for (int c = 0; c < 3; ++c)
            out.u_true.values[p][std::size_t(c)] =
                spec.v1 * atlas.dx1[p][std::size_t(c)] +
                spec.v2 * atlas.dx2[p][std::size_t(c)];
    });
    return out;
}

} // namespace evsurf
