// Velocity reconstruction and cell-trajectory integration.
//
// The solver's unknowns are frame coordinates w; this module turns them back
// into ambient tangential velocities u = w^i e_i, adds the surface velocity
// V to obtain the total motion m = u + V, and integrates trajectories
// through the gridded m field.
#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "evsurf/fields.hpp"
#include "evsurf/geometry.hpp"
#include "evsurf/grid.hpp"

namespace evsurf {

/// u = w^i e_i = (w^i alpha^j_i) dx_j, tangent by construction.
VectorField3 reconstruct_u(const FrameField& w, const GeometryAtlas& atlas);

/// Frame coordinates of an ambient tangent field (inverse of reconstruct_u):
/// coordinate components are recovered through the metric, then the 2x2
/// frame-coefficient matrix is inverted pointwise.
FrameField frame_coords(const VectorField3& u, const GeometryAtlas& atlas);

/// m = u + V componentwise.
VectorField3 total_velocity(const VectorField3& u, const GeometryAtlas& atlas);

/// Chart-domain point (xi1, xi2).
struct ChartPoint {
    double xi1 = 0.0, xi2 = 0.0;
};

/// Strict local maxima of frame `frame` over the 8 spatial neighbors with
/// value > threshold, in row-major (xi1-major) order.  Only points with a
/// full 8-neighborhood (spatially interior) qualify.
std::vector<ChartPoint> detect_seeds(const ScalarField3& f, std::size_t frame,
                                     double threshold);

enum class Integrator { Euler, Rk4 };

struct TrajectoryConfig {
    double step = 10.0;          ///< multiplier s on the sampled velocity
    std::size_t start_frame = 0; ///< first frame of integration
    /// Forward Euler is the reference scheme; Rk4 is an optional extra.
    Integrator integrator = Integrator::Euler;
};

struct Trajectory {
    struct Sample {
        std::size_t frame;
        std::array<double, 3> x; ///< ambient position
        double xi1, xi2;         ///< chart position
    };
    std::array<double, 3> seed{};
    std::vector<Sample> samples;
    bool exited = false; ///< integration left the chart and was truncated
};

/// Integrate gamma(t+1) = gamma(t) + s * m(t, gamma(t)) from each seed, one
/// step per frame transition, starting at cfg.start_frame.  m is sampled at
/// the current chart position by bilinear interpolation within the integer
/// frame; the chart position advances by the ambient step's (x1, x2)
/// components (identity chart of a graph surface).  Trajectories leaving the
/// chart are truncated and flagged.  The surface height supplies the seed's
/// third coordinate.  Throws SeedOutOfDomain for seeds outside the chart.
std::vector<Trajectory> integrate_trajectories(const VectorField3& m,
                                               const HeightField& z,
                                               const std::vector<ChartPoint>& seeds,
                                               const TrajectoryConfig& cfg);

/// CSV rows: trajectory_id,frame,x1,x2,x3,xi1,xi2,exited  (exited is 1 on the
/// final sample of a truncated trajectory, else 0); values use %.17g.
void write_trajectories_csv(const std::string& path,
                            const std::vector<Trajectory>& trajectories);

/// Bilinear interpolation of per-node values within one frame at chart point
/// (xi1, xi2); get(i, j) supplies nodal values.  Exposed for reuse/tests.
template <class Get>
double bilinear_in_frame(const Grid3& g, const Get& get, double xi1, double xi2) {
    double u = xi1 / g.h1, v = xi2 / g.h2;
    std::size_t i0 = u <= 0.0 ? 0 : std::size_t(u);
    std::size_t j0 = v <= 0.0 ? 0 : std::size_t(v);
    if (i0 > g.n1 - 2) i0 = g.n1 - 2;
    if (j0 > g.n2 - 2) j0 = g.n2 - 2;
    const double du = u - double(i0), dv = v - double(j0);
    return (1.0 - du) * ((1.0 - dv) * get(i0, j0) + dv * get(i0, j0 + 1)) +
           du * ((1.0 - dv) * get(i0 + 1, j0) + dv * get(i0 + 1, j0 + 1));
}

} // namespace evsurf
