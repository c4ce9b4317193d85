// Differential geometry of an evolving graph surface
//   x(t, xi1, xi2) = (xi1, xi2, z(t, xi1, xi2)),
// discretized on a Grid3.  All derivatives of gridded quantities use the
// shared finite-difference rules (central interior, one-sided boundary); each
// derived quantity is differenced as a grid function rather than by chaining
// analytic rules, so there is exactly one differentiation code path.
#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "evsurf/fields.hpp"
#include "evsurf/grid.hpp"

namespace evsurf {

/// Which coordinate vector seeds the Gram-Schmidt frame.  Dx1First is the
/// library default; Dx2First exists to test frame independence.
enum class FrameOrder { Dx1First, Dx2First };

/// Every geometric quantity the solver needs, tabulated per gridpoint.
///
/// Tensor components are packed per point:
///   g, ginv      : (g11, g12, g22) — symmetric 2x2
///   gamma        : Gamma^j_{ik}, slot (j-1)*3 + sym(i,k), sym 11->0 12->1 22->2
///   gamma0       : Gamma^j_{0i}, slot (j-1)*2 + (i-1)
///   alpha        : alpha^j_i (e_i = alpha^j_i dx_j), slot (j-1)*2 + (i-1)
///   gammaf       : frame symbols GammaF^j_{mu i}, mu in {0,1,2},
///                  slot ((j-1)*3 + mu)*2 + (i-1)
///   bigg         : G_nu = d_nu sqrt(det g) / (2 sqrt(det g)), nu in {0,1,2}
struct GeometryAtlas {
    Grid3 grid;
    FrameOrder frame_order = FrameOrder::Dx1First;

    std::vector<std::array<double, 3>> dx1, dx2, v, dtx1, dtx2;
    std::vector<std::array<double, 3>> g, ginv;
    std::vector<double> sqrtdetg;
    std::vector<std::array<double, 6>> gamma;
    std::vector<std::array<double, 4>> gamma0;
    std::vector<std::array<double, 4>> alpha;
    std::vector<std::array<double, 12>> gammaf;
    std::vector<std::array<double, 3>> normal;
    std::vector<std::array<double, 3>> bigg;

    static std::size_t sym_index(int i, int k) {
        return std::size_t(i + k - 2); // (1,1)->0, (1,2)/(2,1)->1, (2,2)->2
    }

    // Accessors take 1-based tensor indices (mu is 0-based: 0 = time).
    double gamma_at(std::size_t p, int j, int i, int k) const {
        return gamma[p][std::size_t(j - 1) * 3 + sym_index(i, k)];
    }
    double gamma0_at(std::size_t p, int j, int i) const {
        return gamma0[p][std::size_t(j - 1) * 2 + std::size_t(i - 1)];
    }
    double alpha_at(std::size_t p, int j, int i) const {
        return alpha[p][std::size_t(j - 1) * 2 + std::size_t(i - 1)];
    }
    double gammaf_at(std::size_t p, int j, int mu, int i) const {
        return gammaf[p][(std::size_t(j - 1) * 3 + std::size_t(mu)) * 2 +
                         std::size_t(i - 1)];
    }
    double g_at(std::size_t p, int i, int j) const {
        return g[p][sym_index(i, j)];
    }
    double ginv_at(std::size_t p, int i, int j) const {
        return ginv[p][sym_index(i, j)];
    }
};

// --- pointwise kernels (shared by the staged passes and by tests) -----------

struct MetricPoint {
    std::array<double, 3> g;    // (g11, g12, g22)
    std::array<double, 3> ginv;
    double sqrtdetg;
};

/// Metric of the basis {dx1, dx2}; throws DegenerateMetric if det g <= 1e-12.
MetricPoint metric_point(const std::array<double, 3>& dx1,
                         const std::array<double, 3>& dx2);

/// Gram-Schmidt frame coefficients from the metric alone.
std::array<double, 4> frame_point(const std::array<double, 3>& g,
                                  FrameOrder order);

/// Unit normal (dx1 x dx2)/|dx1 x dx2|; graph bases give positive x3.
std::array<double, 3> normal_point(const std::array<double, 3>& dx1,
                                   const std::array<double, 3>& dx2);

/// Tangent-plane projector P = I - N N^T, row-major 3x3.
std::array<double, 9> projector_of(const std::array<double, 3>& normal);

// --- staged atlas passes ------------------------------------------------------
// Each pass fills the fields named in its comment from the fields of earlier
// passes; build_atlas runs them all in order.

/// dx1 = (1,0,d1 z), dx2 = (0,1,d2 z), v = (0,0,dt z), dtx_i = (0,0,dti z).
void parametrization_derivatives(const HeightField& z, GeometryAtlas& atlas);

/// g_ij = dx_i . dx_j, exact 2x2 inverse, sqrt(det g).
void metric(GeometryAtlas& atlas);

/// Gamma^j_{ik} = 1/2 g^{mj} (d_i g_{km} + d_k g_{mi} - d_m g_{ik}),
/// spatial derivatives of the tabulated metric.
void christoffel(GeometryAtlas& atlas);

/// Gamma^j_{0i} = g^{jk} (dtx_i . dx_k).
void time_symbols(GeometryAtlas& atlas);

/// alpha^j_i such that e_i = alpha^j_i dx_j is orthonormal.
void orthonormal_frame(GeometryAtlas& atlas, FrameOrder order = FrameOrder::Dx1First);

/// GammaF^j_{ik} = alpha^h_j g_{hm} (alpha^l_i d_l alpha^m_k
///                                   + alpha^l_i alpha^n_k Gamma^m_{ln}),
/// GammaF^j_{0i} = alpha^h_j g_{hm} (dt alpha^m_i + alpha^k_i Gamma^m_{0k}).
void frame_symbols(GeometryAtlas& atlas);

/// Unit normals at every gridpoint.
void normal_and_projector(GeometryAtlas& atlas);

/// G_nu = d_nu sqrt(det g) / (2 sqrt(det g)), nu in {0 (time), 1, 2}.
void big_g(GeometryAtlas& atlas);

/// Run every pass on the height field.
GeometryAtlas build_atlas(const HeightField& z,
                          FrameOrder order = FrameOrder::Dx1First);

// --- covariant derivative -----------------------------------------------------

/// nabla_dir u = (dir^i d_i u^j + dir^i u^k Gamma^j_{ik}) dx_j for ambient
/// tangent fields u and dir given in R^3 coordinates.  Coordinate components
/// are recovered through the metric; u must be tangent to the surface
/// (|u . N| < 1e-8 |u| pointwise), otherwise NotTangent is thrown.
VectorField3 covariant_derivative(const VectorField3& u, const VectorField3& dir,
                                  const GeometryAtlas& atlas);

} // namespace evsurf
