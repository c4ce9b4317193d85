#include "evsurf/geometry.hpp"

#include <cmath>

#include "evsurf/errors.hpp"
#include "evsurf/fd.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

namespace {

constexpr double kDetEps = 1e-12;

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

} // namespace

MetricPoint metric_point(const std::array<double, 3>& dx1,
                         const std::array<double, 3>& dx2) {
    MetricPoint m;
    m.g = {dot3(dx1, dx1), dot3(dx1, dx2), dot3(dx2, dx2)};
    const double det = m.g[0] * m.g[2] - m.g[1] * m.g[1];
    if (det <= kDetEps)
        throw DegenerateMetric("metric: det g = " + std::to_string(det));
    m.ginv = {m.g[2] / det, -m.g[1] / det, m.g[0] / det};
    m.sqrtdetg = std::sqrt(det);
    return m;
}

std::array<double, 4> frame_point(const std::array<double, 3>& g,
                                  FrameOrder order) {
    const double g11 = g[0], g12 = g[1], g22 = g[2];
    const double det = g11 * g22 - g12 * g12;
    if (det <= kDetEps)
        throw DegenerateMetric("frame: det g = " + std::to_string(det));
    // slot (j-1)*2 + (i-1) holds alpha^j_i
    if (order == FrameOrder::Dx1First) {
        // e1 = dx1/|dx1|, e2 = (dx2 - (dx2.e1) e1)/|...|
        return {1.0 / std::sqrt(g11), -g12 / std::sqrt(g11 * det), //
                0.0, std::sqrt(g11 / det)};
    }
    // e1 = dx2/|dx2|, e2 = (dx1 - (dx1.e1) e1)/|...|
    return {0.0, std::sqrt(g22 / det), //
            1.0 / std::sqrt(g22), -g12 / std::sqrt(g22 * det)};
}

std::array<double, 3> normal_point(const std::array<double, 3>& dx1,
                                   const std::array<double, 3>& dx2) {
    std::array<double, 3> c = {dx1[1] * dx2[2] - dx1[2] * dx2[1],
                               dx1[2] * dx2[0] - dx1[0] * dx2[2],
                               dx1[0] * dx2[1] - dx1[1] * dx2[0]};
    const double norm = std::sqrt(dot3(c, c));
    if (norm * norm <= kDetEps) // |dx1 x dx2|^2 = det g for orthonormal ambient
        throw DegenerateMetric("normal: degenerate basis");
    return {c[0] / norm, c[1] / norm, c[2] / norm};
}

std::array<double, 9> projector_of(const std::array<double, 3>& n) {
    std::array<double, 9> p;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
            p[std::size_t(3 * r + c)] = (r == c ? 1.0 : 0.0) - n[std::size_t(r)] * n[std::size_t(c)];
    return p;
}

void parametrization_derivatives(const HeightField& z, GeometryAtlas& atlas) {
    const Grid3& g = z.grid;
    if (g.n0 < 2 || g.n1 < 3 || g.n2 < 3)
        throw GridTooSmall("parametrization_derivatives: need n0>=2, n1,n2>=3");
    atlas.grid = g;
    const std::size_t n = g.size();
    atlas.dx1.assign(n, {});
    atlas.dx2.assign(n, {});
    atlas.v.assign(n, {});
    atlas.dtx1.assign(n, {});
    atlas.dtx2.assign(n, {});

    // First differentiate z itself, then difference the gridded dz fields for
    // the mixed derivatives (single differentiation code path).
    std::vector<double> zt(n), z1(n), z2(n);
    for_nodes(g, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        zt[p] = diff1(z.values, g, 0, t, i, j);
        z1[p] = diff1(z.values, g, 1, t, i, j);
        z2[p] = diff1(z.values, g, 2, t, i, j);
    });
    for_nodes(g, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        atlas.dx1[p] = {1.0, 0.0, z1[p]};
        atlas.dx2[p] = {0.0, 1.0, z2[p]};
        atlas.v[p] = {0.0, 0.0, zt[p]};
        atlas.dtx1[p] = {0.0, 0.0, diff1(zt, g, 1, t, i, j)};
        atlas.dtx2[p] = {0.0, 0.0, diff1(zt, g, 2, t, i, j)};
    });
}

void metric(GeometryAtlas& atlas) {
    const std::size_t n = atlas.grid.size();
    atlas.g.assign(n, {});
    atlas.ginv.assign(n, {});
    atlas.sqrtdetg.assign(n, 0.0);
    parallel_for(0, n, [&](std::size_t p) {
        MetricPoint m = metric_point(atlas.dx1[p], atlas.dx2[p]);
        atlas.g[p] = m.g;
        atlas.ginv[p] = m.ginv;
        atlas.sqrtdetg[p] = m.sqrtdetg;
    });
}

void christoffel(GeometryAtlas& atlas) {
    const Grid3& gr = atlas.grid;
    atlas.gamma.assign(gr.size(), {});
    for_nodes(gr, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        // dg[a][s]: spatial derivative d_{a+1} of metric slot s (11,12,22)
        double dg[2][3];
        for (int a = 0; a < 2; ++a)
            for (std::size_t s = 0; s < 3; ++s)
                dg[a][s] = diff1_component(atlas.g, gr, s, a + 1, t, i, j);
        auto dgof = [&](int a, int r, int c) { // d_a g_{rc}, 1-based indices
            return dg[a - 1][GeometryAtlas::sym_index(r, c)];
        };
        for (int jj = 1; jj <= 2; ++jj)
            for (int ii = 1; ii <= 2; ++ii)
                for (int kk = ii; kk <= 2; ++kk) {
                    double s = 0.0;
                    for (int m = 1; m <= 2; ++m)
                        s += atlas.ginv_at(p, m, jj) *
                             (dgof(ii, kk, m) + dgof(kk, m, ii) - dgof(m, ii, kk));
                    atlas.gamma[p][std::size_t(jj - 1) * 3 +
                                   GeometryAtlas::sym_index(ii, kk)] = 0.5 * s;
                }
    });
}

void time_symbols(GeometryAtlas& atlas) {
    const std::size_t n = atlas.grid.size();
    atlas.gamma0.assign(n, {});
    parallel_for(0, n, [&](std::size_t p) {
        const std::array<double, 3>* dx[2] = {&atlas.dx1[p], &atlas.dx2[p]};
        const std::array<double, 3>* dtx[2] = {&atlas.dtx1[p], &atlas.dtx2[p]};
        for (int jj = 1; jj <= 2; ++jj)
            for (int ii = 1; ii <= 2; ++ii) {
                double s = 0.0;
                for (int k = 1; k <= 2; ++k)
                    s += atlas.ginv_at(p, jj, k) * dot3(*dtx[ii - 1], *dx[k - 1]);
                atlas.gamma0[p][std::size_t(jj - 1) * 2 + std::size_t(ii - 1)] = s;
            }
    });
}

void orthonormal_frame(GeometryAtlas& atlas, FrameOrder order) {
    atlas.frame_order = order;
    const std::size_t n = atlas.grid.size();
    atlas.alpha.assign(n, {});
    parallel_for(0, n,
                 [&](std::size_t p) { atlas.alpha[p] = frame_point(atlas.g[p], order); });
}

void frame_symbols(GeometryAtlas& atlas) {
    const Grid3& gr = atlas.grid;
    atlas.gammaf.assign(gr.size(), {});
    for_nodes(gr, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        // da[axis][slot]: derivative along axis (0=t,1,2) of alpha slot
        double da[3][4];
        for (int a = 0; a < 3; ++a)
            for (std::size_t s = 0; s < 4; ++s)
                da[a][s] = diff1_component(atlas.alpha, gr, s, a, t, i, j);
        auto daof = [&](int axis, int m, int k) { // d_axis alpha^m_k
            return da[axis][std::size_t(m - 1) * 2 + std::size_t(k - 1)];
        };
        for (int jj = 1; jj <= 2; ++jj)
            for (int mu = 0; mu <= 2; ++mu)
                for (int ii = 1; ii <= 2; ++ii) {
                    double s = 0.0;
                    for (int h = 1; h <= 2; ++h)
                        for (int m = 1; m <= 2; ++m) {
                            double inner;
                            if (mu == 0) {
                                // dt alpha^m_i + alpha^k_i Gamma^m_{0k}
                                inner = daof(0, m, ii);
                                for (int k = 1; k <= 2; ++k)
                                    inner += atlas.alpha_at(p, k, ii) *
                                             atlas.gamma0_at(p, m, k);
                            } else {
                                // alpha^l_mu d_l alpha^m_i + alpha^l_mu alpha^n_i Gamma^m_{ln}
                                inner = 0.0;
                                for (int l = 1; l <= 2; ++l) {
                                    inner += atlas.alpha_at(p, l, mu) * daof(l, m, ii);
                                    for (int nn = 1; nn <= 2; ++nn)
                                        inner += atlas.alpha_at(p, l, mu) *
                                                 atlas.alpha_at(p, nn, ii) *
                                                 atlas.gamma_at(p, m, l, nn);
                                }
                            }
                            s += atlas.alpha_at(p, h, jj) * atlas.g_at(p, h, m) * inner;
                        }
                    atlas.gammaf[p][(std::size_t(jj - 1) * 3 + std::size_t(mu)) * 2 +
                                    std::size_t(ii - 1)] = s;
                }
    });
}

void normal_and_projector(GeometryAtlas& atlas) {
    const std::size_t n = atlas.grid.size();
    atlas.normal.assign(n, {});
    parallel_for(0, n, [&](std::size_t p) {
        atlas.normal[p] = normal_point(atlas.dx1[p], atlas.dx2[p]);
    });
}

void big_g(GeometryAtlas& atlas) {
    const Grid3& gr = atlas.grid;
    atlas.bigg.assign(gr.size(), {});
    for_nodes(gr, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        const double s2 = 2.0 * atlas.sqrtdetg[p];
        for (int nu = 0; nu <= 2; ++nu)
            atlas.bigg[p][std::size_t(nu)] =
                diff1(atlas.sqrtdetg, gr, nu, t, i, j) / s2;
    });
}

GeometryAtlas build_atlas(const HeightField& z, FrameOrder order) {
    GeometryAtlas atlas;
    parametrization_derivatives(z, atlas);
    metric(atlas);
    christoffel(atlas);
    time_symbols(atlas);
    orthonormal_frame(atlas, order);
    frame_symbols(atlas);
    normal_and_projector(atlas);
    big_g(atlas);
    return atlas;
}

VectorField3 covariant_derivative(const VectorField3& u, const VectorField3& dir,
                                  const GeometryAtlas& atlas) {
    const Grid3& gr = atlas.grid;
    if (u.grid != gr || dir.grid != gr)
        throw DimMismatch("covariant_derivative: field/atlas grid mismatch");

    const std::size_t n = gr.size();
    // Coordinate components: solve g [c1 c2]^T = [u.dx1, u.dx2]^T via ginv.
    std::vector<std::array<double, 2>> uc(n), dc(n);
    parallel_for(0, n, [&](std::size_t p) {
        const double un = dot3(u.values[p], atlas.normal[p]);
        const double umag = std::sqrt(dot3(u.values[p], u.values[p]));
        if (std::abs(un) >= 1e-8 * umag && umag > 0.0)
            throw NotTangent("covariant_derivative: u has a normal component");
        const double b1 = dot3(u.values[p], atlas.dx1[p]);
        const double b2 = dot3(u.values[p], atlas.dx2[p]);
        uc[p] = {atlas.ginv_at(p, 1, 1) * b1 + atlas.ginv_at(p, 1, 2) * b2,
                 atlas.ginv_at(p, 2, 1) * b1 + atlas.ginv_at(p, 2, 2) * b2};
        const double e1 = dot3(dir.values[p], atlas.dx1[p]);
        const double e2 = dot3(dir.values[p], atlas.dx2[p]);
        dc[p] = {atlas.ginv_at(p, 1, 1) * e1 + atlas.ginv_at(p, 1, 2) * e2,
                 atlas.ginv_at(p, 2, 1) * e1 + atlas.ginv_at(p, 2, 2) * e2};
    });

    VectorField3 out(gr);
    for_nodes(gr, [&](std::size_t p, std::size_t t, std::size_t i, std::size_t j) {
        double res[2]; // (nabla_dir u)^j, coordinate components
        for (int jj = 1; jj <= 2; ++jj) {
            double s = 0.0;
            for (int ii = 1; ii <= 2; ++ii) {
                s += dc[p][std::size_t(ii - 1)] *
                     diff1_component(uc, gr, std::size_t(jj - 1), ii, t, i, j);
                for (int k = 1; k <= 2; ++k)
                    s += dc[p][std::size_t(ii - 1)] * uc[p][std::size_t(k - 1)] *
                         atlas.gamma_at(p, jj, ii, k);
            }
            res[jj - 1] = s;
        }
        for (int c = 0; c < 3; ++c)
            out.values[p][std::size_t(c)] =
                res[0] * atlas.dx1[p][std::size_t(c)] + res[1] * atlas.dx2[p][std::size_t(c)];
    });
    return out;
}

} // namespace evsurf
