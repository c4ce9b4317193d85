// Closed-form test surfaces with exact derivative jets, plus the textbook
// closed-form expressions for the geometric quantities of a graph surface.
//
// Everything here is derived by hand from z(t,xi1,xi2) alone:
//   g11 = 1 + z1^2, g12 = z1 z2, g22 = 1 + z2^2, det = 1 + z1^2 + z2^2
//   Gamma^j_{ik}  = z_ik * (ginv^{j1} z_1 + ginv^{j2} z_2)
//   Gamma^j_{0i}  = ginv^{jk} * (z_ti z_k)
//   G_nu          = (z_1 z_{1 nu} + z_2 z_{2 nu}) / (2 det)
//   V             = (0, 0, z_t)
// These serve as an oracle route independent of the gridded finite-difference
// pipeline.
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>

#include "evsurf/fields.hpp"
#include "evsurf/grid.hpp"

namespace testsupport {

/// Value and first/second partial derivatives of a height function at a point.
struct SurfaceJet {
    double z = 0, zt = 0, z1 = 0, z2 = 0;
    double z11 = 0, z12 = 0, z22 = 0, zt1 = 0, zt2 = 0;
};

using SurfaceFn = std::function<SurfaceJet(double t, double x, double y)>;

inline SurfaceFn flat_surface() {
    return [](double, double, double) { return SurfaceJet{}; };
}

/// z = (xi1^2 + xi2^2) / 4, static.
inline SurfaceFn paraboloid_surface() {
    return [](double, double x, double y) {
        SurfaceJet s;
        s.z = 0.25 * (x * x + y * y);
        s.z1 = 0.5 * x;
        s.z2 = 0.5 * y;
        s.z11 = 0.5;
        s.z22 = 0.5;
        return s;
    };
}

/// z = t * xi1 (uniformly steepening tilt).
inline SurfaceFn moving_tilt_surface() {
    return [](double t, double x, double /*y*/) {
        SurfaceJet s;
        s.z = t * x;
        s.zt = x;
        s.z1 = t;
        s.zt1 = 1.0;
        return s;
    };
}

/// z = a*xi1 + b*xi2, static slanted plane (constant metric, g12 != 0).
inline SurfaceFn slant_surface(double a, double b) {
    return [a, b](double, double x, double y) {
        SurfaceJet s;
        s.z = a * x + b * y;
        s.z1 = a;
        s.z2 = b;
        return s;
    };
}

/// z = A sin(2 pi x) sin(2 pi y) (1 + sin(2 pi t)/2), A = 3/20.
inline SurfaceFn wave_surface() {
    return [](double t, double x, double y) {
        const double A = 0.15;
        const double pi2 = 2.0 * M_PI;
        const double sx = std::sin(pi2 * x), cx = std::cos(pi2 * x);
        const double sy = std::sin(pi2 * y), cy = std::cos(pi2 * y);
        const double mt = 1.0 + 0.5 * std::sin(pi2 * t);
        const double mt_t = 0.5 * pi2 * std::cos(pi2 * t);
        SurfaceJet s;
        s.z = A * sx * sy * mt;
        s.zt = A * sx * sy * mt_t;
        s.z1 = A * pi2 * cx * sy * mt;
        s.z2 = A * pi2 * sx * cy * mt;
        s.z11 = -A * pi2 * pi2 * sx * sy * mt;
        s.z12 = A * pi2 * pi2 * cx * cy * mt;
        s.z22 = -A * pi2 * pi2 * sx * sy * mt;
        s.zt1 = A * pi2 * cx * sy * mt_t;
        s.zt2 = A * pi2 * sx * cy * mt_t;
        return s;
    };
}

/// Sample a surface function onto a grid.
inline evsurf::HeightField sample_height(const SurfaceFn& fn,
                                         const evsurf::Grid3& g) {
    evsurf::HeightField z(g);
    for (std::size_t t = 0; t < g.n0; ++t)
        for (std::size_t i = 0; i < g.n1; ++i)
            for (std::size_t j = 0; j < g.n2; ++j)
                z.at(t, i, j) = fn(g.t_of(t), g.x1_of(i), g.x2_of(j)).z;
    return z;
}

/// Exact geometric quantities evaluated from a surface jet.
struct ExactGeometry {
    double g11, g12, g22, det, sqrtdet;
    double ginv11, ginv12, ginv22;
    double gamma[2][2][2];  // [j-1][i-1][k-1]
    double gamma0[2][2];    // [j-1][i-1]
    double bigg[3];         // nu in {0,1,2}
    std::array<double, 3> v;
};

inline ExactGeometry exact_geometry(const SurfaceJet& s) {
    ExactGeometry e;
    e.g11 = 1.0 + s.z1 * s.z1;
    e.g12 = s.z1 * s.z2;
    e.g22 = 1.0 + s.z2 * s.z2;
    e.det = e.g11 * e.g22 - e.g12 * e.g12;
    e.sqrtdet = std::sqrt(e.det);
    e.ginv11 = e.g22 / e.det;
    e.ginv12 = -e.g12 / e.det;
    e.ginv22 = e.g11 / e.det;

    const double zd[2] = {s.z1, s.z2};
    const double zdd[2][2] = {{s.z11, s.z12}, {s.z12, s.z22}};
    const double ginv[2][2] = {{e.ginv11, e.ginv12}, {e.ginv12, e.ginv22}};
    for (int j = 0; j < 2; ++j) {
        const double gz = ginv[j][0] * zd[0] + ginv[j][1] * zd[1];
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < 2; ++k) e.gamma[j][i][k] = zdd[i][k] * gz;
    }
    const double ztd[2] = {s.zt1, s.zt2};
    for (int j = 0; j < 2; ++j)
        for (int i = 0; i < 2; ++i)
            e.gamma0[j][i] =
                ginv[j][0] * (ztd[i] * zd[0]) + ginv[j][1] * (ztd[i] * zd[1]);

    e.bigg[0] = (s.z1 * s.zt1 + s.z2 * s.zt2) / (2.0 * e.det);
    e.bigg[1] = (s.z1 * s.z11 + s.z2 * s.z12) / (2.0 * e.det);
    e.bigg[2] = (s.z1 * s.z12 + s.z2 * s.z22) / (2.0 * e.det);
    e.v = {0.0, 0.0, s.zt};
    return e;
}

} // namespace testsupport
