#include "evsurf/kinematics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "evsurf/errors.hpp"
#include "evsurf/parallel.hpp"

namespace evsurf {

VectorField3 reconstruct_u(const FrameField& w, const GeometryAtlas& atlas) {
    const Grid3& g = atlas.grid;
    if (w.grid != g) throw DimMismatch("reconstruct_u: field/atlas grid mismatch");
    VectorField3 u;
    u.grid = g;
    u.values.resize(g.size());
    for_nodes(g, [&](std::size_t p, std::size_t, std::size_t, std::size_t) {
        // coordinate components u^j = sum_i w^i alpha^j_i
        double u1 = 0.0, u2 = 0.0;
        for (int fi = 1; fi <= 2; ++fi) {
            const double wi = w.values[p][std::size_t(fi - 1)];
            u1 += wi * atlas.alpha_at(p, 1, fi);
            u2 += wi * atlas.alpha_at(p, 2, fi);
        }
        for (int c = 0; c < 3; ++c)
            u.values[p][std::size_t(c)] =
                u1 * atlas.dx1[p][std::size_t(c)] + u2 * atlas.dx2[p][std::size_t(c)];
    });
    return u;
}

FrameField frame_coords(const VectorField3& u, const GeometryAtlas& atlas) {
    const Grid3& g = atlas.grid;
    if (u.grid != g) throw DimMismatch("frame_coords: field/atlas grid mismatch");
    FrameField w;
    w.grid = g;
    w.values.resize(g.size());
    for_nodes(g, [&](std::size_t p, std::size_t, std::size_t, std::size_t) {
        const auto& uv = u.values[p];
        // coordinate components via the inverse metric
        const double c1 = uv[0] * atlas.dx1[p][0] + uv[1] * atlas.dx1[p][1] +
                          uv[2] * atlas.dx1[p][2];
        const double c2 = uv[0] * atlas.dx2[p][0] + uv[1] * atlas.dx2[p][1] +
                          uv[2] * atlas.dx2[p][2];
        const double u1 = atlas.ginv_at(p, 1, 1) * c1 + atlas.ginv_at(p, 1, 2) * c2;
        const double u2 = atlas.ginv_at(p, 2, 1) * c1 + atlas.ginv_at(p, 2, 2) * c2;
        // solve alpha^j_i w^i = u^j (2x2, Cramer); the frame matrix is
        // triangular for either frame order but we stay order-agnostic.
        const double a11 = atlas.alpha_at(p, 1, 1), a12 = atlas.alpha_at(p, 1, 2);
        const double a21 = atlas.alpha_at(p, 2, 1), a22 = atlas.alpha_at(p, 2, 2);
        const double det = a11 * a22 - a12 * a21;
        if (std::abs(det) < 1e-300)
            throw DegenerateMetric("frame_coords: singular frame matrix");
        w.values[p][0] = (u1 * a22 - a12 * u2) / det;
        w.values[p][1] = (a11 * u2 - u1 * a21) / det;
    });
    return w;
}

VectorField3 total_velocity(const VectorField3& u, const GeometryAtlas& atlas) {
    const Grid3& g = atlas.grid;
    if (u.grid != g) throw DimMismatch("total_velocity: field/atlas grid mismatch");
    VectorField3 m;
    m.grid = g;
    m.values.resize(g.size());
    for_nodes(g, [&](std::size_t p, std::size_t, std::size_t, std::size_t) {
        for (int c = 0; c < 3; ++c)
            m.values[p][std::size_t(c)] =
                u.values[p][std::size_t(c)] + atlas.v[p][std::size_t(c)];
    });
    return m;
}

std::vector<ChartPoint> detect_seeds(const ScalarField3& f, std::size_t frame,
                                     double threshold) {
    const Grid3& g = f.grid;
    if (frame >= g.n0) throw DimMismatch("detect_seeds: frame out of range");
    std::vector<ChartPoint> seeds;
    for (std::size_t i = 1; i + 1 < g.n1; ++i) {
        for (std::size_t j = 1; j + 1 < g.n2; ++j) {
            const double v = f.at(frame, i, j);
            if (!(v > threshold)) continue;
            bool is_max = true;
            for (int di = -1; di <= 1 && is_max; ++di)
                for (int dj = -1; dj <= 1 && is_max; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    if (!(v > f.at(frame, i + std::size_t(std::ptrdiff_t(di)),
                                   j + std::size_t(std::ptrdiff_t(dj)))))
                        is_max = false;
                }
            if (is_max) seeds.push_back({double(i) * g.h1, double(j) * g.h2});
        }
    }
    return seeds;
}

namespace {

bool in_chart(const Grid3& g, double xi1, double xi2) {
    const double x1max = double(g.n1 - 1) * g.h1;
    const double x2max = double(g.n2 - 1) * g.h2;
    return xi1 >= 0.0 && xi1 <= x1max && xi2 >= 0.0 && xi2 <= x2max;
}

std::array<double, 3> sample_m(const VectorField3& m, std::size_t t, double xi1,
                               double xi2) {
    std::array<double, 3> out{};
    for (int c = 0; c < 3; ++c)
        out[std::size_t(c)] = bilinear_in_frame(
            m.grid,
            [&](std::size_t i, std::size_t j) {
                return m.values[m.grid.index(t, i, j)][std::size_t(c)];
            },
            xi1, xi2);
    return out;
}

} // namespace

std::vector<Trajectory> integrate_trajectories(const VectorField3& m,
                                               const HeightField& z,
                                               const std::vector<ChartPoint>& seeds,
                                               const TrajectoryConfig& cfg) {
    const Grid3& g = m.grid;
    if (z.grid != g) throw DimMismatch("integrate_trajectories: z/m grid mismatch");
    if (cfg.start_frame >= g.n0)
        throw BadConfig("integrate_trajectories: start_frame out of range");
    if (!(cfg.step > 0.0) || !std::isfinite(cfg.step))
        throw BadConfig("integrate_trajectories: step must be positive and finite");
    for (const ChartPoint& s : seeds)
        if (!in_chart(g, s.xi1, s.xi2))
            throw SeedOutOfDomain("integrate_trajectories: seed outside chart");

    std::vector<Trajectory> out(seeds.size());
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        Trajectory& tr = out[k];
        double xi1 = seeds[k].xi1, xi2 = seeds[k].xi2;
        double x3 = bilinear_in_frame(
            g,
            [&](std::size_t i, std::size_t j) {
                return z.at(cfg.start_frame, i, j);
            },
            xi1, xi2);
        tr.seed = {xi1, xi2, x3};
        tr.samples.push_back({cfg.start_frame, {xi1, xi2, x3}, xi1, xi2});
        for (std::size_t t = cfg.start_frame; t + 1 < g.n0; ++t) {
            std::array<double, 3> step{};
            if (cfg.integrator == Integrator::Euler) {
                const auto mv = sample_m(m, t, xi1, xi2);
                for (int c = 0; c < 3; ++c)
                    step[std::size_t(c)] = cfg.step * mv[std::size_t(c)];
            } else {
                // Classical RK4 in the chart within frame t; the velocity
                // field is sampled at intermediate chart points of the same
                // frame (frames are the time quantum of the data).
                auto eval = [&](double a, double b) -> std::array<double, 3> {
                    if (!in_chart(g, a, b)) return {NAN, NAN, NAN};
                    return sample_m(m, t, a, b);
                };
                const auto k1 = eval(xi1, xi2);
                const auto k2 = eval(xi1 + 0.5 * cfg.step * k1[0],
                                     xi2 + 0.5 * cfg.step * k1[1]);
                const auto k3 = eval(xi1 + 0.5 * cfg.step * k2[0],
                                     xi2 + 0.5 * cfg.step * k2[1]);
                const auto k4 =
                    eval(xi1 + cfg.step * k3[0], xi2 + cfg.step * k3[1]);
                for (int c = 0; c < 3; ++c) {
                    const auto ci = std::size_t(c);
                    step[ci] = cfg.step / 6.0 *
                               (k1[ci] + 2.0 * k2[ci] + 2.0 * k3[ci] + k4[ci]);
                }
            }
            const double nxi1 = xi1 + step[0];
            const double nxi2 = xi2 + step[1];
            const double nx3 = x3 + step[2];
            if (!std::isfinite(nxi1) || !std::isfinite(nxi2) ||
                !in_chart(g, nxi1, nxi2)) {
                tr.exited = true;
                break;
            }
            xi1 = nxi1;
            xi2 = nxi2;
            x3 = nx3;
            tr.samples.push_back({t + 1, {xi1, xi2, x3}, xi1, xi2});
        }
    }
    return out;
}

void write_trajectories_csv(const std::string& path,
                            const std::vector<Trajectory>& trajectories) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("write_trajectories_csv: cannot open " + path);
    out << "trajectory_id,frame,x1,x2,x3,xi1,xi2,exited\n";
    char buf[512];
    for (std::size_t k = 0; k < trajectories.size(); ++k) {
        const Trajectory& tr = trajectories[k];
        for (std::size_t s = 0; s < tr.samples.size(); ++s) {
            const auto& smp = tr.samples[s];
            const int exited =
                (tr.exited && s + 1 == tr.samples.size()) ? 1 : 0;
            std::snprintf(buf, sizeof buf,
                          "%zu,%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", k,
                          smp.frame, smp.x[0], smp.x[1], smp.x[2], smp.xi1,
                          smp.xi2, exited);
            out << buf;
        }
    }
    if (!out) throw IoFailure("write_trajectories_csv: write failed " + path);
}

} // namespace evsurf
