#include "evsurf/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include "evsurf/errors.hpp"
#include "evsurf/solver.hpp"

namespace evsurf {

VoxelVolume Volume4::frame(std::size_t t) const {
    if (t >= nt) throw DimMismatch("Volume4::frame: frame out of range");
    VoxelVolume out;
    out.nx = nx;
    out.ny = ny;
    out.nz = nz;
    const std::size_t fs = nx * ny * nz;
    out.values.assign(values.begin() + std::ptrdiff_t(t * fs),
                      values.begin() + std::ptrdiff_t((t + 1) * fs));
    return out;
}

namespace {

// Half-sample reflection: ..., v[1], v[0] | v[0], v[1], ..., v[n-1] | v[n-1], ...
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) {
    const std::ptrdiff_t nn = std::ptrdiff_t(n);
    while (i < 0 || i >= nn) {
        if (i < 0) i = -1 - i;
        if (i >= nn) i = 2 * nn - 1 - i;
    }
    return std::size_t(i);
}

std::vector<double> gaussian_kernel(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw BadSigma("gaussian_filter3: sigma must be positive and finite");
    const std::ptrdiff_t r = std::ptrdiff_t(std::ceil(4.0 * sigma));
    std::vector<double> k(std::size_t(2 * r + 1));
    double sum = 0.0;
    for (std::ptrdiff_t d = -r; d <= r; ++d) {
        const double w = std::exp(-double(d * d) / (2.0 * sigma * sigma));
        k[std::size_t(d + r)] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

// Convolve along one axis; the (outer, line, axis) strides select the axis.
void convolve_axis(std::vector<double>& values, std::size_t n_axis,
                   std::size_t stride, std::size_t n_lines,
                   std::size_t line_stride, std::size_t n_outer,
                   std::size_t outer_stride, const std::vector<double>& kernel) {
    const std::ptrdiff_t r = (std::ptrdiff_t(kernel.size()) - 1) / 2;
    std::vector<double> line(n_axis);
    for (std::size_t o = 0; o < n_outer; ++o) {
        for (std::size_t l = 0; l < n_lines; ++l) {
            const std::size_t base = o * outer_stride + l * line_stride;
            for (std::size_t a = 0; a < n_axis; ++a)
                line[a] = values[base + a * stride];
            for (std::size_t a = 0; a < n_axis; ++a) {
                double acc = 0.0;
                for (std::ptrdiff_t d = -r; d <= r; ++d) {
                    const std::size_t src =
                        reflect_index(std::ptrdiff_t(a) + d, n_axis);
                    acc += kernel[std::size_t(d + r)] * line[src];
                }
                values[base + a * stride] = acc;
            }
        }
    }
}

} // namespace

VoxelVolume gaussian_filter3(const VoxelVolume& v,
                             const std::array<double, 3>& sigma) {
    if (v.nx == 0 || v.ny == 0 || v.nz == 0 ||
        v.values.size() != v.nx * v.ny * v.nz)
        throw DimMismatch("gaussian_filter3: inconsistent volume extents");
    VoxelVolume out = v;
    // x axis: contiguous (iy, iz) lines
    convolve_axis(out.values, v.nx, v.ny * v.nz, v.ny * v.nz, 1, 1, 0,
                  gaussian_kernel(sigma[0]));
    // y axis: iz lines within each ix slab
    convolve_axis(out.values, v.ny, v.nz, v.nz, 1, v.nx, v.ny * v.nz,
                  gaussian_kernel(sigma[1]));
    // z axis: iy lines (bases nz apart) within each ix slab
    convolve_axis(out.values, v.nz, 1, v.ny, v.nz, v.nx, v.ny * v.nz,
                  gaussian_kernel(sigma[2]));
    return out;
}

std::vector<CellCenter> detect_cells(const VoxelVolume& v, double threshold,
                                     const std::array<double, 3>& voxel_size) {
    std::vector<CellCenter> out;
    if (v.nx < 3 || v.ny < 3 || v.nz < 3) return out;
    for (std::size_t ix = 1; ix + 1 < v.nx; ++ix) {
        for (std::size_t iy = 1; iy + 1 < v.ny; ++iy) {
            for (std::size_t iz = 1; iz + 1 < v.nz; ++iz) {
                const double val = v.at(ix, iy, iz);
                if (!(val > threshold)) continue;
                bool is_max = true;
                for (int dx = -1; dx <= 1 && is_max; ++dx)
                    for (int dy = -1; dy <= 1 && is_max; ++dy)
                        for (int dz = -1; dz <= 1 && is_max; ++dz) {
                            if (dx == 0 && dy == 0 && dz == 0) continue;
                            const double nb = v.at(
                                ix + std::size_t(std::ptrdiff_t(dx)),
                                iy + std::size_t(std::ptrdiff_t(dy)),
                                iz + std::size_t(std::ptrdiff_t(dz)));
                            if (!(val > nb)) is_max = false;
                        }
                if (is_max)
                    out.push_back({double(ix) * voxel_size[0],
                                   double(iy) * voxel_size[1],
                                   double(iz) * voxel_size[2], val});
            }
        }
    }
    return out;
}

namespace {

struct BilinearCell {
    std::size_t node[4];
    double weight[4];
};

// Bilinear weights of a chart point on the n1 x n2 fit grid (xi1 spacing
// 1/(n1-1), equal xi2 spacing).
BilinearCell locate(double xi1, double xi2, std::size_t n1, std::size_t n2) {
    const double h = 1.0 / double(n1 - 1);
    double u = xi1 / h, v = xi2 / h;
    std::size_t i0 = u <= 0.0 ? 0 : std::size_t(u);
    std::size_t j0 = v <= 0.0 ? 0 : std::size_t(v);
    if (i0 > n1 - 2) i0 = n1 - 2;
    if (j0 > n2 - 2) j0 = n2 - 2;
    const double du = u - double(i0), dv = v - double(j0);
    BilinearCell c;
    c.node[0] = i0 * n2 + j0;
    c.node[1] = i0 * n2 + j0 + 1;
    c.node[2] = (i0 + 1) * n2 + j0;
    c.node[3] = (i0 + 1) * n2 + j0 + 1;
    c.weight[0] = (1.0 - du) * (1.0 - dv);
    c.weight[1] = (1.0 - du) * dv;
    c.weight[2] = du * (1.0 - dv);
    c.weight[3] = du * dv;
    return c;
}

} // namespace

std::vector<double> fit_surface(const std::vector<ChartCenter>& centers,
                                const FitConfig& cfg) {
    if (!(cfg.reg_weight > 0.0))
        throw SingularFit("fit_surface: reg_weight must be > 0 (the data term "
                          "alone does not determine every node)");
    if (centers.empty())
        throw NoCenters("fit_surface: no centers to fit");
    if (cfg.grid_n1 < 2 || cfg.grid_n2 < 2)
        throw GridTooSmall("fit_surface: fit grid needs at least 2x2 nodes");

    const std::size_t n1 = cfg.grid_n1, n2 = cfg.grid_n2, n = n1 * n2;
    // dense-per-row accumulation would be wasteful; keep small coefficient
    // lists per row (<= 4 Laplacian neighbors + bilinear couplings)
    std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(n);
    std::vector<double> rhs(n, 0.0);
    auto add = [&](std::size_t r, std::size_t c, double val) {
        auto& row = rows[r];
        for (auto& e : row)
            if (e.first == std::uint32_t(c)) {
                e.second += val;
                return;
            }
        row.emplace_back(std::uint32_t(c), val);
    };

    const double mu = cfg.reg_weight;
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const std::size_t p = i * n2 + j;
            if (i + 1 < n1) {
                const std::size_t q = (i + 1) * n2 + j;
                add(p, p, mu);
                add(q, q, mu);
                add(p, q, -mu);
                add(q, p, -mu);
            }
            if (j + 1 < n2) {
                const std::size_t q = i * n2 + j + 1;
                add(p, p, mu);
                add(q, q, mu);
                add(p, q, -mu);
                add(q, p, -mu);
            }
        }
    }
    for (const ChartCenter& c : centers) {
        const BilinearCell cell = locate(c.xi1, c.xi2, n1, n2);
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b)
                add(cell.node[a], cell.node[b],
                    cell.weight[a] * cell.weight[b]);
            rhs[cell.node[a]] += cell.weight[a] * c.height;
        }
    }

    SparseSystem sys;
    sys.nrows = n;
    sys.row_ptr.assign(n + 1, 0);
    for (std::size_t r = 0; r < n; ++r) {
        auto& row = rows[r];
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        sys.row_ptr[r + 1] = sys.row_ptr[r] + row.size();
    }
    sys.col.reserve(sys.row_ptr[n]);
    sys.val.reserve(sys.row_ptr[n]);
    for (std::size_t r = 0; r < n; ++r)
        for (const auto& e : rows[r]) {
            sys.col.push_back(e.first);
            sys.val.push_back(e.second);
        }
    sys.rhs = rhs;

    SolverConfig scfg;
    scfg.rel_tol = 1e-12;
    scfg.max_iters = 20000;
    scfg.restart = std::min<std::size_t>(n, 150);
    const SolveResult res = gmres(sys, scfg);
    if (!res.converged)
        throw SingularFit("fit_surface: normal equations failed to converge");
    return res.x;
}

SampledFrame sample_intensity(const VoxelVolume& v,
                              const std::vector<double>& z_chart,
                              std::size_t n1, std::size_t n2,
                              const std::array<double, 3>& voxel_size) {
    if (z_chart.size() != n1 * n2)
        throw DimMismatch("sample_intensity: height field size mismatch");
    if (v.nx < 2 || v.ny < 2 || v.nz < 2)
        throw GridTooSmall("sample_intensity: volume needs >= 2 voxels per axis");
    SampledFrame out;
    out.f.resize(n1 * n2);
    const double lx = double(v.nx - 1) * voxel_size[0];
    for (std::size_t i = 0; i < n1; ++i) {
        for (std::size_t j = 0; j < n2; ++j) {
            const double vx = double(i) * double(v.nx - 1) / double(n1 - 1);
            const double vy = double(j) * double(v.ny - 1) / double(n2 - 1);
            double vz = z_chart[i * n2 + j] * lx / voxel_size[2];
            if (vz < 0.0) {
                vz = 0.0;
                ++out.clamped;
            } else if (vz > double(v.nz - 1)) {
                vz = double(v.nz - 1);
                ++out.clamped;
            }
            auto cell1d = [](double c, std::size_t nmax) {
                std::size_t c0 = c <= 0.0 ? 0 : std::size_t(c);
                if (c0 > nmax - 2) c0 = nmax - 2;
                return std::pair<std::size_t, double>(c0, c - double(c0));
            };
            const auto [x0, dx] = cell1d(vx, v.nx);
            const auto [y0, dy] = cell1d(vy, v.ny);
            const auto [z0, dz] = cell1d(vz, v.nz);
            double acc = 0.0;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int c = 0; c < 2; ++c) {
                        const double w = (a ? dx : 1.0 - dx) *
                                         (b ? dy : 1.0 - dy) *
                                         (c ? dz : 1.0 - dz);
                        acc += w * v.at(x0 + std::size_t(a), y0 + std::size_t(b),
                                        z0 + std::size_t(c));
                    }
            if (acc < 0.0) acc = 0.0;
            if (acc > 1.0) acc = 1.0;
            out.f[i * n2 + j] = acc;
        }
    }
    return out;
}

PreprocessResult preprocess(const Volume4& volume, const PreprocessConfig& cfg) {
    if (volume.nt < 2 || volume.nx < 2 || volume.ny < 2 || volume.nz < 2)
        throw GridTooSmall("preprocess: volume needs >= 2 samples per axis");
    if (volume.values.size() != volume.size())
        throw DimMismatch("preprocess: payload inconsistent with extents");
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
        throw BadConfig("preprocess: threshold must lie in (0,1)");
    const std::size_t n1 = cfg.fit.grid_n1, n2 = cfg.fit.grid_n2;
    const Grid3 grid(volume.nt, n1, n2, 1.0 / double(volume.nt - 1),
                     1.0 / double(n1 - 1), 1.0 / double(n1 - 1));

    PreprocessResult out;
    out.z.grid = grid;
    out.z.values.resize(grid.size());
    out.f.grid = grid;
    out.f.values.resize(grid.size());
    out.centers.resize(volume.nt);

    const double lx = double(volume.nx - 1) * cfg.voxel_size[0];
    const double ly = double(volume.ny - 1) * cfg.voxel_size[1];
    const double x2max = double(n2 - 1) * grid.h2;

    for (std::size_t t = 0; t < volume.nt; ++t) {
        const VoxelVolume smoothed = gaussian_filter3(volume.frame(t), cfg.sigma);
        out.centers[t] = detect_cells(smoothed, cfg.threshold, cfg.voxel_size);

        std::vector<double> z_frame;
        if (out.centers[t].empty()) {
            if (!cfg.allow_empty_frames)
                throw NoCenters("preprocess: no cell centers in a frame");
            z_frame.assign(n1 * n2, 0.0);
        } else {
            std::vector<ChartCenter> chart;
            chart.reserve(out.centers[t].size());
            for (const CellCenter& c : out.centers[t])
                chart.push_back({c.x / lx, c.y / ly * x2max, c.z / lx});
            z_frame = fit_surface(chart, cfg.fit);
        }

        const SampledFrame sampled =
            sample_intensity(smoothed, z_frame, n1, n2, cfg.voxel_size);
        out.clamped_samples += sampled.clamped;
        const std::size_t base = grid.index(t, 0, 0);
        std::copy(z_frame.begin(), z_frame.end(),
                  out.z.values.begin() + std::ptrdiff_t(base));
        std::copy(sampled.f.begin(), sampled.f.end(),
                  out.f.values.begin() + std::ptrdiff_t(base));
    }
    return out;
}

void write_centers_csv(const std::string& path,
                       const std::vector<std::vector<CellCenter>>& centers) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("write_centers_csv: cannot open " + path);
    out << "frame,x,y,z,intensity\n";
    char buf[256];
    for (std::size_t t = 0; t < centers.size(); ++t)
        for (const CellCenter& c : centers[t]) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", t,
                          c.x, c.y, c.z, c.intensity);
            out << buf;
        }
    if (!out) throw IoFailure("write_centers_csv: write failed " + path);
}

} // namespace evsurf
