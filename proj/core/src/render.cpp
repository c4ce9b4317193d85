#include "evsurf/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "evsurf/errors.hpp"

namespace evsurf {

VectorField2 scaled_projection(const VectorField3& u, std::size_t frame) {
    const Grid3& g = u.grid;
    if (frame >= g.n0) throw DimMismatch("scaled_projection: frame out of range");
    VectorField2 out;
    out.n1 = g.n1;
    out.n2 = g.n2;
    out.values.resize(g.frame_size());
    for (std::size_t i = 0; i < g.n1; ++i) {
        for (std::size_t j = 0; j < g.n2; ++j) {
            const auto& v = u.values[g.index(frame, i, j)];
            const double proj = std::hypot(v[0], v[1]);
            if (proj < 1e-14) {
                out.values[i * g.n2 + j] = {0.0, 0.0};
            } else {
                const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
                const double s = len / proj;
                out.values[i * g.n2 + j] = {s * v[0], s * v[1]};
            }
        }
    }
    return out;
}

std::array<std::array<double, 3>, 55> make_colorwheel() {
    constexpr int RY = 15, YG = 6, GC = 4, CB = 11, BM = 13, MR = 6;
    std::array<std::array<double, 3>, 55> wheel{};
    int col = 0;
    for (int i = 0; i < RY; ++i, ++col)
        wheel[std::size_t(col)] = {255.0, std::floor(255.0 * i / RY), 0.0};
    for (int i = 0; i < YG; ++i, ++col)
        wheel[std::size_t(col)] = {255.0 - std::floor(255.0 * i / YG), 255.0, 0.0};
    for (int i = 0; i < GC; ++i, ++col)
        wheel[std::size_t(col)] = {0.0, 255.0, std::floor(255.0 * i / GC)};
    for (int i = 0; i < CB; ++i, ++col)
        wheel[std::size_t(col)] = {0.0, 255.0 - std::floor(255.0 * i / CB), 255.0};
    for (int i = 0; i < BM; ++i, ++col)
        wheel[std::size_t(col)] = {std::floor(255.0 * i / BM), 0.0, 255.0};
    for (int i = 0; i < MR; ++i, ++col)
        wheel[std::size_t(col)] = {255.0, 0.0, 255.0 - std::floor(255.0 * i / MR)};
    return wheel;
}

std::vector<double> magnitudes(const VectorField2& f) {
    std::vector<double> out(f.values.size());
    for (std::size_t p = 0; p < f.values.size(); ++p)
        out[p] = std::hypot(f.values[p][0], f.values[p][1]);
    return out;
}

double percentile_99(std::vector<double> mags) {
    if (mags.empty()) return 0.0;
    std::sort(mags.begin(), mags.end());
    const std::size_t k =
        std::size_t(std::ceil(0.99 * double(mags.size())));
    return mags[std::max<std::size_t>(k, 1) - 1];
}

FlowImage colorize(const VectorField2& f, std::optional<double> max_magnitude) {
    const auto wheel = make_colorwheel();
    constexpr int ncols = 55;
    const double maxm =
        max_magnitude ? *max_magnitude : percentile_99(magnitudes(f));

    FlowImage img;
    img.width = f.n2;
    img.height = f.n1;
    img.rgb.resize(3 * f.n1 * f.n2);
    for (std::size_t p = 0; p < f.values.size(); ++p) {
        const double u = f.values[p][0], v = f.values[p][1];
        const double mag = std::hypot(u, v);
        const double rad = maxm > 0.0 ? std::min(1.0, mag / maxm) : 0.0;
        const double a = std::atan2(-v, -u) / std::numbers::pi;
        const double fk = (a + 1.0) / 2.0 * (ncols - 1);
        const int k0 = int(std::floor(fk));
        const int k1 = (k0 + 1) % ncols;
        const double ff = fk - double(k0);
        for (std::size_t c = 0; c < 3; ++c) {
            double col = ((1.0 - ff) * wheel[std::size_t(k0)][c] +
                          ff * wheel[std::size_t(k1)][c]) /
                         255.0;
            col = 1.0 - rad * (1.0 - col);
            img.rgb[3 * p + c] = std::uint8_t(std::floor(255.0 * col));
        }
    }
    return img;
}

void write_ppm(const FlowImage& image, const std::string& path) {
    if (image.rgb.size() != 3 * image.width * image.height)
        throw DimMismatch("write_ppm: payload size inconsistent with extents");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("write_ppm: cannot open " + path);
    char header[64];
    const int n = std::snprintf(header, sizeof header, "P6\n%zu %zu\n255\n",
                                image.width, image.height);
    out.write(header, n);
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              std::streamsize(image.rgb.size()));
    if (!out) throw IoFailure("write_ppm: write failed " + path);
}

std::string frame_filename(std::size_t frame) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "flow_%04zu.ppm", frame);
    return std::string(buf);
}

} // namespace evsurf
