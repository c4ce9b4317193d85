#include "evsurf/evsf.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "evsurf/errors.hpp"

namespace evsurf {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'S', 'F'};
constexpr std::uint8_t kVersion = 1;
constexpr std::uint8_t kDtypeFloat64 = 1;

static_assert(std::endian::native == std::endian::little,
              "serialization below assumes a little-endian host");
static_assert(sizeof(double) == 8 && std::numeric_limits<double>::is_iec559,
              "payload format requires IEEE-754 binary64");

void put_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v),
                          static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(const unsigned char* b) {
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

} // namespace

std::size_t EvsfArray::element_count() const {
    std::size_t n = 1;
    for (std::uint32_t d : dims) n *= d;
    return dims.empty() ? 0 : n;
}

void write_evsf(const std::string& path, const std::vector<std::uint32_t>& dims,
                const std::vector<double>& values) {
    if (dims.empty() || dims.size() > 255)
        throw DimMismatch("write_evsf: ndim must be in [1, 255]");
    std::size_t n = 1;
    for (std::uint32_t d : dims) {
        if (d == 0) throw DimMismatch("write_evsf: zero extent");
        n *= d;
    }
    if (n != values.size())
        throw DimMismatch("write_evsf: extent product " + std::to_string(n) +
                          " != value count " + std::to_string(values.size()));
    for (double v : values)
        if (!std::isfinite(v))
            throw NonFiniteValue("write_evsf: non-finite payload value");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("write_evsf: cannot open " + path);
    out.write(kMagic, 4);
    const unsigned char head[4] = {kVersion, kDtypeFloat64, 0, 0};
    out.write(reinterpret_cast<const char*>(head), 4);
    const unsigned char ndim = static_cast<unsigned char>(dims.size());
    out.write(reinterpret_cast<const char*>(&ndim), 1);
    for (std::uint32_t d : dims) put_u32(out, d);
    out.write(reinterpret_cast<const char*>(values.data()),
              std::streamsize(values.size() * sizeof(double)));
    out.flush();
    if (!out) throw IoFailure("write_evsf: write failed for " + path);
}

EvsfArray read_evsf(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("read_evsf: cannot open " + path);

    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        throw BadMagic("read_evsf: bad magic in " + path);

    unsigned char head[5]; // version, dtype, 2 reserved, ndim
    in.read(reinterpret_cast<char*>(head), 5);
    if (in.gcount() != 5)
        throw TruncatedPayload("read_evsf: truncated header in " + path);
    if (head[0] != kVersion)
        throw UnsupportedVersion("read_evsf: version " +
                                 std::to_string(head[0]) + " in " + path);
    if (head[1] != kDtypeFloat64)
        throw UnsupportedVersion("read_evsf: element type " +
                                 std::to_string(head[1]) + " in " + path);
    const std::size_t ndim = head[4];
    if (ndim == 0)
        throw TruncatedPayload("read_evsf: zero-dimensional header in " + path);

    EvsfArray arr;
    arr.dims.resize(ndim);
    std::vector<unsigned char> dimbuf(4 * ndim);
    in.read(reinterpret_cast<char*>(dimbuf.data()), std::streamsize(dimbuf.size()));
    if (std::size_t(in.gcount()) != dimbuf.size())
        throw TruncatedPayload("read_evsf: truncated extents in " + path);
    std::size_t n = 1;
    for (std::size_t k = 0; k < ndim; ++k) {
        arr.dims[k] = get_u32(&dimbuf[4 * k]);
        if (arr.dims[k] == 0)
            throw TruncatedPayload("read_evsf: zero extent in " + path);
        n *= arr.dims[k];
    }

    arr.values.resize(n);
    in.read(reinterpret_cast<char*>(arr.values.data()),
            std::streamsize(n * sizeof(double)));
    if (std::size_t(in.gcount()) != n * sizeof(double))
        throw TruncatedPayload("read_evsf: payload shorter than extents in " +
                               path);
    // Exactly one payload; trailing bytes mean the extents lied.
    char extra;
    if (in.read(&extra, 1); in.gcount() != 0)
        throw TruncatedPayload("read_evsf: payload longer than extents in " +
                               path);
    for (double v : arr.values)
        if (!std::isfinite(v))
            throw NonFiniteValue("read_evsf: non-finite value in " + path);
    return arr;
}

namespace {

Grid3 grid_from_dims(const std::uint32_t* d, double h0, double h1, double h2) {
    return Grid3(d[0], d[1], d[2], h0, h1, h2);
}

} // namespace

void write_scalar_field(const std::string& path, const ScalarField3& f) {
    write_evsf(path,
               {std::uint32_t(f.grid.n0), std::uint32_t(f.grid.n1),
                std::uint32_t(f.grid.n2)},
               f.values);
}

ScalarField3 read_scalar_field(const std::string& path, double h0, double h1,
                               double h2) {
    EvsfArray arr = read_evsf(path);
    if (arr.dims.size() != 3)
        throw DimMismatch("read_scalar_field: expected 3-D array in " + path);
    ScalarField3 f;
    f.grid = grid_from_dims(arr.dims.data(), h0, h1, h2);
    f.values = std::move(arr.values);
    return f;
}

void write_frame_field(const std::string& path, const FrameField& f) {
    const std::size_t n = f.grid.size();
    std::vector<double> flat(2 * n);
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < n; ++p) flat[c * n + p] = f.values[p][c];
    write_evsf(path,
               {2u, std::uint32_t(f.grid.n0), std::uint32_t(f.grid.n1),
                std::uint32_t(f.grid.n2)},
               flat);
}

FrameField read_frame_field(const std::string& path, double h0, double h1,
                            double h2) {
    EvsfArray arr = read_evsf(path);
    if (arr.dims.size() != 4 || arr.dims[0] != 2)
        throw DimMismatch("read_frame_field: expected (2,n0,n1,n2) array in " +
                          path);
    FrameField f(grid_from_dims(arr.dims.data() + 1, h0, h1, h2));
    const std::size_t n = f.grid.size();
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t p = 0; p < n; ++p) f.values[p][c] = arr.values[c * n + p];
    return f;
}

void write_vector_field(const std::string& path, const VectorField3& f) {
    const std::size_t n = f.grid.size();
    std::vector<double> flat(3 * n);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < n; ++p) flat[c * n + p] = f.values[p][c];
    write_evsf(path,
               {3u, std::uint32_t(f.grid.n0), std::uint32_t(f.grid.n1),
                std::uint32_t(f.grid.n2)},
               flat);
}

VectorField3 read_vector_field(const std::string& path, double h0, double h1,
                               double h2) {
    EvsfArray arr = read_evsf(path);
    if (arr.dims.size() != 4 || arr.dims[0] != 3)
        throw DimMismatch("read_vector_field: expected (3,n0,n1,n2) array in " +
                          path);
    VectorField3 f(grid_from_dims(arr.dims.data() + 1, h0, h1, h2));
    const std::size_t n = f.grid.size();
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t p = 0; p < n; ++p) f.values[p][c] = arr.values[c * n + p];
    return f;
}

} // namespace evsurf
