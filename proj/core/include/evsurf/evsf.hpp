// EVSF: the project's binary container for dense float64 arrays.
//
// Layout (all integers little-endian):
//   magic "EVSF" (4 bytes) | version u8 = 1 | dtype u8 = 1 (float64) |
//   2 reserved zero bytes | ndim u8 | ndim x u32 dims |
//   row-major float64 payload.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "evsurf/fields.hpp"

namespace evsurf {

/// Raw array as stored on disk: extents plus row-major payload.
struct EvsfArray {
    std::vector<std::uint32_t> dims;
    std::vector<double> values;

    std::size_t element_count() const;
};

/// Write `values` with the given extents.  Throws DimMismatch if the extent
/// product disagrees with values.size() or any extent is zero, NonFiniteValue
/// if a payload value is NaN/inf, IoFailure on stream errors.  Deterministic:
/// identical input produces identical bytes.
void write_evsf(const std::string& path, const std::vector<std::uint32_t>& dims,
                const std::vector<double>& values);

/// Read a file written by write_evsf.  Throws BadMagic, UnsupportedVersion
/// (unknown version or element type), TruncatedPayload (payload shorter or
/// longer than the extents declare), NonFiniteValue, IoFailure.
EvsfArray read_evsf(const std::string& path);

// --- typed helpers on Grid3 fields ------------------------------------------
// The container stores extents only; step sizes are supplied by the caller.

/// Store as a 3-D array (n0, n1, n2).
void write_scalar_field(const std::string& path, const ScalarField3& f);

/// Load a 3-D array and attach the given steps.  Throws DimMismatch if the
/// file is not 3-D or the extents violate Grid3's minimums.
ScalarField3 read_scalar_field(const std::string& path, double h0, double h1,
                               double h2);

/// Store as a 4-D component-major array (2, n0, n1, n2).
void write_frame_field(const std::string& path, const FrameField& f);
FrameField read_frame_field(const std::string& path, double h0, double h1,
                            double h2);

/// Store as a 4-D component-major array (3, n0, n1, n2).
void write_vector_field(const std::string& path, const VectorField3& f);
VectorField3 read_vector_field(const std::string& path, double h0, double h1,
                               double h2);

} // namespace evsurf
