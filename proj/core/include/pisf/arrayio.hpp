#pragma once

#include <string>
#include <variant>

#include "pisf/nd.hpp"

namespace pisf::io {

// On-disk array container. Layout, all little-endian:
//
//   magic    4 bytes  "PISF"
//   version  u8       1
//   dtype    u8       1 = 32-bit IEEE-754 real, 2 = interleaved (re,im) f32 pair
//   ndim     u8       1..8
//   reserved u8       0
//   dims     ndim x u64
//   payload  row-major element stream (4 or 8 bytes per element)
//
// Readers fail closed: any header inconsistency is an IoError, never a
// silently wrong array.

enum class Dtype : uint8_t { Real32 = 1, Complex64 = 2 };

constexpr size_t kMaxNdim = 8;

void write_array(const std::string& path, const RealNd& a);
void write_array(const std::string& path, const ComplexNd& a);

using AnyArray = std::variant<RealNd, ComplexNd>;

AnyArray read_array(const std::string& path);

// Convenience readers that additionally require the expected dtype.
RealNd read_real(const std::string& path);
ComplexNd read_complex(const std::string& path);

} // namespace pisf::io
