#include "pisf/arrayio.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <memory>

namespace pisf::io {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u64_le(unsigned char* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

uint64_t get_u64_le(const unsigned char* in) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(in[i]) << (8 * i);
  return v;
}

void put_f32_le(unsigned char* out, float x) {
  const uint32_t v = std::bit_cast<uint32_t>(x);
  for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

float get_f32_le(const unsigned char* in) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[i]) << (8 * i);
  return std::bit_cast<float>(v);
}

void write_header_and_payload(const std::string& path, Dtype dtype,
                              const std::vector<uint64_t>& dims,
                              const unsigned char* payload, size_t payload_bytes) {
  if (dims.empty() || dims.size() > kMaxNdim)
    throw ValidationError("write_array: ndim must be in [1, 8], got " +
                          std::to_string(dims.size()));
  for (uint64_t d : dims)
    if (d == 0) throw ValidationError("write_array: empty array (zero-sized dim)");

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError(IoError::Kind::OpenFailed, "write_array: cannot open " + path);

  unsigned char header[8 + 8 * kMaxNdim];
  std::memcpy(header, "PISF", 4);
  header[4] = 1; // version
  header[5] = static_cast<unsigned char>(dtype);
  header[6] = static_cast<unsigned char>(dims.size());
  header[7] = 0; // reserved
  for (size_t i = 0; i < dims.size(); ++i) put_u64_le(header + 8 + 8 * i, dims[i]);
  const size_t header_bytes = 8 + 8 * dims.size();

  if (std::fwrite(header, 1, header_bytes, f.get()) != header_bytes ||
      std::fwrite(payload, 1, payload_bytes, f.get()) != payload_bytes)
    throw IoError(IoError::Kind::OpenFailed, "write_array: short write to " + path);
  if (std::fflush(f.get()) != 0)
    throw IoError(IoError::Kind::OpenFailed, "write_array: flush failed for " + path);
}

} // namespace

void write_array(const std::string& path, const RealNd& a) {
  std::vector<unsigned char> payload(a.data.size() * 4);
  for (size_t i = 0; i < a.data.size(); ++i) put_f32_le(payload.data() + 4 * i, a.data[i]);
  write_header_and_payload(path, Dtype::Real32, a.dims, payload.data(), payload.size());
}

void write_array(const std::string& path, const ComplexNd& a) {
  std::vector<unsigned char> payload(a.data.size() * 8);
  for (size_t i = 0; i < a.data.size(); ++i) {
    put_f32_le(payload.data() + 8 * i, a.data[i].real());
    put_f32_le(payload.data() + 8 * i + 4, a.data[i].imag());
  }
  write_header_and_payload(path, Dtype::Complex64, a.dims, payload.data(), payload.size());
}

AnyArray read_array(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError(IoError::Kind::OpenFailed, "read_array: cannot open " + path);

  unsigned char fixed[8];
  if (std::fread(fixed, 1, 8, f.get()) != 8)
    throw IoError(IoError::Kind::BadHeader, "read_array: truncated header in " + path);

  if (std::memcmp(fixed, "PISF", 4) != 0)
    throw IoError(IoError::Kind::BadMagic, "read_array: bad magic in " + path);
  if (fixed[4] != 1)
    throw IoError(IoError::Kind::BadVersion,
                  "read_array: unsupported version " + std::to_string(fixed[4]) + " in " + path);
  if (fixed[5] != 1 && fixed[5] != 2)
    throw IoError(IoError::Kind::BadDtype,
                  "read_array: unknown dtype " + std::to_string(fixed[5]) + " in " + path);
  const auto dtype = static_cast<Dtype>(fixed[5]);
  const size_t ndim = fixed[6];
  if (ndim == 0 || ndim > kMaxNdim)
    throw IoError(IoError::Kind::BadHeader,
                  "read_array: ndim " + std::to_string(ndim) + " out of range in " + path);
  if (fixed[7] != 0)
    throw IoError(IoError::Kind::BadHeader, "read_array: nonzero reserved byte in " + path);

  unsigned char dim_buf[8 * kMaxNdim];
  if (std::fread(dim_buf, 1, 8 * ndim, f.get()) != 8 * ndim)
    throw IoError(IoError::Kind::BadHeader, "read_array: truncated dims in " + path);

  std::vector<uint64_t> dims(ndim);
  uint64_t count = 1;
  for (size_t i = 0; i < ndim; ++i) {
    dims[i] = get_u64_le(dim_buf + 8 * i);
    if (dims[i] == 0)
      throw IoError(IoError::Kind::BadHeader, "read_array: zero-sized dim in " + path);
    if (dims[i] > (uint64_t(1) << 40) || count > (uint64_t(1) << 40) / dims[i])
      throw IoError(IoError::Kind::BadHeader, "read_array: dims overflow in " + path);
    count *= dims[i];
  }

  const size_t elem_bytes = dtype == Dtype::Real32 ? 4 : 8;
  const uint64_t expected = count * elem_bytes;

  std::vector<unsigned char> payload(expected);
  const size_t got = std::fread(payload.data(), 1, expected, f.get());
  unsigned char probe;
  const bool has_extra = std::fread(&probe, 1, 1, f.get()) == 1;
  if (got != expected || has_extra)
    throw IoError(IoError::Kind::LengthMismatch,
                  "read_array: payload length mismatch in " + path + " (expected " +
                      std::to_string(expected) + " bytes, got " +
                      std::to_string(got + (has_extra ? 1 : 0)) + "+)");

  if (dtype == Dtype::Real32) {
    RealNd a;
    a.dims = std::move(dims);
    a.data.resize(count);
    for (uint64_t i = 0; i < count; ++i) a.data[i] = get_f32_le(payload.data() + 4 * i);
    return a;
  }
  ComplexNd a;
  a.dims = std::move(dims);
  a.data.resize(count);
  for (uint64_t i = 0; i < count; ++i)
    a.data[i] = cfloat(get_f32_le(payload.data() + 8 * i), get_f32_le(payload.data() + 8 * i + 4));
  return a;
}

RealNd read_real(const std::string& path) {
  auto any = read_array(path);
  if (auto* r = std::get_if<RealNd>(&any)) return std::move(*r);
  throw IoError(IoError::Kind::BadDtype, "expected real array in " + path);
}

ComplexNd read_complex(const std::string& path) {
  auto any = read_array(path);
  if (auto* c = std::get_if<ComplexNd>(&any)) return std::move(*c);
  throw IoError(IoError::Kind::BadDtype, "expected complex array in " + path);
}

} // namespace pisf::io
