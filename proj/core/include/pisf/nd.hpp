#pragma once

#include <complex>
#include <cstdint>
#include <numeric>
#include <vector>

#include "pisf/errors.hpp"

namespace pisf {

using cfloat = std::complex<float>;
using cdouble = std::complex<double>;

// Dense row-major n-d array; the lingua franca between file I/O and the
// numeric modules.
template <typename T>
struct Nd {
  std::vector<uint64_t> dims;
  std::vector<T> data;

  Nd() = default;
  Nd(std::vector<uint64_t> d, T fill = T{}) : dims(std::move(d)) {
    data.assign(element_count(dims), fill);
  }

  static uint64_t element_count(const std::vector<uint64_t>& dims) {
    uint64_t n = 1;
    for (uint64_t d : dims) n *= d;
    return n;
  }

  uint64_t size() const { return data.size(); }
  size_t ndim() const { return dims.size(); }

  uint64_t dim(size_t i) const { return dims.at(i); }

  // 2-d and 3-d accessors for the common shapes (h,w) and (c,h,w)
  T& at(uint64_t i, uint64_t j) { return data[i * dims[1] + j]; }
  const T& at(uint64_t i, uint64_t j) const { return data[i * dims[1] + j]; }
  T& at(uint64_t c, uint64_t i, uint64_t j) { return data[(c * dims[1] + i) * dims[2] + j]; }
  const T& at(uint64_t c, uint64_t i, uint64_t j) const {
    return data[(c * dims[1] + i) * dims[2] + j];
  }

  void require_ndim(size_t n, const char* what) const {
    if (dims.size() != n)
      throw ValidationError(std::string(what) + ": expected " + std::to_string(n) +
                            "-d array, got " + std::to_string(dims.size()) + "-d");
  }
};

using RealNd = Nd<float>;
using ComplexNd = Nd<cfloat>;

} // namespace pisf
