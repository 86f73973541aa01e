#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pisf/nd.hpp"

namespace pisf::sampling {

// All masks use the centered-DC convention: index floor(n/2) is DC, and the
// autocalibration (ACS) block starts at dc - acs_width/2.

enum class Scheme2D { UniformRandom, VariableDensity, FullySampledReadout };

struct Mask1D {
  std::vector<uint8_t> sampled; // 0/1, length n
  uint64_t acs_width = 0;
  double requested_af = 1.0;
  uint64_t seed = 0;
  std::string scheme = "cartesian1d";

  uint64_t n() const { return sampled.size(); }
  uint64_t dc() const { return sampled.size() / 2; }
  uint64_t sampled_count() const;
  uint64_t acs_start() const { return dc() - acs_width / 2; }
};

struct Mask2D {
  uint64_t rows = 0, cols = 0;
  std::vector<uint8_t> sampled; // row-major rows x cols
  uint64_t acs_width = 0;       // side of the centered fully sampled square,
                                // or the 1-d ACS width for replicated masks
  double requested_af = 1.0;
  uint64_t seed = 0;
  Scheme2D scheme = Scheme2D::UniformRandom;

  uint8_t at(uint64_t r, uint64_t c) const { return sampled[r * cols + c]; }
  uint64_t sampled_count() const;

  // Maximal centered fully-sampled rectangle, used for SPIRiT calibration.
  // Returns {r0, c0, height, width}.
  struct Rect {
    uint64_t r0, c0, h, w;
  };
  Rect acs_rect() const;
};

Mask1D make_cartesian_1d(uint64_t n, double af, uint64_t acs_width, uint64_t seed);

Mask1D make_partial_fourier_1d(uint64_t n, double fraction, uint64_t acs_width);

Mask2D make_random_2d(uint64_t rows, uint64_t cols, double af, uint64_t acs_width,
                      Scheme2D scheme, uint64_t seed);

// 1-d pattern replicated along the readout (row) axis: sampled(r,c) = m(c).
Mask2D replicate_readout(const Mask1D& m, uint64_t rows);

double achieved_af(const Mask1D& m);
double achieved_af(const Mask2D& m);

// ArrayFile (dtype 1, 0.0/1.0) plus JSON sidecar {requested_af, acs_width,
// scheme, seed} at path + ".json".
void save_mask(const Mask1D& m, const std::string& path);
void save_mask(const Mask2D& m, const std::string& path);
Mask1D load_mask_1d(const std::string& path);
Mask2D load_mask_2d(const std::string& path);

// Rebuild mask metadata (ACS geometry) from a bare 0/1 array when no sidecar
// is available.
Mask1D mask_from_array(const RealNd& a);
Mask2D mask2d_from_array(const RealNd& a);

} // namespace pisf::sampling
