#pragma once

#include <string>

#include "pisf/nd.hpp"

namespace pisf::metrics {

struct MetricReport {
  double psnr_db = 0.0; // +infinity when the images are identical
  double ssim = 0.0;
  std::string normalization = "reference-max";
  int window_size = 11;
  double window_sigma = 1.5;
  double k1 = 0.01, k2 = 0.03;

  std::string to_json() const; // psnr_db serialized as "inf" when infinite
};

// Both images are divided by max(ref); PSNR = 10 log10(1 / MSE).
MetricReport psnr(const RealNd& ref, const RealNd& test);

// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
// dynamic range 1 after reference-max normalization, valid-window mean.
MetricReport ssim(const RealNd& ref, const RealNd& test);

// Convenience: both metrics in one report.
MetricReport evaluate(const RealNd& ref, const RealNd& test);

} // namespace pisf::metrics
