#include "pisf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <json.hpp>

#include "pisf/errors.hpp"

namespace pisf::metrics {

namespace {

void check_pair(const RealNd& ref, const RealNd& test) {
  ref.require_ndim(2, "metrics reference");
  test.require_ndim(2, "metrics test image");
  if (ref.dims != test.dims) throw ValidationError("metrics: image shape mismatch");
}

double ref_max(const RealNd& ref) {
  double mx = 0.0;
  for (float v : ref.data) mx = std::max(mx, static_cast<double>(v));
  if (mx <= 0.0) throw ValidationError("metrics: reference image is all zero");
  return mx;
}

// separable Gaussian filtering, valid region only
std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<size_t>(size));
  const int half = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    k[static_cast<size_t>(i)] = std::exp(-0.5 * d * d / (sigma * sigma));
    sum += k[static_cast<size_t>(i)];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// input (h,w) -> output (h - size + 1, w - size + 1)
std::vector<double> filter_valid(const std::vector<double>& img, uint64_t h, uint64_t w,
                                 const std::vector<double>& k) {
  const uint64_t size = k.size();
  const uint64_t oh = h - size + 1, ow = w - size + 1;
  std::vector<double> tmp(oh * w, 0.0), out(oh * ow, 0.0);
  for (uint64_t r = 0; r < oh; ++r)
    for (uint64_t c = 0; c < w; ++c) {
      double acc = 0.0;
      for (uint64_t t = 0; t < size; ++t) acc += k[t] * img[(r + t) * w + c];
      tmp[r * w + c] = acc;
    }
  for (uint64_t r = 0; r < oh; ++r)
    for (uint64_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (uint64_t t = 0; t < size; ++t) acc += k[t] * tmp[r * w + c + t];
      out[r * ow + c] = acc;
    }
  return out;
}

} // namespace

MetricReport psnr(const RealNd& ref, const RealNd& test) {
  check_pair(ref, test);
  const double mx = ref_max(ref);

  double mse = 0.0;
  for (size_t i = 0; i < ref.data.size(); ++i) {
    const double d = (static_cast<double>(ref.data[i]) - test.data[i]) / mx;
    mse += d * d;
  }
  mse /= static_cast<double>(ref.data.size());

  MetricReport rep;
  rep.psnr_db = mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / mse);
  return rep;
}

MetricReport ssim(const RealNd& ref, const RealNd& test) {
  check_pair(ref, test);
  MetricReport rep;
  const uint64_t h = ref.dims[0], w = ref.dims[1];
  const uint64_t size = static_cast<uint64_t>(rep.window_size);
  if (h < size || w < size)
    throw ValidationError("ssim: image smaller than the 11x11 window");

  const double mx = ref_max(ref);
  const size_t n = ref.data.size();
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (size_t i = 0; i < n; ++i) {
    a[i] = static_cast<double>(ref.data[i]) / mx;
    b[i] = static_cast<double>(test.data[i]) / mx;
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }

  const auto k = gaussian_kernel(rep.window_size, rep.window_sigma);
  const auto mu_a = filter_valid(a, h, w, k);
  const auto mu_b = filter_valid(b, h, w, k);
  const auto m_aa = filter_valid(aa, h, w, k);
  const auto m_bb = filter_valid(bb, h, w, k);
  const auto m_ab = filter_valid(ab, h, w, k);

  const double c1 = rep.k1 * rep.k1; // dynamic range 1 after normalization
  const double c2 = rep.k2 * rep.k2;
  double acc = 0.0;
  for (size_t i = 0; i < mu_a.size(); ++i) {
    const double va = m_aa[i] - mu_a[i] * mu_a[i];
    const double vb = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    acc += ((2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2)) /
           ((mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2));
  }
  rep.ssim = acc / static_cast<double>(mu_a.size());
  return rep;
}

MetricReport evaluate(const RealNd& ref, const RealNd& test) {
  MetricReport rep = psnr(ref, test);
  rep.ssim = ssim(ref, test).ssim;
  return rep;
}

std::string MetricReport::to_json() const {
  nlohmann::json j;
  if (std::isinf(psnr_db))
    j["psnr_db"] = "inf";
  else
    j["psnr_db"] = psnr_db;
  j["ssim"] = ssim;
  j["normalization"] = normalization;
  j["window"] = {{"size", window_size}, {"sigma", window_sigma}, {"k1", k1}, {"k2", k2}};
  return j.dump(2);
}

} // namespace pisf::metrics
