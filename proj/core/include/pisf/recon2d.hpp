#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pisf/nd.hpp"
#include "pisf/sampling.hpp"
#include "pisf/unroll.hpp"

namespace pisf::recon {

struct KspaceVolume {
  ComplexNd data; // (c, h, w), centered DC, zero wherever the mask is false
  sampling::Mask2D mask;

  uint64_t coils() const { return data.dims[0]; }
  uint64_t h() const { return data.dims[1]; }
  uint64_t w() const { return data.dims[2]; }
};

// Builds a volume and enforces the off-mask-zero invariant by zeroing.
KspaceVolume make_volume(ComplexNd kspace, sampling::Mask2D mask);

struct SpiritKernel {
  uint64_t coils = 0;
  int ksize = 5;
  std::vector<cfloat> weights; // (cj, ci, dy, dx); center self-weight is 0
  double tikhonov_rel = 1e-2;
  double calib_residual = 0.0; // mean relative fit residual over coils

  cfloat& at(uint64_t cj, uint64_t ci, int dy, int dx) {
    return weights[((cj * coils + ci) * static_cast<uint64_t>(ksize) + static_cast<uint64_t>(dy)) *
                       static_cast<uint64_t>(ksize) +
                   static_cast<uint64_t>(dx)];
  }
  const cfloat& at(uint64_t cj, uint64_t ci, int dy, int dx) const {
    return const_cast<SpiritKernel*>(this)->at(cj, ci, dy, dx);
  }
};

enum class DealiasMode { Rows, RowsThenCols, RowsColsAvg };

struct ReconOptions {
  unroll::Variant variant = unroll::Variant::Advanced;
  DealiasMode mode = DealiasMode::Rows;
  int k_override = 0; // <= 0 keeps the model's K
  bool spirit = true;
  bool trace = false;
  int axis = 1; // 1: 1-d signals run along width; 0: along height

  void validate() const; // plain implies spirit off
};

struct ReconTrace {
  std::vector<ComplexNd> d, b, x; // per-phase snapshots (c,h,w)
  std::vector<double> psnr_db;    // per phase vs the reference SoS, when given
};

struct ReconResult {
  ComplexNd coil_images; // (c,h,w)
  RealNd sos;            // (h,w)
  ReconTrace trace;
};

// SVD-based coil compression onto the top `target` left singular vectors;
// identity when c <= target.
KspaceVolume compress_coils(const KspaceVolume& y, uint64_t target = 8);

// Tikhonov-regularized least-squares calibration of the self-consistency
// kernel from the fully sampled calibration region. eps is
// tikhonov_rel * sigma_max(A).
SpiritKernel calibrate_spirit(const KspaceVolume& y, int kernel_size = 5,
                              double tikhonov_rel = 1e-2);

// out_j(p) = sum_i sum_delta w[j][i][delta] in_i(p + delta), zero-padded.
ComplexNd apply_spirit(const ComplexNd& kin, const SpiritKernel& g);

// Row-wise (and optionally column-wise) application of the trained 1-d
// de-aliasing module to every coil of an image-domain volume.
ComplexNd dealias_2d(const ComplexNd& x, unroll::UnrolledModel<float>& model, int phase,
                     DealiasMode mode, int axis = 1);

ComplexNd data_consistency_2d(const ComplexNd& b, const ComplexNd& y,
                              const sampling::Mask2D& mask, float lambda);

RealNd sos_combine(const ComplexNd& x);

ReconResult reconstruct(const KspaceVolume& y, unroll::UnrolledModel<float>& model,
                        const ReconOptions& opts, const RealNd* ref_sos = nullptr);

namespace detail {
// The batched axis sweep with an arbitrary signal transform, also used by
// tests to check the row-partition identity with an identity transform.
using SignalFn = std::function<ComplexNd(const ComplexNd&)>; // (items,n)->(items,n)
ComplexNd sweep_axis(const ComplexNd& x, int axis, const SignalFn& fn);
} // namespace detail

} // namespace pisf::recon
