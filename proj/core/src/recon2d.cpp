#include "pisf/recon2d.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "pisf/errors.hpp"
#include "pisf/fftc.hpp"
#include "pisf/metrics.hpp"

namespace pisf::recon {

namespace {

using MatC = Eigen::Matrix<std::complex<float>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatCd = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic>;
using VecCd = Eigen::Vector<std::complex<double>, Eigen::Dynamic>;

void fft2_volume(ComplexNd& v, bool forward) {
  fftc::fft2d_centered(v.data.data(), v.dims[1], v.dims[2], v.dims[0], forward);
}

} // namespace

KspaceVolume make_volume(ComplexNd kspace, sampling::Mask2D mask) {
  kspace.require_ndim(3, "kspace volume");
  if (kspace.dims[1] != mask.rows || kspace.dims[2] != mask.cols)
    throw ValidationError("kspace volume: mask shape mismatch");
  const uint64_t hw = mask.rows * mask.cols;
  for (uint64_t c = 0; c < kspace.dims[0]; ++c)
    for (uint64_t p = 0; p < hw; ++p)
      if (!mask.sampled[p]) kspace.data[c * hw + p] = cfloat(0, 0);
  return KspaceVolume{std::move(kspace), std::move(mask)};
}

void ReconOptions::validate() const {
  if (variant == unroll::Variant::Plain && spirit)
    throw ValidationError("recon options: the plain variant runs without SPIRiT enhancement");
  if (axis != 0 && axis != 1) throw ValidationError("recon options: axis must be 0 or 1");
}

KspaceVolume compress_coils(const KspaceVolume& y, uint64_t target) {
  if (target < 1) throw ValidationError("compress_coils: target must be >= 1");
  const uint64_t c = y.coils(), n = y.h() * y.w();
  if (c <= target) return y;

  Eigen::Map<const MatC> m(y.data.data.data(), static_cast<int64_t>(c), static_cast<int64_t>(n));
  MatCd gram = (m * m.adjoint()).cast<std::complex<double>>();
  if (!(gram.real().trace() > 0.0))
    throw ValidationError("compress_coils: degenerate all-zero input");

  Eigen::SelfAdjointEigenSolver<MatCd> es(gram);
  // eigenvalues ascending; take the top `target` vectors, largest first
  MatCd basis(static_cast<int64_t>(c), static_cast<int64_t>(target));
  for (uint64_t t = 0; t < target; ++t)
    basis.col(static_cast<int64_t>(t)) = es.eigenvectors().col(static_cast<int64_t>(c - 1 - t));

  KspaceVolume out;
  out.data = ComplexNd({target, y.h(), y.w()});
  Eigen::Map<MatC> om(out.data.data.data(), static_cast<int64_t>(target),
                      static_cast<int64_t>(n));
  om = (basis.adjoint() * m.cast<std::complex<double>>()).cast<std::complex<float>>();
  out.mask = y.mask;
  return out;
}

SpiritKernel calibrate_spirit(const KspaceVolume& y, int kernel_size, double tikhonov_rel) {
  if (kernel_size < 3 || kernel_size % 2 == 0)
    throw ValidationError("calibrate_spirit: kernel size must be odd and >= 3");
  const auto rect = y.mask.acs_rect();
  const uint64_t need = static_cast<uint64_t>(kernel_size + 3);
  if (rect.h < need || rect.w < need)
    throw ValidationError("calibrate_spirit: calibration region smaller than (kernel+3)^2");

  const uint64_t c = y.coils();
  const int hk = kernel_size / 2;
  const uint64_t kk = static_cast<uint64_t>(kernel_size) * static_cast<uint64_t>(kernel_size);
  const uint64_t cols = c * kk;

  // fit points: kernel window fully inside the calibration rectangle
  const uint64_t fr0 = rect.r0 + static_cast<uint64_t>(hk);
  const uint64_t fr1 = rect.r0 + rect.h - static_cast<uint64_t>(hk);
  const uint64_t fc0 = rect.c0 + static_cast<uint64_t>(hk);
  const uint64_t fc1 = rect.c0 + rect.w - static_cast<uint64_t>(hk);
  const uint64_t npts = (fr1 - fr0) * (fc1 - fc0);

  MatCd a(static_cast<int64_t>(npts), static_cast<int64_t>(cols));
  uint64_t row = 0;
  for (uint64_t r = fr0; r < fr1; ++r)
    for (uint64_t cc = fc0; cc < fc1; ++cc, ++row)
      for (uint64_t ci = 0; ci < c; ++ci)
        for (int dy = 0; dy < kernel_size; ++dy)
          for (int dx = 0; dx < kernel_size; ++dx) {
            const uint64_t rr = r + static_cast<uint64_t>(dy - hk);
            const uint64_t wc = cc + static_cast<uint64_t>(dx - hk);
            a(static_cast<int64_t>(row),
              static_cast<int64_t>((ci * kk) + static_cast<uint64_t>(dy * kernel_size + dx))) =
                std::complex<double>(y.data.at(ci, rr, wc));
          }

  const MatCd gram = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<MatCd> es(gram);
  const double sigma_max = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
  if (!(sigma_max > 0.0))
    throw ValidationError("calibrate_spirit: rank-zero calibration matrix (all-zero ACS)");
  const double epsilon = tikhonov_rel * sigma_max;

  SpiritKernel g;
  g.coils = c;
  g.ksize = kernel_size;
  g.tikhonov_rel = tikhonov_rel;
  g.weights.assign(c * c * kk, cfloat(0, 0));

  const int center_off = hk * kernel_size + hk;
  double residual_acc = 0.0;
  for (uint64_t cj = 0; cj < c; ++cj) {
    const int64_t drop = static_cast<int64_t>(cj * kk) + center_off;
    const int64_t m = static_cast<int64_t>(cols) - 1;

    MatCd gj(m, m);
    VecCd rhs(m);
    for (int64_t i = 0, ii = 0; i < static_cast<int64_t>(cols); ++i) {
      if (i == drop) continue;
      rhs(ii) = gram(i, drop);
      for (int64_t j = 0, jj = 0; j < static_cast<int64_t>(cols); ++j) {
        if (j == drop) continue;
        gj(ii, jj) = gram(i, j);
        ++jj;
      }
      ++ii;
    }
    for (int64_t i = 0; i < m; ++i) gj(i, i) += epsilon;

    const VecCd sol = gj.ldlt().solve(rhs);

    // ||A g - b||^2 via the Gram identities
    const double b2 = gram(drop, drop).real();
    const std::complex<double> gAb = (sol.adjoint() * rhs)(0);
    const double quad = (sol.adjoint() * ((gj * sol) - VecCd(epsilon * sol)))(0).real();
    const double res2 = std::max(0.0, quad - 2.0 * gAb.real() + b2);
    residual_acc += b2 > 0.0 ? std::sqrt(res2 / b2) : 0.0;

    for (int64_t i = 0, ii = 0; i < static_cast<int64_t>(cols); ++i) {
      if (i == drop) continue;
      const uint64_t ci = static_cast<uint64_t>(i) / kk;
      const uint64_t off = static_cast<uint64_t>(i) % kk;
      g.weights[(cj * c + ci) * kk + off] = std::complex<float>(sol(ii));
      ++ii;
    }
  }
  g.calib_residual = residual_acc / static_cast<double>(c);
  return g;
}

ComplexNd apply_spirit(const ComplexNd& kin, const SpiritKernel& g) {
  kin.require_ndim(3, "apply_spirit");
  const uint64_t c = kin.dims[0], h = kin.dims[1], w = kin.dims[2];
  if (c != g.coils) throw ValidationError("apply_spirit: coil count mismatch");
  const int hk = g.ksize / 2;

  ComplexNd out({c, h, w});
  for (uint64_t cj = 0; cj < c; ++cj) {
    for (uint64_t ci = 0; ci < c; ++ci) {
      for (int dy = 0; dy < g.ksize; ++dy) {
        const int64_t ry = dy - hk;
        for (int dx = 0; dx < g.ksize; ++dx) {
          const int64_t rx = dx - hk;
          const cfloat wgt = g.at(cj, ci, dy, dx);
          if (wgt == cfloat(0, 0)) continue;
          const int64_t r0 = std::max<int64_t>(0, -ry);
          const int64_t r1 = std::min<int64_t>(static_cast<int64_t>(h), static_cast<int64_t>(h) - ry);
          const int64_t c0 = std::max<int64_t>(0, -rx);
          const int64_t c1 = std::min<int64_t>(static_cast<int64_t>(w), static_cast<int64_t>(w) - rx);
          for (int64_t r = r0; r < r1; ++r) {
            const cfloat* src =
                kin.data.data() + (ci * h + static_cast<uint64_t>(r + ry)) * w + static_cast<uint64_t>(rx);
            cfloat* dst = out.data.data() + (cj * h + static_cast<uint64_t>(r)) * w;
            for (int64_t cc = c0; cc < c1; ++cc) dst[cc] += wgt * src[cc];
          }
        }
      }
    }
  }
  return out;
}

namespace detail {

ComplexNd sweep_axis(const ComplexNd& x, int axis, const SignalFn& fn) {
  x.require_ndim(3, "sweep_axis");
  const uint64_t c = x.dims[0], h = x.dims[1], w = x.dims[2];

  if (axis == 1) {
    // signals along width: (c*h, w) is already the memory layout
    ComplexNd batch({c * h, w});
    batch.data = x.data;
    ComplexNd out = fn(batch);
    if (out.dims != batch.dims) throw RuntimeError("sweep_axis: transform changed shape");
    ComplexNd res({c, h, w});
    res.data = std::move(out.data);
    return res;
  }

  // signals along height: gather strided columns
  ComplexNd batch({c * w, h});
  for (uint64_t ci = 0; ci < c; ++ci)
    for (uint64_t cc = 0; cc < w; ++cc)
      for (uint64_t r = 0; r < h; ++r)
        batch.data[(ci * w + cc) * h + r] = x.data[(ci * h + r) * w + cc];
  ComplexNd out = fn(batch);
  if (out.dims != batch.dims) throw RuntimeError("sweep_axis: transform changed shape");
  ComplexNd res({c, h, w});
  for (uint64_t ci = 0; ci < c; ++ci)
    for (uint64_t cc = 0; cc < w; ++cc)
      for (uint64_t r = 0; r < h; ++r)
        res.data[(ci * h + r) * w + cc] = out.data[(ci * w + cc) * h + r];
  return res;
}

} // namespace detail

namespace {

// Runs the module over a batch of signals in cache-friendly chunks.
ComplexNd module_batch(const ComplexNd& batch, unroll::UnrolledModel<float>& model, int phase) {
  auto& module = model.module_for_phase(phase);
  const uint64_t items = batch.dims[0], n = batch.dims[1];
  const uint64_t chunk = std::max<uint64_t>(1, 6144 / std::max<uint64_t>(n, 1));

  ComplexNd out({items, n});
  for (uint64_t lo = 0; lo < items; lo += chunk) {
    const uint64_t hi = std::min(items, lo + chunk);
    ComplexNd sub({hi - lo, n});
    std::copy(batch.data.begin() + static_cast<int64_t>(lo * n),
              batch.data.begin() + static_cast<int64_t>(hi * n), sub.data.begin());
    ComplexNd res = unroll::dealias_1d(sub, module, net::BnMode::Eval, nullptr);
    std::copy(res.data.begin(), res.data.end(), out.data.begin() + static_cast<int64_t>(lo * n));
  }
  return out;
}

} // namespace

ComplexNd dealias_2d(const ComplexNd& x, unroll::UnrolledModel<float>& model, int phase,
                     DealiasMode mode, int axis) {
  const auto run = [&](const ComplexNd& b) { return module_batch(b, model, phase); };
  ComplexNd rows = detail::sweep_axis(x, axis, run);
  if (mode == DealiasMode::Rows) return rows;
  if (mode == DealiasMode::RowsThenCols) return detail::sweep_axis(rows, 1 - axis, run);

  ComplexNd cols = detail::sweep_axis(x, 1 - axis, run);
  for (size_t i = 0; i < rows.data.size(); ++i)
    rows.data[i] = 0.5f * (rows.data[i] + cols.data[i]);
  return rows;
}

ComplexNd data_consistency_2d(const ComplexNd& b, const ComplexNd& y,
                              const sampling::Mask2D& mask, float lambda) {
  b.require_ndim(3, "data_consistency_2d");
  if (b.dims != y.dims) throw ValidationError("data_consistency_2d: shape mismatch");
  if (b.dims[1] != mask.rows || b.dims[2] != mask.cols)
    throw ValidationError("data_consistency_2d: mask shape mismatch");
  if (lambda < 0.0f) throw ValidationError("data_consistency_2d: lambda must be >= 0");

  ComplexNd x = b;
  fft2_volume(x, true);
  const float blend = lambda / (1.0f + lambda);
  const float inv1pl = 1.0f / (1.0f + lambda);
  const uint64_t hw = mask.rows * mask.cols;
  for (uint64_t c = 0; c < x.dims[0]; ++c) {
    cfloat* xr = x.data.data() + c * hw;
    const cfloat* yr = y.data.data() + c * hw;
    for (uint64_t p = 0; p < hw; ++p)
      if (mask.sampled[p]) xr[p] = yr[p] * inv1pl + xr[p] * blend;
  }
  fft2_volume(x, false);
  return x;
}

RealNd sos_combine(const ComplexNd& x) {
  x.require_ndim(3, "sos_combine");
  const uint64_t c = x.dims[0], hw = x.dims[1] * x.dims[2];
  if (c < 1) throw ValidationError("sos_combine: need at least one coil");
  RealNd out({x.dims[1], x.dims[2]});
  for (uint64_t p = 0; p < hw; ++p) {
    double acc = 0.0;
    for (uint64_t ci = 0; ci < c; ++ci) acc += static_cast<double>(std::norm(x.data[ci * hw + p]));
    out.data[p] = static_cast<float>(std::sqrt(acc));
  }
  return out;
}

ReconResult reconstruct(const KspaceVolume& y, unroll::UnrolledModel<float>& model,
                        const ReconOptions& opts, const RealNd* ref_sos) {
  opts.validate();
  if (opts.variant == unroll::Variant::Advanced && model.variant == unroll::Variant::Plain)
    throw ValidationError("reconstruct: a plain-trained model has no adaptive threshold path");

  const int K = opts.k_override > 0 ? opts.k_override : model.K;
  if (model.per_phase_weights && K > model.K)
    throw ValidationError("reconstruct: cannot extend a per-phase-weights model beyond K");

  // temporarily run an advanced module on the plain path when asked
  const unroll::Variant saved_variant = model.modules[0].variant;
  const bool flip = opts.variant == unroll::Variant::Plain && saved_variant == unroll::Variant::Advanced;
  if (flip)
    for (auto& m : model.modules) m.variant = unroll::Variant::Plain;
  struct VariantGuard {
    unroll::UnrolledModel<float>* model;
    unroll::Variant saved;
    bool active;
    ~VariantGuard() {
      if (active)
        for (auto& m : model->modules) m.variant = saved;
    }
  } guard{&model, saved_variant, flip};

  SpiritKernel kernel;
  if (opts.spirit) kernel = calibrate_spirit(y);

  // zero-filled initialization and per-volume normalization
  ComplexNd x = y.data;
  fft2_volume(x, false);
  float scale = 1.0f;
  if (model.normalization) {
    float mx = 0.0f;
    for (const auto& v : x.data) mx = std::max(mx, std::abs(v));
    scale = mx > 0.0f ? mx : 1.0f;
  }
  ComplexNd yn = y.data;
  if (scale != 1.0f) {
    const float inv = 1.0f / scale;
    for (auto& v : x.data) v *= inv;
    for (auto& v : yn.data) v *= inv;
  }

  ReconResult result;
  for (int k = 0; k < K; ++k) {
    ComplexNd d = dealias_2d(x, model, k, opts.mode, opts.axis);

    ComplexNd b;
    if (opts.spirit) {
      b = d;
      fft2_volume(b, true);
      b = apply_spirit(b, kernel);
      fft2_volume(b, false);
    } else {
      b = d;
    }

    x = data_consistency_2d(b, yn, y.mask, model.lambda_for_phase(k));

    if (opts.trace) {
      auto rescale = [&](ComplexNd v) {
        for (auto& e : v.data) e *= scale;
        return v;
      };
      result.trace.d.push_back(rescale(d));
      result.trace.b.push_back(rescale(std::move(b)));
      result.trace.x.push_back(rescale(x));
      if (ref_sos) {
        const RealNd snap = sos_combine(result.trace.x.back());
        result.trace.psnr_db.push_back(metrics::psnr(*ref_sos, snap).psnr_db);
      }
    }
  }

  result.coil_images = std::move(x);
  for (auto& v : result.coil_images.data) v *= scale;
  result.sos = sos_combine(result.coil_images);
  return result;
}

} // namespace pisf::recon
