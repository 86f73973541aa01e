#include "pisf/unroll.hpp"

#include <algorithm>
#include <cmath>

#include "pisf/errors.hpp"
#include "pisf/fftc.hpp"

namespace pisf::unroll {

Variant variant_from_name(const std::string& s) {
  if (s == "plain") return Variant::Plain;
  if (s == "advanced") return Variant::Advanced;
  throw ValidationError("unknown variant: " + s + " (expected plain|advanced)");
}

std::string variant_name(Variant v) {
  return v == Variant::Plain ? "plain" : "advanced";
}

// --- DealiasModule -----------------------------------------------------------

template <typename T>
DealiasModule<T>::DealiasModule(Variant v)
    : variant(v),
      conv_in(2, 64, 3),
      conv_out(64, 2, 3),
      bn_in(64),
      rb0(64),
      rb1(64),
      rb2(64),
      rb3(64),
      at(64) {}

template <typename T>
double DealiasModule<T>::Ctx::min_kink_distance() const {
  double k = rin.kink;
  for (const auto* rb : {&rb0, &rb1, &rb2, &rb3}) {
    k = std::min(k, rb->r1.kink);
    k = std::min(k, rb->r2.kink);
  }
  if (used_at) {
    k = std::min(k, at.kink);
    k = std::min(k, at.r1.kink);
  }
  return k;
}

template <typename T>
net::Tensor3<T> DealiasModule<T>::forward(const net::Tensor3<T>& x, net::BnMode mode, Ctx* ctx,
                                          bool update_running) {
  if (x.c != 2) throw ValidationError("dealias module: input must have 2 channels");
  auto h = conv_in.forward(x, ctx ? &ctx->cin : nullptr);
  h = bn_in.forward(h, mode, ctx ? &ctx->bin : nullptr, update_running);
  h = relu_forward(h, ctx ? &ctx->rin : nullptr);
  h = rb0.forward(h, mode, ctx ? &ctx->rb0 : nullptr, update_running);
  h = rb1.forward(h, mode, ctx ? &ctx->rb1 : nullptr, update_running);

  if (variant == Variant::Advanced) {
    typename net::AdaptiveThreshold<T>::Ctx local;
    auto out = at.forward(h, mode, ctx ? &ctx->at : &local, update_running);
    if (ctx) ctx->used_at = true;
    h = std::move(out.y);
  } else if (ctx) {
    ctx->used_at = false;
  }

  h = rb2.forward(h, mode, ctx ? &ctx->rb2 : nullptr, update_running);
  h = rb3.forward(h, mode, ctx ? &ctx->rb3 : nullptr, update_running);
  return conv_out.forward(h, ctx ? &ctx->cout : nullptr);
}

template <typename T>
net::Tensor3<T> DealiasModule<T>::backward(const net::Tensor3<T>& gy, const Ctx& ctx) {
  auto g = conv_out.backward(gy, ctx.cout);
  g = rb3.backward(g, ctx.rb3);
  g = rb2.backward(g, ctx.rb2);
  if (variant == Variant::Advanced) g = at.backward(g, ctx.at);
  g = rb1.backward(g, ctx.rb1);
  g = rb0.backward(g, ctx.rb0);
  g = relu_backward(g, ctx.rin);
  g = bn_in.backward(g, ctx.bin);
  return conv_in.backward(g, ctx.cin);
}

template <typename T>
void DealiasModule<T>::init(rng::Stream& rs) {
  conv_in.init(rs);
  rb0.init(rs);
  rb1.init(rs);
  at.init(rs); // drawn for both variants to keep streams aligned
  rb2.init(rs);
  rb3.init(rs);
  conv_out.init(rs);
}

template <typename T>
void DealiasModule<T>::collect(const std::string& prefix, std::vector<net::TensorReg<T>>& out) {
  conv_in.collect(prefix + ".n1.conv", out);
  bn_in.collect(prefix + ".n1.bn", out);
  rb0.collect(prefix + ".n1.rb0", out);
  rb1.collect(prefix + ".n1.rb1", out);
  if (variant == Variant::Advanced) at.collect(prefix + ".at", out);
  rb2.collect(prefix + ".n2.rb0", out);
  rb3.collect(prefix + ".n2.rb1", out);
  conv_out.collect(prefix + ".n2.conv", out);
}

template <typename T>
void DealiasModule<T>::zero_grad() {
  conv_in.zero_grad();
  bn_in.zero_grad();
  rb0.zero_grad();
  rb1.zero_grad();
  rb2.zero_grad();
  rb3.zero_grad();
  at.zero_grad();
  conv_out.zero_grad();
}

// --- complex bridge ----------------------------------------------------------

template <typename T>
net::Tensor3<T> complex_to_channels(const Nd<std::complex<T>>& x) {
  x.require_ndim(2, "complex_to_channels");
  const int64_t items = static_cast<int64_t>(x.dims[0]), n = static_cast<int64_t>(x.dims[1]);
  net::Tensor3<T> t(items, 2, n);
  for (int64_t i = 0; i < items; ++i) {
    T* re = t.seg(i, 0);
    T* im = t.seg(i, 1);
    const std::complex<T>* src = x.data.data() + i * n;
    for (int64_t j = 0; j < n; ++j) {
      re[j] = src[j].real();
      im[j] = src[j].imag();
    }
  }
  return t;
}

template <typename T>
Nd<std::complex<T>> channels_to_complex(const net::Tensor3<T>& t) {
  if (t.c != 2) throw ValidationError("channels_to_complex: need exactly 2 channels");
  Nd<std::complex<T>> x({static_cast<uint64_t>(t.b), static_cast<uint64_t>(t.l)});
  for (int64_t i = 0; i < t.b; ++i) {
    const T* re = t.seg(i, 0);
    const T* im = t.seg(i, 1);
    std::complex<T>* dst = x.data.data() + i * t.l;
    for (int64_t j = 0; j < t.l; ++j) dst[j] = std::complex<T>(re[j], im[j]);
  }
  return x;
}

template <typename T>
Nd<std::complex<T>> dealias_1d(const Nd<std::complex<T>>& x, DealiasModule<T>& m, net::BnMode mode,
                               typename DealiasModule<T>::Ctx* ctx, bool update_running) {
  if (x.dims[1] < 3) throw ValidationError("dealias_1d: signal length must be >= 3");
  auto t = complex_to_channels(x);
  auto y = m.forward(t, mode, ctx, update_running);
  return channels_to_complex(y);
}

// --- data consistency ----------------------------------------------------------

namespace {

template <typename T>
const sampling::Mask1D& mask_for(std::span<const sampling::Mask1D* const> masks, size_t item) {
  return masks.size() == 1 ? *masks[0] : *masks[item];
}

} // namespace

template <typename T>
Nd<std::complex<T>> data_consistency_1d(const Nd<std::complex<T>>& d,
                                        const Nd<std::complex<T>>& y,
                                        std::span<const sampling::Mask1D* const> masks, T lambda,
                                        DcCtx<T>* ctx) {
  d.require_ndim(2, "data_consistency_1d");
  if (d.dims != y.dims) throw ValidationError("data_consistency_1d: d/y shape mismatch");
  if (lambda < T(0)) throw ValidationError("data_consistency_1d: lambda must be >= 0");
  const uint64_t items = d.dims[0], n = d.dims[1];
  if (masks.size() != 1 && masks.size() != items)
    throw ValidationError("data_consistency_1d: mask count mismatch");
  for (size_t i = 0; i < masks.size(); ++i)
    if (masks[i]->n() != n) throw ValidationError("data_consistency_1d: mask length mismatch");

  Nd<std::complex<T>> x = d;
  fftc::fft1d_centered(x.data.data(), n, items, true); // dhat
  if (ctx) {
    ctx->dhat = x;
    ctx->yhat = y;
  }

  const T blend = lambda / (T(1) + lambda);
  const T inv1pl = T(1) / (T(1) + lambda);
  for (uint64_t i = 0; i < items; ++i) {
    const auto& m = mask_for<T>(masks, i);
    std::complex<T>* xr = x.data.data() + i * n;
    const std::complex<T>* yr = y.data.data() + i * n;
    for (uint64_t f = 0; f < n; ++f)
      if (m.sampled[f]) xr[f] = yr[f] * inv1pl + xr[f] * blend;
  }
  fftc::fft1d_centered(x.data.data(), n, items, false);
  return x;
}

template <typename T>
Nd<std::complex<T>> data_consistency_1d(const Nd<std::complex<T>>& d,
                                        const Nd<std::complex<T>>& y,
                                        const sampling::Mask1D& mask, T lambda, DcCtx<T>* ctx) {
  const sampling::Mask1D* mp = &mask;
  return data_consistency_1d<T>(d, y, std::span<const sampling::Mask1D* const>(&mp, 1), lambda,
                                ctx);
}

template <typename T>
void data_consistency_1d_backward(const Nd<std::complex<T>>& gx, const DcCtx<T>& ctx,
                                  std::span<const sampling::Mask1D* const> masks, T lambda,
                                  Nd<std::complex<T>>& gd, T& glambda) {
  const uint64_t items = gx.dims[0], n = gx.dims[1];
  gd = gx;
  fftc::fft1d_centered(gd.data.data(), n, items, true); // F gx (inverse-FT adjoint)

  const T blend = lambda / (T(1) + lambda);
  const T inv_sq = T(1) / ((T(1) + lambda) * (T(1) + lambda));
  double gl = 0.0;
  for (uint64_t i = 0; i < items; ++i) {
    const auto& m = mask_for<T>(masks, i);
    std::complex<T>* gr = gd.data.data() + i * n;
    const std::complex<T>* dh = ctx.dhat.data.data() + i * n;
    const std::complex<T>* yh = ctx.yhat.data.data() + i * n;
    for (uint64_t f = 0; f < n; ++f) {
      if (m.sampled[f]) {
        const std::complex<T> diff = dh[f] - yh[f];
        gl += static_cast<double>(gr[f].real() * diff.real() + gr[f].imag() * diff.imag());
        gr[f] *= blend;
      }
    }
  }
  glambda += static_cast<T>(gl) * inv_sq;
  fftc::fft1d_centered(gd.data.data(), n, items, false);
}

// --- model ----------------------------------------------------------------------

template <typename T>
void UnrolledModel<T>::init(uint64_t seed_) {
  seed = seed_;
  if (K < 1) throw ValidationError("unrolled model: K must be >= 1");
  lambdas.assign(static_cast<size_t>(K), T(1));
  glambdas.assign(static_cast<size_t>(K), T(0));
  modules.clear();
  const size_t nmod = per_phase_weights ? static_cast<size_t>(K) : 1;
  rng::Stream rs(seed_);
  for (size_t i = 0; i < nmod; ++i) {
    modules.emplace_back(variant);
    modules.back().init(rs);
  }
}

template <typename T>
void UnrolledModel<T>::collect(std::vector<net::TensorReg<T>>& out) {
  for (size_t i = 0; i < modules.size(); ++i)
    modules[i].collect("module" + std::to_string(i), out);
  out.push_back({"lambdas", &lambdas, &glambdas, {static_cast<uint64_t>(K)}, true});
}

template <typename T>
void UnrolledModel<T>::zero_grad() {
  for (auto& m : modules) m.zero_grad();
  std::fill(glambdas.begin(), glambdas.end(), T(0));
}

// --- unrolled forward/backward -----------------------------------------------------

template <typename T>
std::vector<Nd<std::complex<T>>> forward_unrolled(const Nd<std::complex<T>>& y,
                                                  std::span<const sampling::Mask1D* const> masks,
                                                  UnrolledModel<T>& model, net::BnMode mode,
                                                  int k_phases, std::vector<PhaseTape<T>>* tapes,
                                                  std::vector<T>* scales_out) {
  y.require_ndim(2, "forward_unrolled");
  const uint64_t items = y.dims[0], n = y.dims[1];
  const int K = k_phases > 0 ? k_phases : model.K;
  if (model.per_phase_weights && K > model.K)
    throw ValidationError("forward_unrolled: cannot extend a per-phase-weights model beyond K");

  // zero-filled initialization
  Nd<std::complex<T>> x = y;
  fftc::fft1d_centered(x.data.data(), n, items, false);

  std::vector<T> scales(items, T(1));
  if (model.normalization) {
    for (uint64_t i = 0; i < items; ++i) {
      T mx = T(0);
      for (uint64_t j = 0; j < n; ++j) mx = std::max(mx, std::abs(x.data[i * n + j]));
      scales[i] = mx > T(0) ? mx : T(1);
    }
  }
  if (scales_out) *scales_out = scales;

  Nd<std::complex<T>> yn = y;
  for (uint64_t i = 0; i < items; ++i) {
    const T inv = T(1) / scales[i];
    for (uint64_t j = 0; j < n; ++j) {
      x.data[i * n + j] *= inv;
      yn.data[i * n + j] *= inv;
    }
  }

  // keep existing tape storage alive so repeated steps reuse capacity
  if (tapes && tapes->size() != static_cast<size_t>(K)) tapes->resize(static_cast<size_t>(K));

  std::vector<Nd<std::complex<T>>> outputs;
  outputs.reserve(static_cast<size_t>(K));
  const bool training = tapes != nullptr;

  for (int k = 0; k < K; ++k) {
    auto& module = model.module_for_phase(k);
    typename DealiasModule<T>::Ctx* mctx = training ? &(*tapes)[static_cast<size_t>(k)].module_ctx : nullptr;
    DcCtx<T>* dctx = training ? &(*tapes)[static_cast<size_t>(k)].dc_ctx : nullptr;

    Nd<std::complex<T>> d = dealias_1d(x, module, mode, mctx, training);
    x = data_consistency_1d<T>(d, yn, masks, model.lambda_for_phase(k), dctx);

    Nd<std::complex<T>> out = x;
    for (uint64_t i = 0; i < items; ++i)
      for (uint64_t j = 0; j < n; ++j) out.data[i * n + j] *= scales[i];
    outputs.push_back(std::move(out));
  }
  return outputs;
}

template <typename T>
std::vector<Nd<std::complex<T>>> forward_unrolled(const Nd<std::complex<T>>& y,
                                                  const sampling::Mask1D& mask,
                                                  UnrolledModel<T>& model, net::BnMode mode) {
  const sampling::Mask1D* mp = &mask;
  return forward_unrolled<T>(y, std::span<const sampling::Mask1D* const>(&mp, 1), model, mode, 0,
                             nullptr, nullptr);
}

template <typename T>
void backward_unrolled(UnrolledModel<T>& model, std::vector<PhaseTape<T>>& tapes,
                       const std::vector<Nd<std::complex<T>>>& grads_per_phase,
                       std::span<const sampling::Mask1D* const> masks,
                       const std::vector<T>& scales) {
  const int K = static_cast<int>(tapes.size());
  if (static_cast<int>(grads_per_phase.size()) != K)
    throw ValidationError("backward_unrolled: need one gradient per phase");
  const uint64_t items = grads_per_phase[0].dims[0], n = grads_per_phase[0].dims[1];

  // gradient flowing into x^(k) in the normalized domain
  Nd<std::complex<T>> gx({items, n});

  for (int k = K - 1; k >= 0; --k) {
    // add the direct loss contribution (outputs were rescaled by `scales`)
    const auto& gout = grads_per_phase[static_cast<size_t>(k)];
    for (uint64_t i = 0; i < items; ++i)
      for (uint64_t j = 0; j < n; ++j) gx.data[i * n + j] += gout.data[i * n + j] * scales[i];

    Nd<std::complex<T>> gd;
    T& glam = model.glambdas[std::min<size_t>(static_cast<size_t>(k), model.glambdas.size() - 1)];
    data_consistency_1d_backward<T>(gx, tapes[static_cast<size_t>(k)].dc_ctx, masks,
                                    model.lambda_for_phase(k), gd, glam);

    auto& module = model.module_for_phase(k);
    auto gt = complex_to_channels(gd);
    auto gin = module.backward(gt, tapes[static_cast<size_t>(k)].module_ctx);
    gx = channels_to_complex(gin);
  }
}

// --- loss -----------------------------------------------------------------------

template <typename T>
T training_loss(const std::vector<Nd<std::complex<T>>>& outputs,
                const Nd<std::complex<T>>& x_ref) {
  if (outputs.empty()) throw ValidationError("training_loss: no phase outputs");
  const uint64_t items = x_ref.dims[0];
  double acc = 0.0;
  for (const auto& out : outputs) {
    if (out.dims != x_ref.dims) throw ValidationError("training_loss: shape mismatch");
    for (size_t i = 0; i < out.data.size(); ++i) {
      const auto d = out.data[i] - x_ref.data[i];
      acc += static_cast<double>(d.real()) * d.real() + static_cast<double>(d.imag()) * d.imag();
    }
  }
  return static_cast<T>(acc / (static_cast<double>(outputs.size()) * static_cast<double>(items)));
}

template <typename T>
std::vector<Nd<std::complex<T>>> training_loss_backward(
    const std::vector<Nd<std::complex<T>>>& outputs, const Nd<std::complex<T>>& x_ref) {
  const uint64_t items = x_ref.dims[0];
  const T w = T(2) / (static_cast<T>(outputs.size()) * static_cast<T>(items));
  std::vector<Nd<std::complex<T>>> grads;
  grads.reserve(outputs.size());
  for (const auto& out : outputs) {
    Nd<std::complex<T>> g = out;
    for (size_t i = 0; i < g.data.size(); ++i) g.data[i] = w * (out.data[i] - x_ref.data[i]);
    grads.push_back(std::move(g));
  }
  return grads;
}

// --- instantiations ----------------------------------------------------------------

template class DealiasModule<float>;
template class DealiasModule<double>;
template struct UnrolledModel<float>;
template struct UnrolledModel<double>;

#define PISF_INSTANTIATE_UNROLL(T)                                                              \
  template net::Tensor3<T> complex_to_channels(const Nd<std::complex<T>>&);                     \
  template Nd<std::complex<T>> channels_to_complex(const net::Tensor3<T>&);                     \
  template Nd<std::complex<T>> dealias_1d(const Nd<std::complex<T>>&, DealiasModule<T>&,        \
                                          net::BnMode, DealiasModule<T>::Ctx*, bool);           \
  template Nd<std::complex<T>> data_consistency_1d(const Nd<std::complex<T>>&,                  \
                                                   const Nd<std::complex<T>>&,                  \
                                                   std::span<const sampling::Mask1D* const>, T, \
                                                   DcCtx<T>*);                                  \
  template Nd<std::complex<T>> data_consistency_1d(const Nd<std::complex<T>>&,                  \
                                                   const Nd<std::complex<T>>&,                  \
                                                   const sampling::Mask1D&, T, DcCtx<T>*);      \
  template void data_consistency_1d_backward(const Nd<std::complex<T>>&, const DcCtx<T>&,       \
                                             std::span<const sampling::Mask1D* const>, T,       \
                                             Nd<std::complex<T>>&, T&);                         \
  template std::vector<Nd<std::complex<T>>> forward_unrolled(                                   \
      const Nd<std::complex<T>>&, std::span<const sampling::Mask1D* const>, UnrolledModel<T>&,  \
      net::BnMode, int, std::vector<PhaseTape<T>>*, std::vector<T>*);                           \
  template std::vector<Nd<std::complex<T>>> forward_unrolled(                                   \
      const Nd<std::complex<T>>&, const sampling::Mask1D&, UnrolledModel<T>&, net::BnMode);     \
  template void backward_unrolled(UnrolledModel<T>&, std::vector<PhaseTape<T>>&,                \
                                  const std::vector<Nd<std::complex<T>>>&,                      \
                                  std::span<const sampling::Mask1D* const>,                     \
                                  const std::vector<T>&);                                       \
  template T training_loss(const std::vector<Nd<std::complex<T>>>&, const Nd<std::complex<T>>&); \
  template std::vector<Nd<std::complex<T>>> training_loss_backward(                             \
      const std::vector<Nd<std::complex<T>>>&, const Nd<std::complex<T>>&);

PISF_INSTANTIATE_UNROLL(float)
PISF_INSTANTIATE_UNROLL(double)

} // namespace pisf::unroll
