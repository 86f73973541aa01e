#include "pisf/autonet.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstring>

namespace pisf::net {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

template <typename T>
std::vector<T>& scratch_a() {
  thread_local std::vector<T> buf;
  return buf;
}
template <typename T>
std::vector<T>& scratch_b() {
  thread_local std::vector<T> buf;
  return buf;
}

// Gathers the shifted input rows for a same-padded k-tap correlation:
// col[(ci*k + s), bi*l + li] = x[bi, ci, li + s - pad] (zero outside).
template <typename T>
void im2col(const Tensor3<T>& x, int k, std::vector<T>& col) {
  const int64_t N = x.cols(), l = x.l;
  const int pad = (k - 1) / 2;
  col.resize(static_cast<size_t>(x.c * k * N));
  for (int64_t ci = 0; ci < x.c; ++ci) {
    for (int s = 0; s < k; ++s) {
      const int shift = s - pad;
      T* dst = col.data() + (ci * k + s) * N;
      for (int64_t bi = 0; bi < x.b; ++bi) {
        const T* src = x.seg(bi, ci);
        T* d = dst + bi * l;
        if (shift == 0) {
          std::memcpy(d, src, sizeof(T) * static_cast<size_t>(l));
        } else if (shift < 0) {
          d[0] = T(0);
          std::memcpy(d + 1, src, sizeof(T) * static_cast<size_t>(l - 1));
        } else {
          std::memcpy(d, src + 1, sizeof(T) * static_cast<size_t>(l - 1));
          d[l - 1] = T(0);
        }
      }
    }
  }
}

} // namespace

// --- Conv1d -----------------------------------------------------------------

template <typename T>
Conv1d<T>::Conv1d(int in_ch_, int out_ch_, int k_) : in_ch(in_ch_), out_ch(out_ch_), k(k_) {
  if (k != 1 && k != 3) throw ValidationError("conv1d: kernel size must be 1 or 3");
  w.assign(static_cast<size_t>(out_ch) * in_ch * k, T(0));
  bias.assign(static_cast<size_t>(out_ch), T(0));
  gw.assign(w.size(), T(0));
  gbias.assign(bias.size(), T(0));
}

template <typename T>
void Conv1d<T>::init(rng::Stream& rs) {
  const double bound = std::sqrt(6.0 / (static_cast<double>(in_ch) * k));
  for (auto& x : w) x = static_cast<T>(rs.uniform(-bound, bound));
  std::fill(bias.begin(), bias.end(), T(0));
}

template <typename T>
Tensor3<T> Conv1d<T>::forward(const Tensor3<T>& x, Ctx* ctx) const {
  if (x.c != in_ch) throw ValidationError("conv1d: channel mismatch");
  if (k == 3 && x.l < 1) throw ValidationError("conv1d: empty signal");
  const int64_t N = x.cols();
  Tensor3<T> y(x.b, out_ch, x.l);

  CMapRM<T> wm(w.data(), out_ch, static_cast<int64_t>(in_ch) * k);
  MapRM<T> ym(y.v.data(), out_ch, N);
  if (k == 1) {
    CMapRM<T> xm(x.v.data(), in_ch, N);
    ym.noalias() = wm * xm;
  } else {
    auto& col = scratch_a<T>();
    im2col(x, k, col);
    CMapRM<T> bm(col.data(), static_cast<int64_t>(in_ch) * k, N);
    ym.noalias() = wm * bm;
  }
  for (int64_t oi = 0; oi < out_ch; ++oi) {
    T* row = y.row(oi);
    const T bv = bias[static_cast<size_t>(oi)];
    for (int64_t j = 0; j < N; ++j) row[j] += bv;
  }
  if (ctx) ctx->x = x;
  return y;
}

template <typename T>
Tensor3<T> Conv1d<T>::backward(const Tensor3<T>& gy, const Ctx& ctx) {
  const Tensor3<T>& x = ctx.x;
  const int64_t N = x.cols();
  Tensor3<T> gx(x.b, in_ch, x.l);

  CMapRM<T> gym(gy.v.data(), out_ch, N);
  CMapRM<T> wm(w.data(), out_ch, static_cast<int64_t>(in_ch) * k);
  MapRM<T> gwm(gw.data(), out_ch, static_cast<int64_t>(in_ch) * k);

  for (int64_t oi = 0; oi < out_ch; ++oi) {
    const T* row = gy.row(oi);
    T s = T(0);
    for (int64_t j = 0; j < N; ++j) s += row[j];
    gbias[static_cast<size_t>(oi)] += s;
  }

  if (k == 1) {
    CMapRM<T> xm(x.v.data(), in_ch, N);
    gwm.noalias() += gym * xm.transpose();
    MapRM<T> gxm(gx.v.data(), in_ch, N);
    gxm.noalias() = wm.transpose() * gym;
    return gx;
  }

  auto& col = scratch_a<T>();
  im2col(x, k, col);
  CMapRM<T> bm(col.data(), static_cast<int64_t>(in_ch) * k, N);
  gwm.noalias() += gym * bm.transpose();

  auto& dcol = scratch_b<T>();
  dcol.resize(static_cast<size_t>(in_ch) * k * N);
  MapRM<T> dm(dcol.data(), static_cast<int64_t>(in_ch) * k, N);
  dm.noalias() = wm.transpose() * gym;

  // col2im: scatter-add the shifted rows back
  const int pad = (k - 1) / 2;
  std::fill(gx.v.begin(), gx.v.end(), T(0));
  for (int64_t ci = 0; ci < in_ch; ++ci) {
    for (int s = 0; s < k; ++s) {
      const int shift = s - pad;
      const T* src = dcol.data() + (ci * k + s) * N;
      for (int64_t bi = 0; bi < x.b; ++bi) {
        T* dst = gx.seg(bi, ci);
        const T* sp = src + bi * x.l;
        if (shift == 0) {
          for (int64_t li = 0; li < x.l; ++li) dst[li] += sp[li];
        } else if (shift < 0) {
          for (int64_t li = 1; li < x.l; ++li) dst[li - 1] += sp[li];
        } else {
          for (int64_t li = 0; li < x.l - 1; ++li) dst[li + 1] += sp[li];
        }
      }
    }
  }
  return gx;
}

template <typename T>
void Conv1d<T>::collect(const std::string& prefix, std::vector<TensorReg<T>>& out) {
  out.push_back({prefix + ".w", &w, &gw,
                 {static_cast<uint64_t>(out_ch), static_cast<uint64_t>(in_ch),
                  static_cast<uint64_t>(k)},
                 true});
  out.push_back({prefix + ".b", &bias, &gbias, {static_cast<uint64_t>(out_ch)}, true});
}

template <typename T>
void Conv1d<T>::zero_grad() {
  std::fill(gw.begin(), gw.end(), T(0));
  std::fill(gbias.begin(), gbias.end(), T(0));
}

// --- BatchNorm1d ------------------------------------------------------------

template <typename T>
BatchNorm1d<T>::BatchNorm1d(int ch_) : ch(ch_) {
  gamma.assign(static_cast<size_t>(ch), T(1));
  beta.assign(static_cast<size_t>(ch), T(0));
  ggamma.assign(static_cast<size_t>(ch), T(0));
  gbeta.assign(static_cast<size_t>(ch), T(0));
  running_mean.assign(static_cast<size_t>(ch), T(0));
  running_var.assign(static_cast<size_t>(ch), T(1));
}

template <typename T>
Tensor3<T> BatchNorm1d<T>::forward(const Tensor3<T>& x, BnMode mode, Ctx* ctx,
                                   bool update_running) {
  if (x.c != ch) throw ValidationError("batchnorm: channel mismatch");
  const int64_t N = x.cols();
  if (mode == BnMode::Train && N <= 1)
    throw ValidationError("batchnorm: train mode needs more than one element per channel");

  Tensor3<T> y(x.b, x.c, x.l);
  if (ctx) {
    ctx->xhat = Tensor3<T>(x.b, x.c, x.l);
    ctx->inv_std.assign(static_cast<size_t>(ch), T(0));
    ctx->count = N;
    ctx->mode = mode;
  }

  for (int64_t ci = 0; ci < ch; ++ci) {
    const T* xr = x.row(ci);
    T* yr = y.row(ci);
    T mean, var;
    if (mode == BnMode::Train) {
      T s = T(0);
      for (int64_t j = 0; j < N; ++j) s += xr[j];
      mean = s / static_cast<T>(N);
      T q = T(0);
      for (int64_t j = 0; j < N; ++j) {
        const T d = xr[j] - mean;
        q += d * d;
      }
      var = q / static_cast<T>(N);
      if (update_running) {
        running_mean[static_cast<size_t>(ci)] =
            momentum * running_mean[static_cast<size_t>(ci)] + (T(1) - momentum) * mean;
        running_var[static_cast<size_t>(ci)] =
            momentum * running_var[static_cast<size_t>(ci)] + (T(1) - momentum) * var;
      }
    } else {
      mean = running_mean[static_cast<size_t>(ci)];
      var = running_var[static_cast<size_t>(ci)];
    }
    const T inv = T(1) / std::sqrt(var + eps);
    const T g = gamma[static_cast<size_t>(ci)], bta = beta[static_cast<size_t>(ci)];
    if (ctx) {
      T* xh = ctx->xhat.row(ci);
      for (int64_t j = 0; j < N; ++j) {
        xh[j] = (xr[j] - mean) * inv;
        yr[j] = g * xh[j] + bta;
      }
      ctx->inv_std[static_cast<size_t>(ci)] = inv;
    } else {
      for (int64_t j = 0; j < N; ++j) yr[j] = g * (xr[j] - mean) * inv + bta;
    }
  }
  return y;
}

template <typename T>
Tensor3<T> BatchNorm1d<T>::backward(const Tensor3<T>& gy, const Ctx& ctx) {
  const int64_t N = ctx.count;
  Tensor3<T> gx(gy.b, gy.c, gy.l);

  for (int64_t ci = 0; ci < ch; ++ci) {
    const T* gr = gy.row(ci);
    const T* xh = ctx.xhat.row(ci);
    T* gxr = gx.row(ci);
    T sum_g = T(0), sum_gx = T(0);
    for (int64_t j = 0; j < N; ++j) {
      sum_g += gr[j];
      sum_gx += gr[j] * xh[j];
    }
    ggamma[static_cast<size_t>(ci)] += sum_gx;
    gbeta[static_cast<size_t>(ci)] += sum_g;

    const T g = gamma[static_cast<size_t>(ci)];
    const T inv = ctx.inv_std[static_cast<size_t>(ci)];
    if (ctx.mode == BnMode::Train) {
      const T a = g * inv / static_cast<T>(N);
      for (int64_t j = 0; j < N; ++j)
        gxr[j] = a * (static_cast<T>(N) * gr[j] - sum_g - xh[j] * sum_gx);
    } else {
      const T a = g * inv;
      for (int64_t j = 0; j < N; ++j) gxr[j] = a * gr[j];
    }
  }
  return gx;
}

template <typename T>
void BatchNorm1d<T>::collect(const std::string& prefix, std::vector<TensorReg<T>>& out) {
  const uint64_t c = static_cast<uint64_t>(ch);
  out.push_back({prefix + ".gamma", &gamma, &ggamma, {c}, true});
  out.push_back({prefix + ".beta", &beta, &gbeta, {c}, true});
  out.push_back({prefix + ".running_mean", &running_mean, nullptr, {c}, false});
  out.push_back({prefix + ".running_var", &running_var, nullptr, {c}, false});
}

template <typename T>
void BatchNorm1d<T>::zero_grad() {
  std::fill(ggamma.begin(), ggamma.end(), T(0));
  std::fill(gbeta.begin(), gbeta.end(), T(0));
}

// --- ReLU -------------------------------------------------------------------

template <typename T>
Tensor3<T> relu_forward(const Tensor3<T>& x, ReluCtx<T>* ctx) {
  Tensor3<T> y(x.b, x.c, x.l);
  double kink = std::numeric_limits<double>::infinity();
  for (int64_t i = 0; i < x.size(); ++i) {
    const T v = x.v[static_cast<size_t>(i)];
    y.v[static_cast<size_t>(i)] = v > T(0) ? v : T(0);
    kink = std::min(kink, static_cast<double>(std::abs(v)));
  }
  if (ctx) {
    ctx->y = y;
    ctx->kink = kink;
  }
  return y;
}

template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& gy, const ReluCtx<T>& ctx) {
  Tensor3<T> gx(gy.b, gy.c, gy.l);
  for (int64_t i = 0; i < gy.size(); ++i)
    gx.v[static_cast<size_t>(i)] =
        ctx.y.v[static_cast<size_t>(i)] > T(0) ? gy.v[static_cast<size_t>(i)] : T(0);
  return gx;
}

// --- ResBlock ----------------------------------------------------------------

template <typename T>
ResBlock<T>::ResBlock(int ch) : conv1(ch, ch, 3), conv2(ch, ch, 3), bn1(ch), bn2(ch) {}

template <typename T>
void ResBlock<T>::init(rng::Stream& rs) {
  conv1.init(rs);
  conv2.init(rs);
}

template <typename T>
Tensor3<T> ResBlock<T>::forward(const Tensor3<T>& x, BnMode mode, Ctx* ctx, bool update_running) {
  auto h = conv1.forward(x, ctx ? &ctx->c1 : nullptr);
  h = bn1.forward(h, mode, ctx ? &ctx->b1 : nullptr, update_running);
  h = relu_forward(h, ctx ? &ctx->r1 : nullptr);
  h = conv2.forward(h, ctx ? &ctx->c2 : nullptr);
  h = bn2.forward(h, mode, ctx ? &ctx->b2 : nullptr, update_running);
  for (int64_t i = 0; i < h.size(); ++i) h.v[static_cast<size_t>(i)] += x.v[static_cast<size_t>(i)];
  return relu_forward(h, ctx ? &ctx->r2 : nullptr);
}

template <typename T>
Tensor3<T> ResBlock<T>::backward(const Tensor3<T>& gy, const Ctx& ctx) {
  Tensor3<T> gs = relu_backward(gy, ctx.r2);
  Tensor3<T> g = bn2.backward(gs, ctx.b2);
  g = conv2.backward(g, ctx.c2);
  g = relu_backward(g, ctx.r1);
  g = bn1.backward(g, ctx.b1);
  g = conv1.backward(g, ctx.c1);
  for (int64_t i = 0; i < g.size(); ++i) g.v[static_cast<size_t>(i)] += gs.v[static_cast<size_t>(i)];
  return g;
}

template <typename T>
void ResBlock<T>::collect(const std::string& prefix, std::vector<TensorReg<T>>& out) {
  conv1.collect(prefix + ".conv1", out);
  bn1.collect(prefix + ".bn1", out);
  conv2.collect(prefix + ".conv2", out);
  bn2.collect(prefix + ".bn2", out);
}

template <typename T>
void ResBlock<T>::zero_grad() {
  conv1.zero_grad();
  bn1.zero_grad();
  conv2.zero_grad();
  bn2.zero_grad();
}

// --- GAP and soft threshold ---------------------------------------------------

template <typename T>
std::vector<T> gap_abs(const Tensor3<T>& r) {
  if (r.l < 1) throw ValidationError("gap_abs: empty length axis");
  std::vector<T> g(static_cast<size_t>(r.b * r.c), T(0));
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) {
      const T* s = r.seg(bi, ci);
      T acc = T(0);
      for (int64_t li = 0; li < r.l; ++li) acc += std::abs(s[li]);
      g[static_cast<size_t>(bi * r.c + ci)] = acc / static_cast<T>(r.l);
    }
  return g;
}

template <typename T>
Tensor3<T> soft_threshold(const Tensor3<T>& x, const std::vector<T>& theta_per_channel) {
  if (static_cast<int64_t>(theta_per_channel.size()) != x.c)
    throw ValidationError("soft_threshold: theta size must match channels");
  for (T t : theta_per_channel)
    if (t < T(0)) throw ValidationError("soft_threshold: negative threshold");
  Tensor3<T> y(x.b, x.c, x.l);
  for (int64_t bi = 0; bi < x.b; ++bi)
    for (int64_t ci = 0; ci < x.c; ++ci) {
      const T th = theta_per_channel[static_cast<size_t>(ci)];
      const T* s = x.seg(bi, ci);
      T* d = y.seg(bi, ci);
      for (int64_t li = 0; li < x.l; ++li) {
        const T v = s[li];
        const T m = std::abs(v) - th;
        d[li] = m > T(0) ? (v > T(0) ? m : -m) : T(0);
      }
    }
  return y;
}

// --- AdaptiveThreshold --------------------------------------------------------

template <typename T>
AdaptiveThreshold<T>::AdaptiveThreshold(int ch) : conv1(ch, ch, 1), conv2(ch, ch, 1), bn1(ch) {}

template <typename T>
void AdaptiveThreshold<T>::init(rng::Stream& rs) {
  conv1.init(rs);
  conv2.init(rs);
}

template <typename T>
typename AdaptiveThreshold<T>::Out AdaptiveThreshold<T>::forward(const Tensor3<T>& r, BnMode mode,
                                                                 Ctx* ctx, bool update_running) {
  if (r.c != conv1.in_ch) throw ValidationError("adaptive_threshold: channel mismatch");
  std::vector<T> g = gap_abs(r);

  Tensor3<T> gt(r.b, r.c, 1);
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) gt.at(bi, ci, 0) = g[static_cast<size_t>(bi * r.c + ci)];

  auto t1 = conv1.forward(gt, ctx ? &ctx->c1 : nullptr);
  auto t2 = bn1.forward(t1, mode, ctx ? &ctx->b1 : nullptr, update_running);
  auto t3 = relu_forward(t2, ctx ? &ctx->r1 : nullptr);
  auto t4 = conv2.forward(t3, ctx ? &ctx->c2 : nullptr);

  std::vector<T> alpha(g.size()), theta(g.size());
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) {
      const size_t idx = static_cast<size_t>(bi * r.c + ci);
      const T z = t4.at(bi, ci, 0);
      const T a = z >= T(0) ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
      alpha[idx] = a;
      theta[idx] = a * g[idx];
    }

  Out out;
  out.theta = theta;
  out.y = Tensor3<T>(r.b, r.c, r.l);
  double kink = std::numeric_limits<double>::infinity();
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) {
      const T th = theta[static_cast<size_t>(bi * r.c + ci)];
      const T* s = r.seg(bi, ci);
      T* d = out.y.seg(bi, ci);
      for (int64_t li = 0; li < r.l; ++li) {
        const T v = s[li];
        const T av = std::abs(v);
        const T m = av - th;
        d[li] = m > T(0) ? (v > T(0) ? m : -m) : T(0);
        kink = std::min(kink, std::min(static_cast<double>(av), std::abs(static_cast<double>(m))));
      }
    }

  if (ctx) {
    ctx->r = r;
    ctx->g = std::move(g);
    ctx->alpha = alpha;
    ctx->theta = theta;
    ctx->kink = kink;
  }
  return out;
}

template <typename T>
Tensor3<T> AdaptiveThreshold<T>::backward(const Tensor3<T>& gy, const Ctx& ctx) {
  const Tensor3<T>& r = ctx.r;
  Tensor3<T> gr(r.b, r.c, r.l);
  std::vector<T> gtheta(ctx.theta.size(), T(0));

  // shrinkage: pass-through where |r| > theta, -sign(r) into theta
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) {
      const size_t idx = static_cast<size_t>(bi * r.c + ci);
      const T th = ctx.theta[idx];
      const T* s = r.seg(bi, ci);
      const T* gyr = gy.seg(bi, ci);
      T* d = gr.seg(bi, ci);
      T acc = T(0);
      for (int64_t li = 0; li < r.l; ++li) {
        const T v = s[li];
        if (std::abs(v) > th) {
          d[li] = gyr[li];
          acc += v > T(0) ? -gyr[li] : gyr[li];
        } else {
          d[li] = T(0);
        }
      }
      gtheta[idx] = acc;
    }

  // theta = alpha .* g
  Tensor3<T> gt4(r.b, r.c, 1);
  std::vector<T> gg(ctx.g.size());
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) {
      const size_t idx = static_cast<size_t>(bi * r.c + ci);
      const T a = ctx.alpha[idx];
      gt4.at(bi, ci, 0) = gtheta[idx] * ctx.g[idx] * a * (T(1) - a); // through sigmoid
      gg[idx] = gtheta[idx] * a;
    }

  auto g3 = conv2.backward(gt4, ctx.c2);
  auto g2 = relu_backward(g3, ctx.r1);
  auto g1 = bn1.backward(g2, ctx.b1);
  auto g0 = conv1.backward(g1, ctx.c1);

  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci)
      gg[static_cast<size_t>(bi * r.c + ci)] += g0.at(bi, ci, 0);

  // g = mean_l |r|
  const T invl = T(1) / static_cast<T>(r.l);
  for (int64_t bi = 0; bi < r.b; ++bi)
    for (int64_t ci = 0; ci < r.c; ++ci) {
      const T gv = gg[static_cast<size_t>(bi * r.c + ci)] * invl;
      const T* s = r.seg(bi, ci);
      T* d = gr.seg(bi, ci);
      for (int64_t li = 0; li < r.l; ++li) {
        if (s[li] > T(0))
          d[li] += gv;
        else if (s[li] < T(0))
          d[li] -= gv;
      }
    }
  return gr;
}

template <typename T>
void AdaptiveThreshold<T>::collect(const std::string& prefix, std::vector<TensorReg<T>>& out) {
  conv1.collect(prefix + ".conv1", out);
  bn1.collect(prefix + ".bn1", out);
  conv2.collect(prefix + ".conv2", out);
}

template <typename T>
void AdaptiveThreshold<T>::zero_grad() {
  conv1.zero_grad();
  bn1.zero_grad();
  conv2.zero_grad();
}

// --- Adam ---------------------------------------------------------------------

template <typename T>
Adam<T>::Adam(std::vector<TensorReg<T>> trainable, T lr_) : lr(lr_), params_(std::move(trainable)) {
  for (const auto& p : params_) {
    m_.emplace_back(p.value->size(), T(0));
    v_.emplace_back(p.value->size(), T(0));
  }
}

template <typename T>
void Adam<T>::step() {
  ++t;
  const T bc1 = T(1) - std::pow(beta1, static_cast<T>(t));
  const T bc2 = T(1) - std::pow(beta2, static_cast<T>(t));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    auto& p = params_[pi];
    auto& val = *p.value;
    const auto& grad = *p.grad;
    auto& m = m_[pi];
    auto& v = v_[pi];
    for (size_t i = 0; i < val.size(); ++i) {
      const T g = grad[i];
      if (!std::isfinite(g))
        throw RuntimeError("adam: non-finite gradient in parameter " + p.name);
      m[i] = beta1 * m[i] + (T(1) - beta1) * g;
      v[i] = beta2 * v[i] + (T(1) - beta2) * g * g;
      const T mhat = m[i] / bc1;
      const T vhat = v[i] / bc2;
      val[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename T>
void Adam<T>::zero_grad() {
  for (auto& p : params_) std::fill(p.grad->begin(), p.grad->end(), T(0));
}

// --- instantiations -------------------------------------------------------------

template class Conv1d<float>;
template class Conv1d<double>;
template class BatchNorm1d<float>;
template class BatchNorm1d<double>;
template class ResBlock<float>;
template class ResBlock<double>;
template class AdaptiveThreshold<float>;
template class AdaptiveThreshold<double>;
template class Adam<float>;
template class Adam<double>;

template Tensor3<float> relu_forward(const Tensor3<float>&, ReluCtx<float>*);
template Tensor3<double> relu_forward(const Tensor3<double>&, ReluCtx<double>*);
template Tensor3<float> relu_backward(const Tensor3<float>&, const ReluCtx<float>&);
template Tensor3<double> relu_backward(const Tensor3<double>&, const ReluCtx<double>&);
template std::vector<float> gap_abs(const Tensor3<float>&);
template std::vector<double> gap_abs(const Tensor3<double>&);
template Tensor3<float> soft_threshold(const Tensor3<float>&, const std::vector<float>&);
template Tensor3<double> soft_threshold(const Tensor3<double>&, const std::vector<double>&);

} // namespace pisf::net
