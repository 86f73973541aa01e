#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "pisf/errors.hpp"
#include "pisf/rng.hpp"

namespace pisf::net {

// Logical shape is (batch, channels, length); storage is channel-major
// (c, b, l) so that a tensor doubles as a row-major (channels x batch*length)
// matrix for the conv GEMMs without any repacking.
template <typename T>
struct Tensor3 {
  int64_t b = 0, c = 0, l = 0;
  std::vector<T> v;

  Tensor3() = default;
  Tensor3(int64_t b_, int64_t c_, int64_t l_)
      : b(b_), c(c_), l(l_), v(static_cast<size_t>(b_ * c_ * l_)) {}

  T& at(int64_t bi, int64_t ci, int64_t li) { return v[static_cast<size_t>((ci * b + bi) * l + li)]; }
  const T& at(int64_t bi, int64_t ci, int64_t li) const {
    return v[static_cast<size_t>((ci * b + bi) * l + li)];
  }
  // contiguous (bi, ci) segment of length l
  T* seg(int64_t bi, int64_t ci) { return v.data() + (ci * b + bi) * l; }
  const T* seg(int64_t bi, int64_t ci) const { return v.data() + (ci * b + bi) * l; }
  // contiguous channel row of length b*l
  T* row(int64_t ci) { return v.data() + ci * b * l; }
  const T* row(int64_t ci) const { return v.data() + ci * b * l; }

  int64_t size() const { return b * c * l; }
  int64_t cols() const { return b * l; }
  bool same_shape(const Tensor3& o) const { return b == o.b && c == o.c && l == o.l; }
};

enum class BnMode { Train, Eval };

// Registry entry used by the optimizer, the checkpoint writer and the
// gradient checker. `grad` is null for non-trainable state (BN running
// statistics).
template <typename T>
struct TensorReg {
  std::string name;
  std::vector<T>* value = nullptr;
  std::vector<T>* grad = nullptr;
  std::vector<uint64_t> shape;
  bool trainable = false;
};

// ---------------------------------------------------------------------------

template <typename T>
class Conv1d {
public:
  Conv1d(int in_ch, int out_ch, int k);

  void init(rng::Stream& rs); // He-style uniform, zero bias

  struct Ctx {
    Tensor3<T> x;
  };

  Tensor3<T> forward(const Tensor3<T>& x, Ctx* ctx) const;
  // Accumulates weight/bias grads, returns the input grad.
  Tensor3<T> backward(const Tensor3<T>& gy, const Ctx& ctx);

  void collect(const std::string& prefix, std::vector<TensorReg<T>>& out);
  void zero_grad();

  int in_ch, out_ch, k;
  std::vector<T> w;  // (out, in, k) row-major
  std::vector<T> bias;
  std::vector<T> gw, gbias;
};

template <typename T>
class BatchNorm1d {
public:
  explicit BatchNorm1d(int ch);

  struct Ctx {
    Tensor3<T> xhat;
    std::vector<T> inv_std; // per channel
    int64_t count = 0;      // batch*length
    BnMode mode = BnMode::Train;
  };

  // In Train mode the batch statistics normalize the input; running stats
  // are only touched when update_running is set, so a gradient check can
  // re-evaluate the forward without side effects.
  Tensor3<T> forward(const Tensor3<T>& x, BnMode mode, Ctx* ctx, bool update_running);
  Tensor3<T> backward(const Tensor3<T>& gy, const Ctx& ctx);

  void collect(const std::string& prefix, std::vector<TensorReg<T>>& out);
  void zero_grad();

  int ch;
  std::vector<T> gamma, beta, ggamma, gbeta;
  std::vector<T> running_mean, running_var;
  T momentum = static_cast<T>(0.9);
  T eps = static_cast<T>(1e-5);
};

template <typename T>
struct ReluCtx {
  Tensor3<T> y;
  double kink = std::numeric_limits<double>::infinity(); // min |preactivation|
};

template <typename T>
Tensor3<T> relu_forward(const Tensor3<T>& x, ReluCtx<T>* ctx);
template <typename T>
Tensor3<T> relu_backward(const Tensor3<T>& gy, const ReluCtx<T>& ctx);

template <typename T>
class ResBlock {
public:
  explicit ResBlock(int ch);

  struct Ctx {
    typename Conv1d<T>::Ctx c1, c2;
    typename BatchNorm1d<T>::Ctx b1, b2;
    ReluCtx<T> r1, r2;
  };

  Tensor3<T> forward(const Tensor3<T>& x, BnMode mode, Ctx* ctx, bool update_running);
  Tensor3<T> backward(const Tensor3<T>& gy, const Ctx& ctx);

  void collect(const std::string& prefix, std::vector<TensorReg<T>>& out);
  void zero_grad();
  void init(rng::Stream& rs);

  Conv1d<T> conv1, conv2;
  BatchNorm1d<T> bn1, bn2;
};

// g = GAP(|r|) per (batch, channel)
template <typename T>
std::vector<T> gap_abs(const Tensor3<T>& r);

// Element-wise shrinkage with per-channel thresholds (broadcast over batch
// and length); theta must be nonnegative. x = 0 maps to 0.
template <typename T>
Tensor3<T> soft_threshold(const Tensor3<T>& x, const std::vector<T>& theta_per_channel);

template <typename T>
class AdaptiveThreshold {
public:
  explicit AdaptiveThreshold(int ch);

  struct Ctx {
    Tensor3<T> r;
    std::vector<T> g;     // (b*c)
    std::vector<T> alpha; // (b*c)
    std::vector<T> theta; // (b*c)
    typename Conv1d<T>::Ctx c1, c2;
    typename BatchNorm1d<T>::Ctx b1;
    ReluCtx<T> r1;
    double kink = std::numeric_limits<double>::infinity(); // min(|r|, ||r|-theta|)
  };

  struct Out {
    Tensor3<T> y;
    std::vector<T> theta; // (b*c), alpha .* g
  };

  Out forward(const Tensor3<T>& r, BnMode mode, Ctx* ctx, bool update_running);
  Tensor3<T> backward(const Tensor3<T>& gy, const Ctx& ctx);

  void collect(const std::string& prefix, std::vector<TensorReg<T>>& out);
  void zero_grad();
  void init(rng::Stream& rs);

  Conv1d<T> conv1, conv2; // 1x1
  BatchNorm1d<T> bn1;
};

// ---------------------------------------------------------------------------

template <typename T>
class Adam {
public:
  Adam(std::vector<TensorReg<T>> trainable, T lr);

  // Bias-corrected update from the accumulated grads. Throws RuntimeError
  // naming the parameter if a gradient is non-finite.
  void step();
  void end_epoch() { lr *= lr_decay; } // exponential decay, caller marks epochs
  void zero_grad();

  T lr;
  T beta1 = static_cast<T>(0.9);
  T beta2 = static_cast<T>(0.999);
  T eps = static_cast<T>(1e-8);
  T lr_decay = static_cast<T>(0.99);
  int64_t t = 0;

  const std::vector<TensorReg<T>>& params() const { return params_; }

private:
  std::vector<TensorReg<T>> params_;
  std::vector<std::vector<T>> m_, v_;
};

} // namespace pisf::net
