#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "pisf/autonet.hpp"
#include "pisf/nd.hpp"
#include "pisf/sampling.hpp"

namespace pisf::unroll {

enum class Variant { Plain, Advanced };

Variant variant_from_name(const std::string& s);
std::string variant_name(Variant v);

// One de-aliasing module D: N2[soft(N1(x); theta)] with
//   N1 = conv(2->64, k3) + BN + ReLU + 2 ResBlocks
//   A  = adaptive per-channel threshold (Advanced only)
//   N2 = 2 ResBlocks + conv(64->2, k3)
// Plain drops the shrinkage entirely and feeds N1's output straight to N2.
template <typename T>
class DealiasModule {
public:
  explicit DealiasModule(Variant v);

  struct Ctx {
    typename net::Conv1d<T>::Ctx cin, cout;
    typename net::BatchNorm1d<T>::Ctx bin;
    net::ReluCtx<T> rin;
    typename net::ResBlock<T>::Ctx rb0, rb1, rb2, rb3;
    typename net::AdaptiveThreshold<T>::Ctx at;
    bool used_at = false;

    // Distance of the closest pre-activation to a ReLU/shrinkage kink,
    // for the finite-difference harness.
    double min_kink_distance() const;
  };

  net::Tensor3<T> forward(const net::Tensor3<T>& x, net::BnMode mode, Ctx* ctx,
                          bool update_running);
  net::Tensor3<T> backward(const net::Tensor3<T>& gy, const Ctx& ctx);

  void init(rng::Stream& rs);
  void collect(const std::string& prefix, std::vector<net::TensorReg<T>>& out);
  void zero_grad();

  Variant variant;
  net::Conv1d<T> conv_in, conv_out;
  net::BatchNorm1d<T> bn_in;
  net::ResBlock<T> rb0, rb1, rb2, rb3;
  net::AdaptiveThreshold<T> at;
};

// Lossless bridge between complex signals (items, n) and real channel
// tensors (items, 2, n).
template <typename T>
net::Tensor3<T> complex_to_channels(const Nd<std::complex<T>>& x);
template <typename T>
Nd<std::complex<T>> channels_to_complex(const net::Tensor3<T>& t);

// Applies the module to a batch of complex signals.
template <typename T>
Nd<std::complex<T>> dealias_1d(const Nd<std::complex<T>>& x, DealiasModule<T>& m,
                               net::BnMode mode, typename DealiasModule<T>::Ctx* ctx,
                               bool update_running = false);

// Closed-form data consistency (the exact minimizer of the lambda-blend
// problem; U*U is diagonal in k-space):
//   xhat(f) = (yhat(f) + lambda dhat(f)) / (1 + lambda)  where sampled
//   xhat(f) = dhat(f)                                    elsewhere
template <typename T>
struct DcCtx {
  Nd<std::complex<T>> dhat; // spectrum of d
  Nd<std::complex<T>> yhat; // y is already k-space; kept for the lambda grad
};

// masks: one per item, or a single mask shared by all items.
template <typename T>
Nd<std::complex<T>> data_consistency_1d(const Nd<std::complex<T>>& d,
                                        const Nd<std::complex<T>>& y,
                                        std::span<const sampling::Mask1D* const> masks, T lambda,
                                        DcCtx<T>* ctx);

template <typename T>
Nd<std::complex<T>> data_consistency_1d(const Nd<std::complex<T>>& d,
                                        const Nd<std::complex<T>>& y,
                                        const sampling::Mask1D& mask, T lambda,
                                        DcCtx<T>* ctx = nullptr);

// Backward of the DC step: gd = F* (w .* F gx) with w = lambda/(1+lambda) on
// the mask and 1 elsewhere; the lambda gradient accumulates
// Re(conj(F gx) . (dhat - yhat)) / (1+lambda)^2 over sampled frequencies.
template <typename T>
void data_consistency_1d_backward(const Nd<std::complex<T>>& gx, const DcCtx<T>& ctx,
                                  std::span<const sampling::Mask1D* const> masks, T lambda,
                                  Nd<std::complex<T>>& gd, T& glambda);

// ---------------------------------------------------------------------------

template <typename T>
struct UnrolledModel {
  int K = 10;
  Variant variant = Variant::Advanced;
  bool per_phase_weights = false; // default: one shared module
  bool normalization = true;      // per-item max-magnitude input scaling
  uint64_t seed = 0;
  std::vector<T> lambdas; // K values, kept >= 0
  std::vector<T> glambdas;
  std::vector<DealiasModule<T>> modules; // 1 (shared) or K
  std::string training_config_json;      // echoed into the checkpoint

  void init(uint64_t seed);
  DealiasModule<T>& module_for_phase(int k) {
    return modules[per_phase_weights ? static_cast<size_t>(k) : 0];
  }
  const DealiasModule<T>& module_for_phase(int k) const {
    return modules[per_phase_weights ? static_cast<size_t>(k) : 0];
  }
  // effective lambda for phase k (clamped to the trained range when a K
  // override runs a shared-weights model for more phases)
  T lambda_for_phase(int k) const {
    const size_t i = std::min<size_t>(static_cast<size_t>(k), lambdas.size() - 1);
    return lambdas[i];
  }

  void collect(std::vector<net::TensorReg<T>>& out);
  void zero_grad();
};

template <typename T>
struct PhaseTape {
  typename DealiasModule<T>::Ctx module_ctx;
  DcCtx<T> dc_ctx;
};

// Runs the K phases from zero-filled initialization. Returns all K
// intermediate estimates in the caller's scale (normalization is applied
// internally and undone on output). When `tapes` is non-null the call runs
// in training mode semantics and records everything backward_unrolled
// needs; `scales` (per item) is filled either way when non-null.
template <typename T>
std::vector<Nd<std::complex<T>>> forward_unrolled(const Nd<std::complex<T>>& y,
                                                  std::span<const sampling::Mask1D* const> masks,
                                                  UnrolledModel<T>& model, net::BnMode mode,
                                                  int k_phases, // <=0: model.K
                                                  std::vector<PhaseTape<T>>* tapes,
                                                  std::vector<T>* scales);

template <typename T>
std::vector<Nd<std::complex<T>>> forward_unrolled(const Nd<std::complex<T>>& y,
                                                  const sampling::Mask1D& mask,
                                                  UnrolledModel<T>& model,
                                                  net::BnMode mode = net::BnMode::Eval);

// grads_per_phase holds dLoss/d(output_k) in the caller's scale.
template <typename T>
void backward_unrolled(UnrolledModel<T>& model, std::vector<PhaseTape<T>>& tapes,
                       const std::vector<Nd<std::complex<T>>>& grads_per_phase,
                       std::span<const sampling::Mask1D* const> masks,
                       const std::vector<T>& scales);

// Mean over phases and samples of the squared complex L2 distance.
template <typename T>
T training_loss(const std::vector<Nd<std::complex<T>>>& outputs, const Nd<std::complex<T>>& x_ref);

template <typename T>
std::vector<Nd<std::complex<T>>> training_loss_backward(
    const std::vector<Nd<std::complex<T>>>& outputs, const Nd<std::complex<T>>& x_ref);

} // namespace pisf::unroll
