#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pisf/autonet.hpp"
#include "pisf/rng.hpp"

namespace pisf::net {

struct GradcheckReport {
  double max_rel_err = 0.0;
  std::string worst_param;
  double min_kink_distance = std::numeric_limits<double>::infinity();
  bool kink_excluded = false; // evaluation point within 10*step of a kink
  size_t checked = 0;
};

template <typename T>
struct GradcheckEval {
  T loss = T(0); // scalar test loss
  double kink_distance = std::numeric_limits<double>::infinity();
};

// Central-difference check of analytic gradients on a scalar test loss.
//
// `run(with_grad)` evaluates the loss at the current parameter values; when
// with_grad is set it must leave fresh analytic gradients in the registered
// grad buffers (zeroing them first is the harness's job). Points whose
// forward pass comes within 10*step of a ReLU/shrinkage kink are flagged as
// excluded rather than failed. Relative error uses
// |fd - g| / max(|fd|, |g|, denom_floor), and up to samples_per_tensor
// entries of each tensor are probed.
template <typename T, typename RunFn>
GradcheckReport finite_diff_gradcheck(const std::vector<TensorReg<T>>& tensors, RunFn&& run,
                                      double step, int samples_per_tensor, uint64_t seed,
                                      double denom_floor = 1e-6) {
  GradcheckReport report;

  for (const auto& reg : tensors)
    if (reg.grad) std::fill(reg.grad->begin(), reg.grad->end(), T(0));

  const GradcheckEval<T> base = run(true);
  report.min_kink_distance = base.kink_distance;
  if (base.kink_distance < 10.0 * step) {
    report.kink_excluded = true;
    return report;
  }

  std::vector<std::vector<T>> analytic;
  analytic.reserve(tensors.size());
  for (const auto& reg : tensors) analytic.push_back(*reg.grad);

  rng::Stream rs(seed);
  for (size_t ti = 0; ti < tensors.size(); ++ti) {
    const auto& reg = tensors[ti];
    if (!reg.trainable || reg.value->empty()) continue;
    const size_t count = reg.value->size();
    const size_t probes = std::min<size_t>(static_cast<size_t>(samples_per_tensor), count);

    // sample distinct indices
    std::vector<size_t> idx(count);
    for (size_t i = 0; i < count; ++i) idx[i] = i;
    for (size_t i = 0; i < probes; ++i) {
      const size_t j = i + rs.below(count - i);
      std::swap(idx[i], idx[j]);
    }

    for (size_t i = 0; i < probes; ++i) {
      const size_t at = idx[i];
      const T saved = (*reg.value)[at];
      (*reg.value)[at] = saved + static_cast<T>(step);
      const T lp = run(false).loss;
      (*reg.value)[at] = saved - static_cast<T>(step);
      const T lm = run(false).loss;
      (*reg.value)[at] = saved;

      const double fd = (static_cast<double>(lp) - static_cast<double>(lm)) / (2.0 * step);
      const double an = static_cast<double>(analytic[ti][at]);
      const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), denom_floor});
      ++report.checked;
      if (rel > report.max_rel_err) {
        report.max_rel_err = rel;
        report.worst_param = reg.name + "[" + std::to_string(at) + "]";
      }
    }
  }
  return report;
}

} // namespace pisf::net
