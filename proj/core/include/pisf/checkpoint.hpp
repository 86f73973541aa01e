#pragma once

#include <string>

#include "pisf/unroll.hpp"

namespace pisf::unroll {

// Checkpoint directory: manifest.json (model geometry, lambda list,
// normalization mode, training config echo, seed, layer table) plus one
// ArrayFile per parameter tensor and per batch-norm running statistic.
// Loading then re-saving reproduces every tensor payload byte for byte.
void save_checkpoint(UnrolledModel<float>& model, const std::string& dir);

UnrolledModel<float> load_checkpoint(const std::string& dir);

// Widened copy for the 64-bit gradient-check harness.
UnrolledModel<double> widen(const UnrolledModel<float>& m);

} // namespace pisf::unroll
