#pragma once

#include <string>
#include <vector>

#include "pisf/manifest.hpp"
#include "pisf/unroll.hpp"

namespace pisf::unroll {

struct TrainConfig {
  int epochs = 10;
  int batch = 32;
  float lr = 1e-3f;
  float lr_decay = 0.99f;
  uint64_t seed = 0;
  Variant variant = Variant::Advanced;
  int phases = 10;
  bool per_phase_weights = false;
  bool normalization = true;
  bool determinism = true;
  int jobs = 1;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& s);
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  std::string best_dir;
  std::string last_dir;
  double wall_seconds = 0.0;
};

// End-to-end training over the dataset described by `manifest` (files are
// resolved relative to data_dir). Writes per-epoch checkpoints, a
// best-by-validation checkpoint and a JSON-lines log under out_dir.
// A non-finite loss aborts with the last saved checkpoint left on disk.
TrainResult train(const io::DatasetManifest& manifest, const std::string& data_dir,
                  const TrainConfig& cfg, const std::string& out_dir);

} // namespace pisf::unroll
