#include "pisf/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pisf/arrayio.hpp"
#include "pisf/checkpoint.hpp"
#include "pisf/errors.hpp"
#include "pisf/rng.hpp"
#include "pisf/runtime.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pisf::unroll {

std::string TrainConfig::to_json() const {
  json j{{"epochs", epochs},
         {"batch", batch},
         {"lr", lr},
         {"lr_decay", lr_decay},
         {"seed", seed},
         {"variant", variant_name(variant)},
         {"phases", phases},
         {"per_phase_weights", per_phase_weights},
         {"normalization", normalization},
         {"determinism", determinism},
         {"jobs", jobs}};
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& s) {
  TrainConfig c;
  json j = json::parse(s);
  c.epochs = j.value("epochs", c.epochs);
  c.batch = j.value("batch", c.batch);
  c.lr = j.value("lr", c.lr);
  c.lr_decay = j.value("lr_decay", c.lr_decay);
  c.seed = j.value("seed", c.seed);
  if (j.contains("variant")) c.variant = variant_from_name(j["variant"].get<std::string>());
  c.phases = j.value("phases", c.phases);
  c.per_phase_weights = j.value("per_phase_weights", c.per_phase_weights);
  c.normalization = j.value("normalization", c.normalization);
  c.determinism = j.value("determinism", c.determinism);
  c.jobs = j.value("jobs", c.jobs);
  return c;
}

namespace {

struct Sample {
  ComplexNd y, xref;
  sampling::Mask1D mask;
};

std::vector<Sample> load_samples(const io::DatasetManifest& m, const std::string& data_dir) {
  std::vector<Sample> out(m.entries.size());
  for (size_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    out[i].y = io::read_complex((fs::path(data_dir) / e.y_path).string());
    out[i].xref = io::read_complex((fs::path(data_dir) / e.xref_path).string());
    out[i].mask = sampling::mask_from_array(io::read_real((fs::path(data_dir) / e.mask_path).string()));
  }
  return out;
}

// gathers a batch into (items, n) arrays
void gather(const std::vector<Sample>& samples, const std::vector<size_t>& idx, size_t lo,
            size_t hi, ComplexNd& y, ComplexNd& xref,
            std::vector<const sampling::Mask1D*>& masks) {
  const uint64_t bsz = hi - lo;
  const uint64_t n = samples[idx[lo]].y.dims[0];
  y = ComplexNd({bsz, n});
  xref = ComplexNd({bsz, n});
  masks.resize(bsz);
  for (uint64_t b = 0; b < bsz; ++b) {
    const Sample& s = samples[idx[lo + b]];
    std::copy(s.y.data.begin(), s.y.data.end(), y.data.begin() + static_cast<int64_t>(b * n));
    std::copy(s.xref.data.begin(), s.xref.data.end(),
              xref.data.begin() + static_cast<int64_t>(b * n));
    masks[b] = &s.mask;
  }
}

double evaluate(UnrolledModel<float>& model, const std::vector<Sample>& samples,
                const std::vector<size_t>& idx, int batch) {
  double acc = 0.0;
  size_t count = 0;
  ComplexNd y, xref;
  std::vector<const sampling::Mask1D*> masks;
  for (size_t lo = 0; lo < idx.size(); lo += static_cast<size_t>(batch)) {
    const size_t hi = std::min(idx.size(), lo + static_cast<size_t>(batch));
    gather(samples, idx, lo, hi, y, xref, masks);
    auto outs = forward_unrolled<float>(
        y, std::span<const sampling::Mask1D* const>(masks.data(), masks.size()), model,
        net::BnMode::Eval, 0, nullptr, nullptr);
    acc += static_cast<double>(training_loss(outs, xref)) * static_cast<double>(hi - lo);
    count += hi - lo;
  }
  return acc / static_cast<double>(count);
}

} // namespace

TrainResult train(const io::DatasetManifest& manifest, const std::string& data_dir,
                  const TrainConfig& cfg, const std::string& out_dir) {
  if (manifest.entries.empty()) throw ValidationError("train: empty dataset");
  if (cfg.batch < 2)
    throw ValidationError("train: batch must be >= 2 (batch statistics need it)");

  const auto t_start = std::chrono::steady_clock::now();
  runtime::set_jobs(cfg.determinism ? 1 : cfg.jobs);

  std::vector<Sample> samples = load_samples(manifest, data_dir);
  const size_t train_n = manifest.train_count();
  if (train_n == 0 || train_n > samples.size())
    throw ValidationError("train: degenerate train split");

  std::vector<size_t> train_idx(train_n), val_idx(samples.size() - train_n);
  for (size_t i = 0; i < train_n; ++i) train_idx[i] = i;
  for (size_t i = train_n; i < samples.size(); ++i) val_idx[i - train_n] = i;

  UnrolledModel<float> model;
  model.K = cfg.phases;
  model.variant = cfg.variant;
  model.per_phase_weights = cfg.per_phase_weights;
  model.normalization = cfg.normalization;
  model.training_config_json = cfg.to_json();
  model.init(cfg.seed);

  std::vector<net::TensorReg<float>> regs;
  model.collect(regs);
  std::vector<net::TensorReg<float>> trainable;
  for (const auto& r : regs)
    if (r.trainable) trainable.push_back(r);
  net::Adam<float> adam(trainable, cfg.lr);
  adam.lr_decay = cfg.lr_decay;

  fs::create_directories(out_dir);
  std::ofstream logfile((fs::path(out_dir) / "train_log.jsonl").string());

  char dirname[32];
  auto epoch_dir = [&](int e) {
    std::snprintf(dirname, sizeof(dirname), "epoch_%03d", e);
    return (fs::path(out_dir) / dirname).string();
  };

  save_checkpoint(model, epoch_dir(0)); // pre-training state, the first "last good"
  std::string last_good = epoch_dir(0);

  TrainResult result;
  double best_val = std::numeric_limits<double>::infinity();

  std::vector<PhaseTape<float>> tapes;
  ComplexNd y, xref;
  std::vector<const sampling::Mask1D*> masks;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng::Stream shuffle_rs(rng::derive_seed(cfg.seed, static_cast<uint64_t>(epoch), 0x5f5f));
    for (size_t i = train_idx.size(); i > 1; --i)
      std::swap(train_idx[i - 1], train_idx[shuffle_rs.below(i)]);

    double loss_acc = 0.0;
    size_t loss_count = 0;

    for (size_t lo = 0; lo < train_idx.size(); lo += static_cast<size_t>(cfg.batch)) {
      const size_t hi = std::min(train_idx.size(), lo + static_cast<size_t>(cfg.batch));
      if (hi - lo < 2) break; // a trailing single sample cannot feed batch statistics
      gather(samples, train_idx, lo, hi, y, xref, masks);

      model.zero_grad();
      std::vector<float> scales;
      auto outs = forward_unrolled<float>(
          y, std::span<const sampling::Mask1D* const>(masks.data(), masks.size()), model,
          net::BnMode::Train, 0, &tapes, &scales);

      const float loss = training_loss(outs, xref);
      if (!std::isfinite(loss))
        throw RuntimeError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           "; last good checkpoint: " + last_good);
      loss_acc += static_cast<double>(loss) * static_cast<double>(hi - lo);
      loss_count += hi - lo;

      auto grads = training_loss_backward(outs, xref);
      backward_unrolled<float>(model, tapes, grads,
                               std::span<const sampling::Mask1D* const>(masks.data(), masks.size()),
                               scales);
      adam.step();
      for (auto& l : model.lambdas) l = std::max(l, 0.0f); // projection to lambda >= 0
    }
    adam.end_epoch();

    const double train_loss = loss_acc / static_cast<double>(loss_count);
    const double val_loss =
        val_idx.empty() ? train_loss : evaluate(model, samples, val_idx, cfg.batch);

    EpochLog el{epoch, train_loss, val_loss, static_cast<double>(adam.lr)};
    result.log.push_back(el);
    if (logfile) {
      json jl{{"epoch", el.epoch},
              {"train_loss", el.train_loss},
              {"val_loss", el.val_loss},
              {"lr", el.lr}};
      logfile << jl.dump() << "\n";
      logfile.flush();
    }

    const std::string edir = epoch_dir(epoch);
    save_checkpoint(model, edir);
    last_good = edir;
    result.last_dir = edir;
    if (val_loss < best_val) {
      best_val = val_loss;
      result.best_epoch = epoch;
      save_checkpoint(model, (fs::path(out_dir) / "best").string());
      result.best_dir = (fs::path(out_dir) / "best").string();
    }
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

} // namespace pisf::unroll
