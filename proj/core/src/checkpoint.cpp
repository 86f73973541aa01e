#include "pisf/checkpoint.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pisf/arrayio.hpp"
#include "pisf/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pisf::unroll {

void save_checkpoint(UnrolledModel<float>& model, const std::string& dir) {
  fs::create_directories(dir);

  std::vector<net::TensorReg<float>> regs;
  model.collect(regs);

  json layers = json::array();
  for (const auto& reg : regs) {
    if (reg.name == "lambdas") continue; // kept in the manifest itself
    const std::string file = reg.name + ".pisf";
    RealNd a;
    a.dims = reg.shape;
    a.data = *reg.value;
    io::write_array((fs::path(dir) / file).string(), a);
    layers.push_back({{"name", reg.name}, {"shape", reg.shape}, {"dtype", "f32"}, {"file", file}});
  }

  json j;
  j["model_version"] = 1;
  j["K"] = model.K;
  j["variant"] = variant_name(model.variant);
  j["per_phase_weights"] = model.per_phase_weights;
  j["normalization"] = model.normalization ? "per_sample_max" : "none";
  j["gap_mode"] = "per_channel";
  j["seed"] = model.seed;
  json lams = json::array();
  for (float l : model.lambdas) lams.push_back(static_cast<double>(l));
  j["lambdas"] = lams;
  if (!model.training_config_json.empty()) {
    try {
      j["training"] = json::parse(model.training_config_json);
    } catch (const json::exception&) {
      j["training"] = model.training_config_json;
    }
  } else {
    j["training"] = nullptr;
  }
  j["layers"] = layers;

  std::ofstream out((fs::path(dir) / "manifest.json").string());
  if (!out) throw IoError(IoError::Kind::OpenFailed, "cannot write checkpoint manifest in " + dir);
  out << j.dump(2) << "\n";
}

UnrolledModel<float> load_checkpoint(const std::string& dir) {
  const std::string mpath = (fs::path(dir) / "manifest.json").string();
  std::ifstream in(mpath);
  if (!in) throw IoError(IoError::Kind::OpenFailed, "cannot open checkpoint manifest " + mpath);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint manifest: bad JSON: " + std::string(e.what()));
  }

  UnrolledModel<float> model;
  try {
    if (j.at("model_version").get<int>() != 1)
      throw ValidationError("checkpoint: unsupported model_version");
    model.K = j.at("K").get<int>();
    model.variant = variant_from_name(j.at("variant").get<std::string>());
    model.per_phase_weights = j.at("per_phase_weights").get<bool>();
    model.normalization = j.at("normalization").get<std::string>() == "per_sample_max";
    model.seed = j.at("seed").get<uint64_t>();
    if (!j.at("training").is_null()) model.training_config_json = j.at("training").dump();
  } catch (const json::exception& e) {
    throw ValidationError("checkpoint manifest: missing field: " + std::string(e.what()));
  }

  model.init(model.seed);

  const auto& lams = j.at("lambdas");
  if (lams.size() != static_cast<size_t>(model.K))
    throw ValidationError("checkpoint: lambda list size does not match K");
  for (size_t i = 0; i < lams.size(); ++i)
    model.lambdas[i] = static_cast<float>(lams[i].get<double>());

  std::vector<net::TensorReg<float>> regs;
  model.collect(regs);
  auto find_reg = [&](const std::string& name) -> net::TensorReg<float>* {
    for (auto& r : regs)
      if (r.name == name) return &r;
    return nullptr;
  };

  size_t loaded = 0;
  for (const auto& layer : j.at("layers")) {
    const std::string name = layer.at("name").get<std::string>();
    const std::string file = layer.at("file").get<std::string>();
    auto* reg = find_reg(name);
    if (!reg) throw ValidationError("checkpoint: unknown layer tensor " + name);
    const RealNd a = io::read_real((fs::path(dir) / file).string());
    const auto declared = layer.at("shape").get<std::vector<uint64_t>>();
    if (a.dims != declared || a.dims != reg->shape)
      throw ValidationError("checkpoint: shape mismatch for " + name);
    *reg->value = a.data;
    ++loaded;
  }
  // every tensor except the lambdas must have been provided
  if (loaded + 1 != regs.size())
    throw ValidationError("checkpoint: layer table is incomplete (" + std::to_string(loaded) +
                          " of " + std::to_string(regs.size() - 1) + " tensors)");
  return model;
}

UnrolledModel<double> widen(const UnrolledModel<float>& m) {
  UnrolledModel<double> out;
  out.K = m.K;
  out.variant = m.variant;
  out.per_phase_weights = m.per_phase_weights;
  out.normalization = m.normalization;
  out.seed = m.seed;
  out.training_config_json = m.training_config_json;
  out.init(m.seed);
  for (size_t i = 0; i < m.lambdas.size(); ++i) out.lambdas[i] = m.lambdas[i];

  std::vector<net::TensorReg<float>> src;
  const_cast<UnrolledModel<float>&>(m).collect(src);
  std::vector<net::TensorReg<double>> dst;
  out.collect(dst);
  if (src.size() != dst.size()) throw RuntimeError("widen: tensor registry mismatch");
  for (size_t i = 0; i < src.size(); ++i) {
    if (src[i].name != dst[i].name) throw RuntimeError("widen: tensor order mismatch");
    dst[i].value->assign(src[i].value->begin(), src[i].value->end());
  }
  return out;
}

} // namespace pisf::unroll
