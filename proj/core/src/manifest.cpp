#include "pisf/manifest.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pisf/arrayio.hpp"
#include "pisf/errors.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace pisf::io {

uint64_t DatasetManifest::train_count() const {
  return static_cast<uint64_t>(std::llround(train_fraction * static_cast<double>(sample_count)));
}

namespace {

void validate_counts(const DatasetManifest& m) {
  if (m.sample_count == 0) throw ValidationError("manifest: sample_count must be positive");
  if (m.entries.size() != m.sample_count)
    throw ValidationError("manifest: entry count " + std::to_string(m.entries.size()) +
                          " does not match sample_count " + std::to_string(m.sample_count));
  if (!(m.train_fraction > 0.0 && m.train_fraction <= 1.0))
    throw ValidationError("manifest: train_fraction out of (0, 1]");
  if (m.signal_length == 0) throw ValidationError("manifest: signal_length must be positive");
}

void check_entry_file(const fs::path& base, const std::string& rel, Dtype want,
                      uint64_t signal_length) {
  const fs::path p = base / rel;
  if (!fs::exists(p))
    throw ValidationError("manifest: referenced file missing: " + rel);
  const auto any = read_array(p.string());
  const bool is_real = std::holds_alternative<RealNd>(any);
  if ((want == Dtype::Real32) != is_real)
    throw ValidationError("manifest: wrong dtype in " + rel);
  const auto& dims = is_real ? std::get<RealNd>(any).dims : std::get<ComplexNd>(any).dims;
  if (dims.size() != 1 || dims[0] != signal_length)
    throw ValidationError("manifest: wrong shape in " + rel + " (expected [" +
                          std::to_string(signal_length) + "])");
}

} // namespace

void save_manifest(const DatasetManifest& m, const std::string& path) {
  validate_counts(m);
  const fs::path base = fs::path(path).parent_path();
  for (const auto& e : m.entries) {
    for (const auto* rel : {&e.y_path, &e.xref_path, &e.mask_path})
      if (!fs::exists(base / *rel))
        throw ValidationError("manifest: referenced file missing: " + *rel);
  }

  json j;
  j["format_version"] = m.format_version;
  j["master_seed"] = m.master_seed;
  j["sample_count"] = m.sample_count;
  j["train_fraction"] = m.train_fraction;
  j["signal_length"] = m.signal_length;
  j["af"] = m.af;
  j["acs_width"] = m.acs_width;
  j["snr_range_db"] = {m.snr_low_db, m.snr_high_db};
  auto& entries = j["entries"] = json::array();
  for (const auto& e : m.entries) {
    entries.push_back({{"sample_id", e.sample_id},
                       {"y_path", e.y_path},
                       {"xref_path", e.xref_path},
                       {"mask_path", e.mask_path},
                       {"snr_db", e.snr_db},
                       {"seed", e.seed}});
  }

  std::ofstream out(path);
  if (!out) throw IoError(IoError::Kind::OpenFailed, "save_manifest: cannot open " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError(IoError::Kind::OpenFailed, "save_manifest: write failed for " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::OpenFailed, "load_manifest: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("load_manifest: bad JSON in " + path + ": " + e.what());
  }

  DatasetManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    m.master_seed = j.at("master_seed").get<uint64_t>();
    m.sample_count = j.at("sample_count").get<uint64_t>();
    m.train_fraction = j.at("train_fraction").get<double>();
    m.signal_length = j.at("signal_length").get<uint64_t>();
    m.af = j.at("af").get<double>();
    m.acs_width = j.at("acs_width").get<uint64_t>();
    m.snr_low_db = j.at("snr_range_db").at(0).get<double>();
    m.snr_high_db = j.at("snr_range_db").at(1).get<double>();
    for (const auto& je : j.at("entries")) {
      SampleEntry e;
      e.sample_id = je.at("sample_id").get<uint64_t>();
      e.y_path = je.at("y_path").get<std::string>();
      e.xref_path = je.at("xref_path").get<std::string>();
      e.mask_path = je.at("mask_path").get<std::string>();
      e.snr_db = je.at("snr_db").get<double>();
      e.seed = je.at("seed").get<uint64_t>();
      m.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw ValidationError("load_manifest: missing or mistyped field in " + path + ": " + e.what());
  }

  validate_counts(m);
  const fs::path base = fs::path(path).parent_path();
  for (const auto& e : m.entries) {
    check_entry_file(base, e.y_path, Dtype::Complex64, m.signal_length);
    check_entry_file(base, e.xref_path, Dtype::Complex64, m.signal_length);
    check_entry_file(base, e.mask_path, Dtype::Real32, m.signal_length);
  }
  return m;
}

} // namespace pisf::io
