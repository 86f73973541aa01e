#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pisf::io {

struct SampleEntry {
  uint64_t sample_id = 0;
  std::string y_path;    // complex 1-d, signal_length
  std::string xref_path; // complex 1-d, signal_length
  std::string mask_path; // real 1-d 0/1, signal_length
  double snr_db = 0.0;
  uint64_t seed = 0;
};

struct DatasetManifest {
  int format_version = 1;
  uint64_t master_seed = 0;
  uint64_t sample_count = 0;
  double train_fraction = 0.9;
  uint64_t signal_length = 320;
  double af = 4.0;
  uint64_t acs_width = 0;
  double snr_low_db = 10.0;
  double snr_high_db = 80.0;
  std::vector<SampleEntry> entries;

  uint64_t train_count() const;
  uint64_t val_count() const { return sample_count - train_count(); }
};

// Entry paths are stored relative to the manifest's directory.
void save_manifest(const DatasetManifest& m, const std::string& path);

// Parses and validates: entry count, and that every referenced file exists
// and parses as an ArrayFile with the declared dtype and shape.
DatasetManifest load_manifest(const std::string& path);

} // namespace pisf::io
