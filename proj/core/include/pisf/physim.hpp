#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pisf/manifest.hpp"
#include "pisf/nd.hpp"
#include "pisf/sampling.hpp"

namespace pisf::physim {

// Synthetic multi-coil scenes are composed as X_c = A .* P .* S_c from a
// magnitude image A, a smooth unit-modulus phase map P, and coil
// sensitivities S. Rows of X feed the 1-d forward model
// y = U F x + eta.

enum class MagnitudeKind { Corpus, SheppLogan, ProceduralBlobs };

MagnitudeKind magnitude_kind_from_name(const std::string& name);
std::string magnitude_kind_name(MagnitudeKind k);

struct MagnitudeImage {
  RealNd values; // h x w, in [0, 1], max 1 after normalization
  std::string source;
};

struct PhaseMap {
  ComplexNd values; // h x w, unit modulus
  int trunc_size = 2;
  uint64_t seed = 0;
};

struct CoilSensitivitySet {
  ComplexNd maps; // c x h x w
  bool simulated = true;
  struct Coil {
    double cx, cy;      // center on the placement circle
    double width;       // Gaussian width
    double phase0;      // constant phase offset
    double bx, by;      // linear phase ramp coefficients
  };
  std::vector<Coil> geometry; // empty for loaded sets
};

struct SyntheticScene {
  ComplexNd x; // c x h x w
};

struct MagnitudeParams {
  std::string corpus_dir; // for MagnitudeKind::Corpus
  int min_blobs = 3;
  int max_blobs = 10;
};

struct CoilParams {
  // Image coordinates span [-1, 1] in both axes (field of view 2).
  double circle_radius = 0.55 * 2.0;
  double width = 0.6 * 2.0;
  double phase_offset_max = 3.14159265358979323846;
  double phase_ramp_max = 1.5;
};

MagnitudeImage magnitude_source(MagnitudeKind kind, uint64_t size, const MagnitudeParams& params,
                                uint64_t seed);

PhaseMap gen_phase_map(uint64_t h, uint64_t w, int trunc_size, uint64_t seed);

CoilSensitivitySet gen_coil_maps(uint64_t h, uint64_t w, int ncoils, const CoilParams& params,
                                 uint64_t seed);

// Reads a complex (c,h,w) ArrayFile. Invariant violations are reported as
// warnings, not errors: externally estimated maps may exceed the simulated
// bounds.
CoilSensitivitySet load_coil_maps(const std::string& path,
                                  std::vector<std::string>* warnings = nullptr);
void save_coil_maps(const CoilSensitivitySet& s, const std::string& path);

// Returns violation messages, empty when all invariants hold.
std::vector<std::string> coil_invariant_violations(const CoilSensitivitySet& s);

SyntheticScene compose_scene(const MagnitudeImage& a, const PhaseMap& p,
                             const CoilSensitivitySet& s);

// Row selection operator P_m and its adjoint. extract_row of (c,h,w) gives
// (c,w); embed_row places a (c,w) signal into an otherwise zero (c,h,w).
ComplexNd extract_row(const ComplexNd& x, uint64_t m);
ComplexNd embed_row(const ComplexNd& row, uint64_t m, uint64_t h);

// y = U F1D x + eta, per coil. Noise power is set from the mean k-space
// signal power of the coil: sigma^2 = mean|k|^2 / 10^(snr_db/10), split
// evenly between the real and imaginary parts. Order is FT, then noise,
// then masking. snr_db = +infinity skips the noise.
ComplexNd forward_1d(const ComplexNd& x, const sampling::Mask1D& mask, double snr_db,
                     uint64_t seed);

struct SynthConfig {
  uint64_t count = 1000;
  double train_fraction = 0.9;
  uint64_t signal_length = 320; // scene is signal_length x signal_length
  double af = 4.0;
  uint64_t acs_width = 24;
  double snr_low_db = 10.0;
  double snr_high_db = 80.0;
  MagnitudeKind magnitude = MagnitudeKind::ProceduralBlobs;
  MagnitudeParams magnitude_params;
  CoilParams coil_params;
  int ncoils = 4;
  int trunc_lo = 2;
  int trunc_hi = 5;
  uint64_t master_seed = 0;
  int jobs = 1;
  std::string out_dir;
};

// Generates the paired dataset under cfg.out_dir (manifest.json plus one
// ArrayFile triple per sample). Per-sample seeds are derived from
// (master_seed, sample_id), so generation order and parallelism do not
// change the result.
io::DatasetManifest build_dataset(const SynthConfig& cfg);

struct IntensityStats {
  std::vector<uint64_t> counts; // histogram of per-sample max-normalized |x_ref|
  double min = 0.0, max = 0.0, mean = 0.0;
  uint64_t total = 0;
};

IntensityStats intensity_stats(const io::DatasetManifest& m, const std::string& data_dir,
                               int bins);

} // namespace pisf::physim
