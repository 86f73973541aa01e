#include "pisf/physim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "pisf/arrayio.hpp"
#include "pisf/errors.hpp"
#include "pisf/fftc.hpp"
#include "pisf/rng.hpp"

namespace fs = std::filesystem;

namespace pisf::physim {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
  double value, a, b, x0, y0, theta_deg;
};

// The standard Shepp-Logan head phantom ellipse table.
constexpr Ellipse kSheppLogan[] = {
    {2.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

void normalize_to_unit_max(RealNd& img, const char* what) {
  float mx = 0.0f;
  for (float v : img.data) mx = std::max(mx, v);
  if (mx <= 0.0f) throw ValidationError(std::string(what) + ": blank image, cannot normalize");
  for (float& v : img.data) v /= mx;
}

RealNd shepp_logan(uint64_t size) {
  RealNd img({size, size});
  const double half = static_cast<double>(size) / 2.0;
  for (uint64_t i = 0; i < size; ++i) {
    const double y = (half - static_cast<double>(i)) / half;
    for (uint64_t j = 0; j < size; ++j) {
      const double x = (static_cast<double>(j) - half) / half;
      double v = 0.0;
      for (const auto& e : kSheppLogan) {
        const double th = e.theta_deg * kPi / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = std::cos(th) * dx + std::sin(th) * dy;
        const double yr = -std::sin(th) * dx + std::cos(th) * dy;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.value;
      }
      img.at(i, j) = static_cast<float>(v);
    }
  }
  normalize_to_unit_max(img, "shepp-logan");
  return img;
}

RealNd procedural_blobs(uint64_t size, const MagnitudeParams& params, uint64_t seed) {
  rng::Stream rs(seed);
  const int nblobs =
      static_cast<int>(rs.uniform_int(params.min_blobs, std::max(params.min_blobs, params.max_blobs)));
  struct Blob {
    double cx, cy, sx, sy, amp, rot;
  };
  std::vector<Blob> blobs(static_cast<size_t>(nblobs));
  for (auto& b : blobs) {
    b.cx = rs.uniform(-0.7, 0.7);
    b.cy = rs.uniform(-0.7, 0.7);
    b.sx = rs.uniform(0.05, 0.45);
    b.sy = rs.uniform(0.05, 0.45);
    b.amp = rs.uniform(0.2, 1.0);
    b.rot = rs.uniform(0.0, kPi);
  }
  RealNd img({size, size});
  const double half = static_cast<double>(size) / 2.0;
  for (uint64_t i = 0; i < size; ++i) {
    const double y = (half - static_cast<double>(i)) / half;
    for (uint64_t j = 0; j < size; ++j) {
      const double x = (static_cast<double>(j) - half) / half;
      double v = 0.0;
      for (const auto& b : blobs) {
        const double dx = x - b.cx, dy = y - b.cy;
        const double xr = std::cos(b.rot) * dx + std::sin(b.rot) * dy;
        const double yr = -std::sin(b.rot) * dx + std::cos(b.rot) * dy;
        v += b.amp * std::exp(-0.5 * (xr * xr / (b.sx * b.sx) + yr * yr / (b.sy * b.sy)));
      }
      img.at(i, j) = static_cast<float>(v);
    }
  }
  normalize_to_unit_max(img, "procedural-blobs");
  return img;
}

// --- tiny PNM (P2/P3/P5/P6) reader, enough for a grayscale corpus ---

int pnm_next_int(std::FILE* f) {
  int c;
  // skip whitespace and '#' comments
  for (;;) {
    c = std::fgetc(f);
    if (c == '#') {
      while (c != '\n' && c != EOF) c = std::fgetc(f);
    } else if (!std::isspace(c)) {
      break;
    }
  }
  if (c == EOF) throw RuntimeError("pnm: unexpected end of header");
  int v = 0;
  while (std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = std::fgetc(f);
  }
  return v;
}

RealNd load_pnm_gray(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError(IoError::Kind::OpenFailed, "cannot open image " + path);
  struct Guard {
    std::FILE* f;
    ~Guard() { std::fclose(f); }
  } guard{f};

  char m0 = static_cast<char>(std::fgetc(f));
  char m1 = static_cast<char>(std::fgetc(f));
  if (m0 != 'P' || (m1 != '2' && m1 != '3' && m1 != '5' && m1 != '6'))
    throw RuntimeError("pnm: unsupported format in " + path);
  const bool color = (m1 == '3' || m1 == '6');
  const bool binary = (m1 == '5' || m1 == '6');

  const uint64_t w = static_cast<uint64_t>(pnm_next_int(f));
  const uint64_t h = static_cast<uint64_t>(pnm_next_int(f));
  const int maxval = pnm_next_int(f);
  if (w == 0 || h == 0 || maxval <= 0 || maxval > 65535)
    throw RuntimeError("pnm: bad dimensions in " + path);

  const uint64_t channels = color ? 3 : 1;
  const uint64_t count = w * h * channels;
  std::vector<double> raw(count);
  if (binary) {
    const int bytes = maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(count * static_cast<uint64_t>(bytes));
    if (std::fread(buf.data(), 1, buf.size(), f) != buf.size())
      throw RuntimeError("pnm: truncated pixel data in " + path);
    for (uint64_t i = 0; i < count; ++i)
      raw[i] = bytes == 1 ? buf[i] : (buf[2 * i] * 256.0 + buf[2 * i + 1]);
  } else {
    for (uint64_t i = 0; i < count; ++i) raw[i] = pnm_next_int(f);
  }

  RealNd img({h, w});
  for (uint64_t i = 0; i < h * w; ++i) {
    double v;
    if (color)
      v = 0.299 * raw[3 * i] + 0.587 * raw[3 * i + 1] + 0.114 * raw[3 * i + 2];
    else
      v = raw[i];
    img.data[i] = static_cast<float>(v / maxval);
  }
  return img;
}

RealNd bilinear_resize(const RealNd& src, uint64_t size) {
  const uint64_t sh = src.dims[0], sw = src.dims[1];
  if (sh == size && sw == size) return src;
  RealNd out({size, size});
  for (uint64_t i = 0; i < size; ++i) {
    const double fy =
        (static_cast<double>(i) + 0.5) * static_cast<double>(sh) / static_cast<double>(size) - 0.5;
    const double cy = std::clamp(fy, 0.0, static_cast<double>(sh - 1));
    const uint64_t y0 = static_cast<uint64_t>(cy);
    const uint64_t y1 = std::min(y0 + 1, sh - 1);
    const double wy = cy - static_cast<double>(y0);
    for (uint64_t j = 0; j < size; ++j) {
      const double fx = (static_cast<double>(j) + 0.5) * static_cast<double>(sw) /
                            static_cast<double>(size) -
                        0.5;
      const double cx = std::clamp(fx, 0.0, static_cast<double>(sw - 1));
      const uint64_t x0 = static_cast<uint64_t>(cx);
      const uint64_t x1 = std::min(x0 + 1, sw - 1);
      const double wx = cx - static_cast<double>(x0);
      const double v = (1 - wy) * ((1 - wx) * src.at(y0, x0) + wx * src.at(y0, x1)) +
                       wy * ((1 - wx) * src.at(y1, x0) + wx * src.at(y1, x1));
      out.at(i, j) = static_cast<float>(v);
    }
  }
  return out;
}

RealNd corpus_image(uint64_t size, const MagnitudeParams& params, uint64_t seed) {
  if (params.corpus_dir.empty())
    throw ValidationError("magnitude_source: corpus kind needs a corpus directory");
  std::vector<std::string> files;
  if (fs::is_directory(params.corpus_dir)) {
    for (const auto& entry : fs::directory_iterator(params.corpus_dir)) {
      if (!entry.is_regular_file()) continue;
      const std::string ext = entry.path().extension().string();
      if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".pisf")
        files.push_back(entry.path().string());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw ValidationError("magnitude_source: no usable images in " + params.corpus_dir +
                          " (looked for .pgm/.ppm/.pnm/.pisf)");

  rng::Stream rs(seed);
  const std::string& path = files[rs.below(files.size())];
  RealNd raw;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".pisf") {
    raw = io::read_real(path);
    raw.require_ndim(2, "corpus image");
    for (float& v : raw.data) v = std::max(v, 0.0f);
  } else {
    raw = load_pnm_gray(path);
  }
  RealNd img = bilinear_resize(raw, size);
  normalize_to_unit_max(img, "corpus image");
  return img;
}

} // namespace

MagnitudeKind magnitude_kind_from_name(const std::string& name) {
  if (name == "corpus") return MagnitudeKind::Corpus;
  if (name == "shepp-logan") return MagnitudeKind::SheppLogan;
  if (name == "procedural-blobs") return MagnitudeKind::ProceduralBlobs;
  throw ValidationError("unknown magnitude kind: " + name);
}

std::string magnitude_kind_name(MagnitudeKind k) {
  switch (k) {
    case MagnitudeKind::Corpus: return "corpus";
    case MagnitudeKind::SheppLogan: return "shepp-logan";
    case MagnitudeKind::ProceduralBlobs: return "procedural-blobs";
  }
  return "procedural-blobs";
}

MagnitudeImage magnitude_source(MagnitudeKind kind, uint64_t size, const MagnitudeParams& params,
                                uint64_t seed) {
  if (size < 16) throw ValidationError("magnitude_source: size must be >= 16");
  MagnitudeImage out;
  out.source = magnitude_kind_name(kind);
  switch (kind) {
    case MagnitudeKind::SheppLogan: out.values = shepp_logan(size); break;
    case MagnitudeKind::ProceduralBlobs: out.values = procedural_blobs(size, params, seed); break;
    case MagnitudeKind::Corpus: out.values = corpus_image(size, params, seed); break;
  }
  return out;
}

PhaseMap gen_phase_map(uint64_t h, uint64_t w, int trunc_size, uint64_t seed) {
  if (trunc_size < 1 || static_cast<uint64_t>(trunc_size) > std::min(h, w))
    throw ValidationError("gen_phase_map: trunc_size out of range");

  PhaseMap pm;
  pm.trunc_size = trunc_size;
  pm.seed = seed;
  pm.values = ComplexNd({h, w});

  rng::Stream rs(seed);
  for (auto& v : pm.values.data)
    v = cfloat(static_cast<float>(rs.normal()), static_cast<float>(rs.normal()));

  fftc::fft2d_centered(pm.values.data.data(), h, w, 1, true);

  const uint64_t t = static_cast<uint64_t>(trunc_size);
  const uint64_t r0 = h / 2 - t / 2, c0 = w / 2 - t / 2;
  for (uint64_t r = 0; r < h; ++r)
    for (uint64_t c = 0; c < w; ++c)
      if (r < r0 || r >= r0 + t || c < c0 || c >= c0 + t) pm.values.at(r, c) = cfloat(0, 0);

  fftc::fft2d_centered(pm.values.data.data(), h, w, 1, false);

  for (auto& v : pm.values.data) {
    const float mod = std::abs(v);
    v = mod < 1e-12f ? cfloat(1, 0) : v / mod;
  }
  return pm;
}

CoilSensitivitySet gen_coil_maps(uint64_t h, uint64_t w, int ncoils, const CoilParams& params,
                                 uint64_t seed) {
  if (ncoils < 1 || ncoils > 32) throw ValidationError("gen_coil_maps: ncoils must be in [1, 32]");

  CoilSensitivitySet s;
  s.simulated = true;
  s.maps = ComplexNd({static_cast<uint64_t>(ncoils), h, w});

  rng::Stream rs(seed);
  for (int j = 0; j < ncoils; ++j) {
    const double angle = 2.0 * kPi * j / ncoils;
    CoilSensitivitySet::Coil coil;
    coil.cx = params.circle_radius * std::cos(angle);
    coil.cy = params.circle_radius * std::sin(angle);
    coil.width = params.width;
    coil.phase0 = rs.uniform(-params.phase_offset_max, params.phase_offset_max);
    coil.bx = rs.uniform(-params.phase_ramp_max, params.phase_ramp_max);
    coil.by = rs.uniform(-params.phase_ramp_max, params.phase_ramp_max);
    s.geometry.push_back(coil);
  }

  const double halfh = static_cast<double>(h) / 2.0, halfw = static_cast<double>(w) / 2.0;
  for (int j = 0; j < ncoils; ++j) {
    const auto& coil = s.geometry[static_cast<size_t>(j)];
    for (uint64_t i = 0; i < h; ++i) {
      const double y = (halfh - static_cast<double>(i)) / halfh;
      for (uint64_t c = 0; c < w; ++c) {
        const double x = (static_cast<double>(c) - halfw) / halfw;
        const double d2 = (x - coil.cx) * (x - coil.cx) + (y - coil.cy) * (y - coil.cy);
        const double mag = std::exp(-d2 / (2.0 * coil.width * coil.width));
        const double ph = coil.phase0 + coil.bx * x + coil.by * y;
        s.maps.at(static_cast<uint64_t>(j), i, c) =
            cfloat(static_cast<float>(mag * std::cos(ph)), static_cast<float>(mag * std::sin(ph)));
      }
    }
  }

  // global scaling so the sum-of-squares peak is exactly 1
  double max_sos2 = 0.0;
  for (uint64_t p = 0; p < h * w; ++p) {
    double sos2 = 0.0;
    for (int j = 0; j < ncoils; ++j) {
      const cfloat v = s.maps.data[static_cast<uint64_t>(j) * h * w + p];
      sos2 += static_cast<double>(std::norm(v));
    }
    max_sos2 = std::max(max_sos2, sos2);
  }
  const float scale = static_cast<float>(1.0 / std::sqrt(max_sos2));
  for (auto& v : s.maps.data) v *= scale;

  auto violations = coil_invariant_violations(s);
  if (!violations.empty())
    throw RuntimeError("gen_coil_maps: simulated maps violate invariants: " + violations.front());
  return s;
}

std::vector<std::string> coil_invariant_violations(const CoilSensitivitySet& s) {
  std::vector<std::string> out;
  const uint64_t c = s.maps.dims[0], h = s.maps.dims[1], w = s.maps.dims[2];
  const double halfh = static_cast<double>(h) / 2.0, halfw = static_cast<double>(w) / 2.0;

  double max_sos2 = 0.0;
  double min_disc_sos2 = std::numeric_limits<double>::infinity();
  for (uint64_t i = 0; i < h; ++i) {
    const double y = (halfh - static_cast<double>(i)) / halfh;
    for (uint64_t jx = 0; jx < w; ++jx) {
      const double x = (static_cast<double>(jx) - halfw) / halfw;
      double sos2 = 0.0;
      for (uint64_t j = 0; j < c; ++j) sos2 += static_cast<double>(std::norm(s.maps.at(j, i, jx)));
      max_sos2 = std::max(max_sos2, sos2);
      if (x * x + y * y <= 0.8 * 0.8) min_disc_sos2 = std::min(min_disc_sos2, sos2);
    }
  }
  if (max_sos2 > 1.05)
    out.push_back("sum-of-squares peak " + std::to_string(max_sos2) + " exceeds 1.05");
  if (min_disc_sos2 < 0.05)
    out.push_back("sum-of-squares minimum " + std::to_string(min_disc_sos2) +
                  " inside the central disc is below 0.05");

  double max_step = 0.0;
  for (uint64_t j = 0; j < c; ++j)
    for (uint64_t i = 0; i < h; ++i)
      for (uint64_t jx = 0; jx < w; ++jx) {
        if (i + 1 < h)
          max_step = std::max(
              max_step, static_cast<double>(std::abs(s.maps.at(j, i, jx) - s.maps.at(j, i + 1, jx))));
        if (jx + 1 < w)
          max_step = std::max(
              max_step, static_cast<double>(std::abs(s.maps.at(j, i, jx) - s.maps.at(j, i, jx + 1))));
      }
  if (max_step > 0.2)
    out.push_back("4-neighbor step " + std::to_string(max_step) + " exceeds 0.2");
  return out;
}

CoilSensitivitySet load_coil_maps(const std::string& path, std::vector<std::string>* warnings) {
  CoilSensitivitySet s;
  s.maps = io::read_complex(path);
  s.maps.require_ndim(3, "coil maps");
  s.simulated = false;
  auto violations = coil_invariant_violations(s);
  if (warnings)
    warnings->insert(warnings->end(), violations.begin(), violations.end());
  else
    for (const auto& v : violations) std::fprintf(stderr, "warning: coil maps: %s\n", v.c_str());
  return s;
}

void save_coil_maps(const CoilSensitivitySet& s, const std::string& path) {
  io::write_array(path, s.maps);
}

SyntheticScene compose_scene(const MagnitudeImage& a, const PhaseMap& p,
                             const CoilSensitivitySet& s) {
  const uint64_t h = a.values.dims[0], w = a.values.dims[1];
  if (p.values.dims[0] != h || p.values.dims[1] != w)
    throw ValidationError("compose_scene: phase map shape mismatch");
  if (s.maps.dims[1] != h || s.maps.dims[2] != w)
    throw ValidationError("compose_scene: coil map shape mismatch");

  const uint64_t c = s.maps.dims[0];
  SyntheticScene scene;
  scene.x = ComplexNd({c, h, w});
  for (uint64_t j = 0; j < c; ++j)
    for (uint64_t p1 = 0; p1 < h * w; ++p1)
      scene.x.data[j * h * w + p1] = a.values.data[p1] * p.values.data[p1] * s.maps.data[j * h * w + p1];
  return scene;
}

ComplexNd extract_row(const ComplexNd& x, uint64_t m) {
  x.require_ndim(3, "extract_row");
  const uint64_t c = x.dims[0], h = x.dims[1], w = x.dims[2];
  if (m >= h) throw ValidationError("extract_row: row index out of range");
  ComplexNd row({c, w});
  for (uint64_t j = 0; j < c; ++j)
    std::copy_n(x.data.begin() + static_cast<int64_t>((j * h + m) * w), w,
                row.data.begin() + static_cast<int64_t>(j * w));
  return row;
}

ComplexNd embed_row(const ComplexNd& row, uint64_t m, uint64_t h) {
  row.require_ndim(2, "embed_row");
  const uint64_t c = row.dims[0], w = row.dims[1];
  if (m >= h) throw ValidationError("embed_row: row index out of range");
  ComplexNd x({c, h, w});
  for (uint64_t j = 0; j < c; ++j)
    std::copy_n(row.data.begin() + static_cast<int64_t>(j * w), w,
                x.data.begin() + static_cast<int64_t>((j * h + m) * w));
  return x;
}

ComplexNd forward_1d(const ComplexNd& x, const sampling::Mask1D& mask, double snr_db,
                     uint64_t seed) {
  x.require_ndim(2, "forward_1d");
  const uint64_t c = x.dims[0], n = x.dims[1];
  if (mask.n() != n) throw ValidationError("forward_1d: mask length mismatch");

  ComplexNd y = x;
  fftc::fft1d_centered(y.data.data(), n, c, true);

  if (std::isfinite(snr_db)) {
    rng::Stream rs(seed);
    for (uint64_t j = 0; j < c; ++j) {
      double power = 0.0;
      for (uint64_t f = 0; f < n; ++f) power += static_cast<double>(std::norm(y.at(j, f)));
      power /= static_cast<double>(n);
      const double sigma2 = power / std::pow(10.0, snr_db / 10.0);
      const double s = std::sqrt(sigma2 / 2.0);
      for (uint64_t f = 0; f < n; ++f)
        y.at(j, f) += cfloat(static_cast<float>(s * rs.normal()), static_cast<float>(s * rs.normal()));
    }
  }

  for (uint64_t j = 0; j < c; ++j)
    for (uint64_t f = 0; f < n; ++f)
      if (!mask.sampled[f]) y.at(j, f) = cfloat(0, 0);
  return y;
}

namespace {

struct SampleResult {
  io::SampleEntry entry;
};

SampleResult generate_sample(const SynthConfig& cfg, uint64_t id, const fs::path& out) {
  const uint64_t n = cfg.signal_length;
  const uint64_t seed = rng::derive_seed(cfg.master_seed, id);
  rng::Stream rs(seed);

  // fixed draw order so regeneration is reproducible
  const uint64_t mag_seed = rs.next_u64();
  const int trunc = static_cast<int>(rs.uniform_int(cfg.trunc_lo, cfg.trunc_hi));
  const uint64_t phase_seed = rs.next_u64();
  const uint64_t coil_seed = rs.next_u64();
  const uint64_t coil_idx = rs.below(static_cast<uint64_t>(cfg.ncoils));
  const uint64_t row = rs.below(n);
  const uint64_t mask_seed = rs.next_u64();
  const double snr_db = rs.uniform(cfg.snr_low_db, cfg.snr_high_db);
  const uint64_t noise_seed = rs.next_u64();

  const MagnitudeImage a = magnitude_source(cfg.magnitude, n, cfg.magnitude_params, mag_seed);
  const PhaseMap p = gen_phase_map(n, n, trunc, phase_seed);
  const CoilSensitivitySet s = gen_coil_maps(n, n, cfg.ncoils, cfg.coil_params, coil_seed);
  const SyntheticScene scene = compose_scene(a, p, s);

  ComplexNd xref({1, n});
  for (uint64_t f = 0; f < n; ++f) xref.at(0, f) = scene.x.at(coil_idx, row, f);

  const sampling::Mask1D mask = sampling::make_cartesian_1d(n, cfg.af, cfg.acs_width, mask_seed);
  const ComplexNd y = forward_1d(xref, mask, snr_db, noise_seed);

  char name[64];
  std::snprintf(name, sizeof(name), "samples/y_%06llu.pisf", static_cast<unsigned long long>(id));
  const std::string y_rel = name;
  std::snprintf(name, sizeof(name), "samples/xref_%06llu.pisf", static_cast<unsigned long long>(id));
  const std::string xref_rel = name;
  std::snprintf(name, sizeof(name), "samples/mask_%06llu.pisf", static_cast<unsigned long long>(id));
  const std::string mask_rel = name;

  ComplexNd y1({n}), x1({n});
  std::copy(y.data.begin(), y.data.end(), y1.data.begin());
  std::copy(xref.data.begin(), xref.data.end(), x1.data.begin());
  io::write_array((out / y_rel).string(), y1);
  io::write_array((out / xref_rel).string(), x1);
  sampling::save_mask(mask, (out / mask_rel).string());

  SampleResult res;
  res.entry = {id, y_rel, xref_rel, mask_rel, snr_db, seed};
  return res;
}

} // namespace

io::DatasetManifest build_dataset(const SynthConfig& cfg) {
  if (cfg.count == 0) throw ValidationError("build_dataset: count must be positive");
  if (cfg.out_dir.empty()) throw ValidationError("build_dataset: out_dir required");
  if (cfg.magnitude == MagnitudeKind::Corpus && cfg.magnitude_params.corpus_dir.empty())
    throw ValidationError("build_dataset: corpus magnitude needs corpus_dir");

  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "samples");

  std::vector<io::SampleEntry> entries(cfg.count);
  const int jobs = std::max(1, cfg.jobs);
  std::atomic<uint64_t> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<size_t>(jobs));

  auto worker = [&](int wi) {
    try {
      for (;;) {
        const uint64_t id = next.fetch_add(1);
        if (id >= cfg.count) break;
        entries[id] = generate_sample(cfg, id, out).entry;
      }
    } catch (...) {
      errors[static_cast<size_t>(wi)] = std::current_exception();
    }
  };

  if (jobs == 1) {
    worker(0);
  } else {
    workers.reserve(static_cast<size_t>(jobs));
    for (int i = 0; i < jobs; ++i) workers.emplace_back(worker, i);
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  io::DatasetManifest m;
  m.master_seed = cfg.master_seed;
  m.sample_count = cfg.count;
  m.train_fraction = cfg.train_fraction;
  m.signal_length = cfg.signal_length;
  m.af = cfg.af;
  m.acs_width = cfg.acs_width;
  m.snr_low_db = cfg.snr_low_db;
  m.snr_high_db = cfg.snr_high_db;
  m.entries = std::move(entries);
  io::save_manifest(m, (out / "manifest.json").string());
  return m;
}

IntensityStats intensity_stats(const io::DatasetManifest& m, const std::string& data_dir,
                               int bins) {
  if (bins < 2) throw ValidationError("intensity_stats: bins must be >= 2");
  if (m.entries.empty()) throw ValidationError("intensity_stats: empty manifest");

  IntensityStats st;
  st.counts.assign(static_cast<size_t>(bins), 0);
  st.min = std::numeric_limits<double>::infinity();
  st.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  for (const auto& e : m.entries) {
    const ComplexNd x = io::read_complex((fs::path(data_dir) / e.xref_path).string());
    float mx = 0.0f;
    for (const auto& v : x.data) mx = std::max(mx, std::abs(v));
    const double denom = mx > 0.0f ? static_cast<double>(mx) : 1.0;
    for (const auto& v : x.data) {
      const double t = static_cast<double>(std::abs(v)) / denom;
      const int b = std::min(bins - 1, static_cast<int>(t * bins));
      ++st.counts[static_cast<size_t>(b)];
      st.min = std::min(st.min, t);
      st.max = std::max(st.max, t);
      sum += t;
      ++st.total;
    }
  }
  st.mean = sum / static_cast<double>(st.total);
  return st;
}

} // namespace pisf::physim
