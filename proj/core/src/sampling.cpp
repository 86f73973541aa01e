#include "pisf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "pisf/arrayio.hpp"
#include "pisf/errors.hpp"
#include "pisf/rng.hpp"

using nlohmann::json;

namespace pisf::sampling {

namespace {

uint64_t rounded_count(uint64_t total, double af) {
  return static_cast<uint64_t>(std::llround(static_cast<double>(total) / af));
}

// Partial Fisher-Yates: draw `k` distinct values from `pool` in place.
std::vector<uint64_t> draw_without_replacement(std::vector<uint64_t>& pool, uint64_t k,
                                               rng::Stream& rs) {
  std::vector<uint64_t> out;
  out.reserve(k);
  for (uint64_t i = 0; i < k; ++i) {
    const uint64_t j = i + rs.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
    out.push_back(pool[i]);
  }
  return out;
}

std::string scheme_name(Scheme2D s) {
  switch (s) {
    case Scheme2D::UniformRandom: return "uniform2d";
    case Scheme2D::VariableDensity: return "variable_density2d";
    case Scheme2D::FullySampledReadout: return "readout_replicated";
  }
  return "uniform2d";
}

Scheme2D scheme_from_name(const std::string& s) {
  if (s == "uniform2d") return Scheme2D::UniformRandom;
  if (s == "variable_density2d") return Scheme2D::VariableDensity;
  if (s == "readout_replicated") return Scheme2D::FullySampledReadout;
  throw ValidationError("unknown 2d mask scheme: " + s);
}

void write_sidecar(const std::string& path, double af, uint64_t acs_width,
                   const std::string& scheme, uint64_t seed) {
  json j{{"requested_af", af}, {"acs_width", acs_width}, {"scheme", scheme}, {"seed", seed}};
  std::ofstream out(path + ".json");
  if (!out) throw IoError(IoError::Kind::OpenFailed, "cannot write mask sidecar for " + path);
  out << j.dump(2) << "\n";
}

bool read_sidecar(const std::string& path, json& j) {
  std::ifstream in(path + ".json");
  if (!in) return false;
  try {
    in >> j;
  } catch (const json::exception&) {
    return false;
  }
  return true;
}

} // namespace

uint64_t Mask1D::sampled_count() const {
  return std::accumulate(sampled.begin(), sampled.end(), uint64_t{0});
}

uint64_t Mask2D::sampled_count() const {
  return std::accumulate(sampled.begin(), sampled.end(), uint64_t{0});
}

Mask2D::Rect Mask2D::acs_rect() const {
  const uint64_t dr = rows / 2, dc = cols / 2;
  if (!at(dr, dc)) throw ValidationError("mask2d: DC not sampled, no calibration region");
  uint64_t l = dc, r = dc;
  while (l > 0 && at(dr, l - 1)) --l;
  while (r + 1 < cols && at(dr, r + 1)) ++r;
  auto row_full = [&](uint64_t rr) {
    for (uint64_t c = l; c <= r; ++c)
      if (!at(rr, c)) return false;
    return true;
  };
  uint64_t t = dr, b = dr;
  while (t > 0 && row_full(t - 1)) --t;
  while (b + 1 < rows && row_full(b + 1)) ++b;
  return {t, l, b - t + 1, r - l + 1};
}

Mask1D make_cartesian_1d(uint64_t n, double af, uint64_t acs_width, uint64_t seed) {
  if (n == 0) throw ValidationError("mask: n must be positive");
  if (acs_width >= n) throw ValidationError("mask: acs_width must be < n");
  const double af_cap = static_cast<double>(n) / static_cast<double>(std::max<uint64_t>(acs_width, 1));
  if (af < 1.0 || af > af_cap)
    throw ValidationError("mask: af out of range [1, " + std::to_string(af_cap) + "]");

  const uint64_t count = rounded_count(n, af);
  if (count < std::max<uint64_t>(acs_width, 1))
    throw ValidationError("mask: round(n/af) < acs_width, infeasible");

  Mask1D m;
  m.sampled.assign(n, 0);
  m.acs_width = acs_width;
  m.requested_af = af;
  m.seed = seed;
  m.scheme = "cartesian1d";

  // DC is always acquired, with or without an ACS block.
  const uint64_t dc = m.dc();
  uint64_t base = 0;
  if (acs_width > 0) {
    const uint64_t start = dc - acs_width / 2;
    for (uint64_t i = 0; i < acs_width; ++i) m.sampled[start + i] = 1;
    base = acs_width;
  } else {
    m.sampled[dc] = 1;
    base = 1;
  }

  std::vector<uint64_t> pool;
  pool.reserve(n - base);
  for (uint64_t i = 0; i < n; ++i)
    if (!m.sampled[i]) pool.push_back(i);

  rng::Stream rs(seed);
  for (uint64_t idx : draw_without_replacement(pool, count - base, rs)) m.sampled[idx] = 1;
  return m;
}

Mask1D make_partial_fourier_1d(uint64_t n, double fraction, uint64_t acs_width) {
  if (n == 0) throw ValidationError("mask: n must be positive");
  if (!(fraction > 0.5 && fraction <= 1.0))
    throw ValidationError("partial fourier: fraction must be in (0.5, 1]");
  if (acs_width >= n) throw ValidationError("mask: acs_width must be < n");

  const uint64_t len = static_cast<uint64_t>(std::llround(fraction * static_cast<double>(n)));
  const uint64_t dc = n / 2;
  const uint64_t acs_start = dc - acs_width / 2;
  const uint64_t acs_end = acs_start + std::max<uint64_t>(acs_width, 1); // DC itself when width 0

  // Anchor at the high-frequency end, shifted down just enough to cover ACS.
  const uint64_t start = std::min<uint64_t>(n - len, acs_start);
  if (acs_end > start + len)
    throw ValidationError("partial fourier: ACS block does not fit in the sampled fraction");

  Mask1D m;
  m.sampled.assign(n, 0);
  for (uint64_t i = 0; i < len; ++i) m.sampled[start + i] = 1;
  m.acs_width = acs_width;
  m.requested_af = static_cast<double>(n) / static_cast<double>(len);
  m.seed = 0;
  m.scheme = "partial_fourier";
  return m;
}

Mask2D make_random_2d(uint64_t rows, uint64_t cols, double af, uint64_t acs_width,
                      Scheme2D scheme, uint64_t seed) {
  if (rows == 0 || cols == 0) throw ValidationError("mask2d: empty grid");
  if (scheme == Scheme2D::FullySampledReadout)
    return replicate_readout(make_cartesian_1d(cols, af, acs_width, seed), rows);

  if (acs_width > std::min(rows, cols))
    throw ValidationError("mask2d: acs square exceeds grid");
  const uint64_t total = rows * cols;
  if (af < 1.0) throw ValidationError("mask2d: af must be >= 1");
  const uint64_t count = rounded_count(total, af);
  const uint64_t base = std::max<uint64_t>(acs_width * acs_width, 1);
  if (count < base)
    throw ValidationError("mask2d: round(total/af) smaller than ACS square, infeasible");

  Mask2D m;
  m.rows = rows;
  m.cols = cols;
  m.sampled.assign(total, 0);
  m.acs_width = acs_width;
  m.requested_af = af;
  m.seed = seed;
  m.scheme = scheme;

  const uint64_t dr = rows / 2, dc = cols / 2;
  if (acs_width > 0) {
    const uint64_t r0 = dr - acs_width / 2, c0 = dc - acs_width / 2;
    for (uint64_t r = 0; r < acs_width; ++r)
      for (uint64_t c = 0; c < acs_width; ++c) m.sampled[(r0 + r) * cols + (c0 + c)] = 1;
  } else {
    m.sampled[dr * cols + dc] = 1;
  }

  std::vector<uint64_t> pool;
  pool.reserve(total - base);
  for (uint64_t i = 0; i < total; ++i)
    if (!m.sampled[i]) pool.push_back(i);

  const uint64_t need = count - base;
  rng::Stream rs(seed);

  if (scheme == Scheme2D::UniformRandom) {
    for (uint64_t idx : draw_without_replacement(pool, need, rs)) m.sampled[idx] = 1;
  } else {
    // Variable density: selection probability proportional to 1/(1 + d/sigma),
    // weighted sampling without replacement via exponential keys.
    const double sigma = static_cast<double>(std::min(rows, cols)) / 4.0;
    std::vector<std::pair<double, uint64_t>> keyed;
    keyed.reserve(pool.size());
    for (uint64_t idx : pool) {
      const double rr = static_cast<double>(idx / cols) - static_cast<double>(dr);
      const double cc = static_cast<double>(idx % cols) - static_cast<double>(dc);
      const double d = std::sqrt(rr * rr + cc * cc);
      const double w = 1.0 / (1.0 + d / sigma);
      double u;
      do {
        u = rs.uniform();
      } while (u <= 0.0);
      keyed.emplace_back(-std::log(u) / w, idx);
    }
    std::nth_element(keyed.begin(), keyed.begin() + static_cast<int64_t>(need), keyed.end());
    for (uint64_t i = 0; i < need; ++i) m.sampled[keyed[i].second] = 1;
  }
  return m;
}

Mask2D replicate_readout(const Mask1D& m, uint64_t rows) {
  Mask2D out;
  out.rows = rows;
  out.cols = m.n();
  out.sampled.resize(rows * m.n());
  for (uint64_t r = 0; r < rows; ++r)
    std::copy(m.sampled.begin(), m.sampled.end(), out.sampled.begin() + r * m.n());
  out.acs_width = m.acs_width;
  out.requested_af = m.requested_af;
  out.seed = m.seed;
  out.scheme = Scheme2D::FullySampledReadout;
  return out;
}

double achieved_af(const Mask1D& m) {
  if (m.n() == 0) throw ValidationError("achieved_af: empty mask");
  const uint64_t s = m.sampled_count();
  if (s == 0) throw ValidationError("achieved_af: no sampled points");
  return static_cast<double>(m.n()) / static_cast<double>(s);
}

double achieved_af(const Mask2D& m) {
  if (m.rows * m.cols == 0) throw ValidationError("achieved_af: empty mask");
  const uint64_t s = m.sampled_count();
  if (s == 0) throw ValidationError("achieved_af: no sampled points");
  return static_cast<double>(m.rows * m.cols) / static_cast<double>(s);
}

void save_mask(const Mask1D& m, const std::string& path) {
  RealNd a({m.n()});
  for (uint64_t i = 0; i < m.n(); ++i) a.data[i] = m.sampled[i] ? 1.0f : 0.0f;
  io::write_array(path, a);
  write_sidecar(path, m.requested_af, m.acs_width, m.scheme, m.seed);
}

void save_mask(const Mask2D& m, const std::string& path) {
  RealNd a({m.rows, m.cols});
  for (size_t i = 0; i < m.sampled.size(); ++i) a.data[i] = m.sampled[i] ? 1.0f : 0.0f;
  io::write_array(path, a);
  write_sidecar(path, m.requested_af, m.acs_width, scheme_name(m.scheme), m.seed);
}

Mask1D mask_from_array(const RealNd& a) {
  a.require_ndim(1, "mask1d");
  Mask1D m;
  m.sampled.resize(a.size());
  for (size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] != 0.0f && a.data[i] != 1.0f)
      throw ValidationError("mask1d: array values must be exactly 0.0 or 1.0");
    m.sampled[i] = a.data[i] != 0.0f;
  }
  if (m.sampled_count() == 0) throw ValidationError("mask1d: no sampled points");
  // widest centered block that is fully sampled
  uint64_t w = m.sampled[m.dc()] ? 1 : 0;
  while (w < m.n()) {
    const uint64_t next = w + 1;
    const uint64_t start = m.dc() - next / 2;
    if (start + next > m.n()) break;
    bool ok = true;
    for (uint64_t i = 0; i < next; ++i) ok = ok && m.sampled[start + i];
    if (!ok) break;
    w = next;
  }
  m.acs_width = w;
  m.requested_af = achieved_af(m);
  return m;
}

Mask2D mask2d_from_array(const RealNd& a) {
  a.require_ndim(2, "mask2d");
  Mask2D m;
  m.rows = a.dims[0];
  m.cols = a.dims[1];
  m.sampled.resize(a.size());
  for (size_t i = 0; i < a.data.size(); ++i) {
    if (a.data[i] != 0.0f && a.data[i] != 1.0f)
      throw ValidationError("mask2d: array values must be exactly 0.0 or 1.0");
    m.sampled[i] = a.data[i] != 0.0f;
  }
  if (m.sampled_count() == 0) throw ValidationError("mask2d: no sampled points");
  const auto rect = m.acs_rect();
  m.acs_width = std::min(rect.h, rect.w);
  m.requested_af = achieved_af(m);
  // replicated readout pattern detection: every row identical
  bool replicated = true;
  for (uint64_t r = 1; r < m.rows && replicated; ++r)
    replicated = std::equal(m.sampled.begin(), m.sampled.begin() + static_cast<int64_t>(m.cols),
                            m.sampled.begin() + static_cast<int64_t>(r * m.cols));
  m.scheme = replicated ? Scheme2D::FullySampledReadout : Scheme2D::UniformRandom;
  return m;
}

Mask1D load_mask_1d(const std::string& path) {
  Mask1D m = mask_from_array(io::read_real(path));
  json j;
  if (read_sidecar(path, j)) {
    m.requested_af = j.value("requested_af", m.requested_af);
    m.acs_width = j.value("acs_width", m.acs_width);
    m.scheme = j.value("scheme", m.scheme);
    m.seed = j.value("seed", m.seed);
  }
  return m;
}

Mask2D load_mask_2d(const std::string& path) {
  Mask2D m = mask2d_from_array(io::read_real(path));
  json j;
  if (read_sidecar(path, j)) {
    m.requested_af = j.value("requested_af", m.requested_af);
    m.acs_width = j.value("acs_width", m.acs_width);
    if (j.contains("scheme")) m.scheme = scheme_from_name(j["scheme"].get<std::string>());
    m.seed = j.value("seed", m.seed);
  }
  return m;
}

} // namespace pisf::sampling
