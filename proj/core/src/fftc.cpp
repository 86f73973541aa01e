#include "pisf/fftc.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <vector>

namespace pisf::fftc {

namespace {

// FFTW planning is not thread-safe; execution on distinct buffers is.
std::mutex g_plan_mutex;

struct PlanKey {
  size_t h, w; // w == 0 for 1-d
  bool forward;
  bool operator<(const PlanKey& o) const {
    return std::tie(h, w, forward) < std::tie(o.h, o.w, o.forward);
  }
};

template <typename T>
struct Fftw;

template <>
struct Fftw<float> {
  using plan_t = fftwf_plan;
  using cplx = fftwf_complex;
  static plan_t plan_1d(int n, cplx* buf, int sign) {
    return fftwf_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static plan_t plan_2d(int h, int w, cplx* buf, int sign) {
    return fftwf_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static void exec(plan_t p, cplx* in, cplx* out) { fftwf_execute_dft(p, in, out); }
};

template <>
struct Fftw<double> {
  using plan_t = fftw_plan;
  using cplx = fftw_complex;
  static plan_t plan_1d(int n, cplx* buf, int sign) {
    return fftw_plan_dft_1d(n, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static plan_t plan_2d(int h, int w, cplx* buf, int sign) {
    return fftw_plan_dft_2d(h, w, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  static void exec(plan_t p, cplx* in, cplx* out) { fftw_execute_dft(p, in, out); }
};

template <typename T>
typename Fftw<T>::plan_t get_plan(size_t h, size_t w, bool forward) {
  static std::map<PlanKey, typename Fftw<T>::plan_t> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  const PlanKey key{h, w, forward};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::vector<std::complex<T>> scratch(h * std::max<size_t>(w, 1));
  auto* buf = reinterpret_cast<typename Fftw<T>::cplx*>(scratch.data());
  const int sign = forward ? FFTW_FORWARD : FFTW_BACKWARD;
  typename Fftw<T>::plan_t p =
      w == 0 ? Fftw<T>::plan_1d(static_cast<int>(h), buf, sign)
             : Fftw<T>::plan_2d(static_cast<int>(h), static_cast<int>(w), buf, sign);
  cache.emplace(key, p);
  return p;
}

template <typename T>
void run_1d(std::complex<T>* x, size_t n, size_t howmany, bool forward) {
  if (n == 0) return;
  auto plan = get_plan<T>(n, 0, forward);
  const size_t dc = n / 2;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(n)));

  thread_local std::vector<std::complex<T>> tmp;
  tmp.resize(n);
  for (size_t b = 0; b < howmany; ++b) {
    std::complex<T>* sig = x + b * n;
    // centered -> standard order
    for (size_t j = 0; j < n; ++j) tmp[j] = sig[(j + dc) % n];
    Fftw<T>::exec(plan, reinterpret_cast<typename Fftw<T>::cplx*>(tmp.data()),
                  reinterpret_cast<typename Fftw<T>::cplx*>(tmp.data()));
    // standard -> centered, with the orthonormal factor
    for (size_t j = 0; j < n; ++j) sig[(j + dc) % n] = tmp[j] * scale;
  }
}

template <typename T>
void run_2d(std::complex<T>* x, size_t h, size_t w, size_t howmany, bool forward) {
  if (h == 0 || w == 0) return;
  auto plan = get_plan<T>(h, w, forward);
  const size_t dh = h / 2, dw = w / 2, hw = h * w;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(hw)));

  thread_local std::vector<std::complex<T>> tmp;
  tmp.resize(hw);
  for (size_t b = 0; b < howmany; ++b) {
    std::complex<T>* plane = x + b * hw;
    for (size_t r = 0; r < h; ++r) {
      const size_t sr = (r + dh) % h;
      for (size_t c = 0; c < w; ++c) tmp[r * w + c] = plane[sr * w + (c + dw) % w];
    }
    Fftw<T>::exec(plan, reinterpret_cast<typename Fftw<T>::cplx*>(tmp.data()),
                  reinterpret_cast<typename Fftw<T>::cplx*>(tmp.data()));
    for (size_t r = 0; r < h; ++r) {
      const size_t sr = (r + dh) % h;
      for (size_t c = 0; c < w; ++c) plane[sr * w + (c + dw) % w] = tmp[r * w + c] * scale;
    }
  }
}

} // namespace

void fft1d_centered(std::complex<float>* x, size_t n, size_t howmany, bool forward) {
  run_1d(x, n, howmany, forward);
}
void fft1d_centered(std::complex<double>* x, size_t n, size_t howmany, bool forward) {
  run_1d(x, n, howmany, forward);
}
void fft2d_centered(std::complex<float>* x, size_t h, size_t w, size_t howmany, bool forward) {
  run_2d(x, h, w, howmany, forward);
}
void fft2d_centered(std::complex<double>* x, size_t h, size_t w, size_t howmany, bool forward) {
  run_2d(x, h, w, howmany, forward);
}

} // namespace pisf::fftc
