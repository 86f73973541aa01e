#include "pisf/runtime.hpp"

#include <Eigen/Core>

#include <atomic>
#include <cstdlib>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pisf::runtime {

namespace {
std::atomic<int> g_jobs{1};
}

void set_jobs(int j) {
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int clamped = std::max(1, std::min(j, hw > 0 ? hw : 1));
  g_jobs.store(clamped);
  Eigen::setNbThreads(clamped);
#ifdef _OPENMP
  omp_set_num_threads(clamped);
#endif
}

int jobs() { return g_jobs.load(); }

int default_jobs() {
  if (const char* env = std::getenv("PISF_JOBS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return 1;
}

} // namespace pisf::runtime
