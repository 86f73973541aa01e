#pragma once

namespace pisf::runtime {

// Worker-parallelism knob shared by the GEMM backend and the module-level
// thread pools. Values are clamped to [1, hardware_concurrency].
void set_jobs(int jobs);
int jobs();

// PISF_JOBS environment variable, else 1.
int default_jobs();

} // namespace pisf::runtime
