#pragma once

namespace wmcf {

// Thread cap from WMCF_THREADS (unset or invalid: runtime default). Applies it to
// the OpenMP runtime on first call; returns the effective count.
int configure_threads();

// Explicit override, mainly for tests and benchmarks.
void set_threads(int n);

int thread_count();

}  // namespace wmcf
