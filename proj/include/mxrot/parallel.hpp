#pragma once

namespace mxrot {

/// Applies MXROT_THREADS (0 or unset = OpenMP default) and returns the
/// resulting thread count.
int configure_threads_from_env();

void set_thread_count(int n);
int thread_count();

}  // namespace mxrot
