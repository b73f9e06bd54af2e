#include "mxrot/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "mxrot/errors.hpp"

namespace mxrot {

int configure_threads_from_env() {
  if (const char* env = std::getenv("MXROT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 0)
      throw InvalidArgument(std::string("MXROT_THREADS must be a non-negative integer, got '") + env + "'");
    if (n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
}

void set_thread_count(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace mxrot
