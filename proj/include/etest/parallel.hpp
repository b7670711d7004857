#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace etest {

/// Execution policy for Monte Carlo kernels. Serial is the reference path; the
/// parallel path must produce bit-identical results because every trial owns
/// its own child generator and results are aggregated by trial index.
enum class Exec { Serial, Parallel };

inline int max_threads() noexcept {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

/// Calls body(i) for i in [0, n). Exceptions thrown by any iteration are
/// captured and the first one is rethrown after the loop.
template <typename Body>
void for_each_trial(Exec exec, std::size_t n, Body&& body) {
  if (exec == Exec::Serial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace etest
