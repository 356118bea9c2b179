#pragma once

// Index-parallel map over [0, n) with OpenMP, plus the serial reference it is
// tested against. Results are stored by index, so the output never depends on
// the worker count or on scheduling.

#include <cstddef>
#include <exception>
#include <vector>

namespace auxsel {

/// Applies f(i) for i in [0, n) serially.
template <typename R, typename F>
std::vector<R> serial_map(std::size_t n, F&& f) {
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(f(i));
  return out;
}

/// Applies f(i) for i in [0, n) on `workers` OpenMP threads. An exception
/// thrown by any f(i) is rethrown after the loop; the lowest index wins.
template <typename R, typename F>
std::vector<R> parallel_map(std::size_t n, int workers, F&& f) {
  if (workers <= 1) return serial_map<R>(n, f);
  std::vector<R> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = f(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace auxsel
