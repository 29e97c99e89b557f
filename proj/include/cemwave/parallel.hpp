#pragma once

#include <cstddef>
#include <exception>

namespace cemwave {

// Kernels that loop over independent items (cells, coarse elements,
// neighborhoods) come in two flavours. `serial` is the reference path that
// tests compare against; `parallel` distributes the same loop with OpenMP and
// writes each item's result into its own slot, so both paths produce
// bitwise-identical output.
enum class Exec { serial, parallel };

template <typename Fn>
void for_each_index(Exec exec, std::ptrdiff_t count, Fn&& fn) {
  if (exec == Exec::serial) {
    for (std::ptrdiff_t i = 0; i < count; ++i) fn(i);
    return;
  }
  // Exceptions must not escape an OpenMP region; keep the one from the
  // lowest index so the reported failure matches the serial path.
  std::exception_ptr failure;
  std::ptrdiff_t failed_at = count;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(i);
    } catch (...) {
#pragma omp critical(cemwave_for_each_index)
      if (i < failed_at) {
        failed_at = i;
        failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace cemwave
