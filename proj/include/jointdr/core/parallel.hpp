#pragma once

#include <cstddef>
#include <functional>

namespace jointdr {

/// Worker count from JOINTDR_WORKERS, else the hardware concurrency (at least 1).
std::size_t default_workers();

/// Runs body(i) for i in [0, count) on up to `workers` threads.
///
/// Work is handed out by index; callers write results into slots keyed by i,
/// which keeps output independent of the worker count. The exception from the
/// lowest failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body);

/// Mean of f(0..count-1) with a fixed chunked, compensated summation order, so
/// the result is bitwise identical for every worker count.
double deterministic_mean(std::size_t count, std::size_t workers,
                          const std::function<double(std::size_t)>& f);

}  // namespace jointdr
