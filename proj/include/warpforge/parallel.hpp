#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace warpforge {

/// Execution policy for the data-parallel kernels. Both variants produce
/// bit-identical results; `Serial` is kept as the reference for tests and
/// benchmarks.
enum class Exec { Serial, Parallel };

/// Number of worker threads the parallel kernels will use.
int worker_count();

/// Caps the worker count (0 = runtime default).
void set_worker_count(int n);

/// Reads WARPFORGE_THREADS and applies it. Returns the value applied
/// (0 when unset or auto).
int apply_thread_env();

/// Fixed-order sum of per-row partials: each row is reduced serially and the
/// row totals are then combined in a pairwise tree, so the result does not
/// depend on the thread count.
double pairwise_sum(std::span<const double> values);

}  // namespace warpforge
