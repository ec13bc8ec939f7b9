#pragma once

#include <cstddef>
#include <functional>

namespace gpmax {

/// Resolves the worker count: explicit request > GP_EXTREMES_WORKERS env var
/// > hardware concurrency.  Always >= 1.
int resolve_workers(int requested);

/// Runs fn(begin, end) over a contiguous partition of [0, total) on up to
/// `workers` threads.  Callers write results into preallocated per-index
/// slots and aggregate afterwards in index order, so the outcome is
/// independent of the worker count; with one worker the call is inline.
void parallel_chunks(std::size_t total, int workers,
                     const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace gpmax
