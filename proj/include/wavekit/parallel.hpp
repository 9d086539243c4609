#pragma once

#include <cstddef>
#include <functional>

namespace wavekit {

/// Worker count: set_worker_count() if called, else WAVEKIT_THREADS, else the
/// number of logical cores.
int worker_count();
void set_worker_count(int n);

/// Runs body(begin, end) over contiguous chunks of [0, n). Chunk boundaries
/// depend only on n and the worker count, and each index is visited once, so
/// callers that write per-index results get scheduling-independent output.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace wavekit
