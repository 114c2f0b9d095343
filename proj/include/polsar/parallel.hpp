#pragma once

#include <cstddef>
#include <functional>

namespace polsar {

/// Upper bound on worker threads used by raster-level operations.
/// Initialized from POLSAR_THREADS if set, otherwise hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Runs body(begin, end) over disjoint contiguous chunks of [0, n).
/// Chunks are statically assigned, so results never depend on scheduling as long
/// as body writes only to its own indices.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace polsar
