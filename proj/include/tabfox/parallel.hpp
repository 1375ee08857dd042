#pragma once

#include <cstddef>
#include <functional>

namespace tabfox {

/// Worker threads used by fitting routines. 0 restores the default
/// (TABFOX_THREADS environment variable, else hardware concurrency).
void set_thread_count(std::size_t n);
std::size_t thread_count();

/// Runs fn(0..n-1), possibly on several threads. Callers must write results
/// into per-index slots; outputs are then independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace tabfox
