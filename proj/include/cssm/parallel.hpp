#pragma once

#include <cstddef>
#include <functional>

namespace cssm {

// Worker cap for parallel_for. Resolution order: explicit set_max_threads(),
// then the CSSM_THREADS environment variable, then hardware concurrency.
void set_max_threads(std::size_t n);
std::size_t max_threads();

// Runs fn(i) for i in [0, n). Each index is processed exactly once; indices are
// assigned to workers in fixed contiguous blocks, so any run is deterministic
// as long as fn(i) writes only to i-local state. Exceptions from workers are
// rethrown on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace cssm
