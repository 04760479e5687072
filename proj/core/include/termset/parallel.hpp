#pragma once

#include <cstddef>
#include <functional>

namespace termset {

// 0 means one thread per hardware core.
std::size_t resolve_threads(std::size_t requested);

// Runs body(i) for i in [0, count) on up to `threads` workers pulling indices
// from a shared counter. If any call throws, the exception of the smallest
// failing index is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& body);

}  // namespace termset
