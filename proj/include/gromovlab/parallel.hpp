#pragma once

#include <cstddef>
#include <functional>

namespace gromovlab {

/// Worker count from GROMOVLAB_THREADS, else the hardware concurrency.
int default_threads();

/// Calls body(i) for every i < count on up to `threads` workers. Each index
/// runs exactly once; the body must catch its own exceptions.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace gromovlab
