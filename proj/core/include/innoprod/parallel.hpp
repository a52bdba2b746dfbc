#pragma once

#include <cstddef>
#include <functional>

namespace innoprod {

// Worker count: INNOPROD_THREADS when set to a positive integer, otherwise the
// hardware concurrency.
std::size_t thread_count();

// Runs fn(i) for i in [0, n) over thread_count() workers in contiguous blocks.
// fn must only write to state owned by index i. The first exception thrown by
// any worker is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace innoprod
