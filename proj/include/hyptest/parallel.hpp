#ifndef HYPTEST_PARALLEL_HPP
#define HYPTEST_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace hyptest {

// Number of worker threads used by parallel maps; honours the
// HYPTEST_THREADS environment variable, otherwise hardware concurrency.
unsigned worker_count();

// Runs fn(i) for i in [0, n). Work items must only write to
// index-addressed slots so that results are schedule-independent;
// reductions are done by the caller in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace hyptest

#endif
