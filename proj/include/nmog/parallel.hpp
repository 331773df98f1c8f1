// SPDX-License-Identifier: Apache-2.0
#ifndef NMOG_PARALLEL_HPP
#define NMOG_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace nmog {

// Parallelism width from NMOG_THREADS: unset or 1 -> sequential,
// 0 -> hardware concurrency, n -> n threads.
int configured_thread_count();

// Static contiguous-chunk partition of [0, count). Each index is processed
// by exactly one thread and all writes are index-owned, so results are
// bitwise identical to the sequential order for any width.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& chunk_fn,
                  int width = -1);

// Convenience per-index form.
void parallel_for_each(std::size_t count, const std::function<void(std::size_t)>& fn,
                       int width = -1);

} // namespace nmog

#endif
