// SPDX-License-Identifier: Apache-2.0
#include "nmog/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace nmog {

int configured_thread_count() {
  const char* env = std::getenv("NMOG_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long parsed = std::strtol(env, &end, 10);
  if (end == env || parsed < 0) return 1;
  if (parsed == 0) {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }
  return static_cast<int>(parsed);
}

void parallel_for(std::size_t count,
                  const std::function<void(std::size_t, std::size_t)>& chunk_fn,
                  int width) {
  if (count == 0) return;
  if (width < 0) width = configured_thread_count();
  const std::size_t threads =
      std::min<std::size_t>(std::max(width, 1), count);
  if (threads <= 1) {
    chunk_fn(0, count);
    return;
  }
  const std::size_t chunk = (count + threads - 1) / threads;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = t * chunk;
    const std::size_t end = std::min(begin + chunk, count);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        chunk_fn(begin, end);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void parallel_for_each(std::size_t count,
                       const std::function<void(std::size_t)>& fn, int width) {
  parallel_for(
      count,
      [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      },
      width);
}

} // namespace nmog
