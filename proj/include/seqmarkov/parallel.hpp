#ifndef SEQMARKOV_PARALLEL_HPP
#define SEQMARKOV_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace seqmarkov {

// Number of worker threads used when a caller passes 0. Reads
// SEQMARKOV_THREADS, falling back to 1.
unsigned default_thread_count();

// Runs `task(i)` for every i in [0, count) on up to `threads` workers.
// Tasks must write only to their own slot; callers reduce the slots in index
// order afterwards, so results never depend on the worker count. The first
// exception thrown by any task is rethrown after all workers join.
template <typename Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
  if (threads == 0) threads = default_thread_count();
  const std::size_t workers = std::min<std::size_t>(threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body);
  body();
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

// Fixed block size for splitting sequences into reduction units. Blocks are
// independent of the worker count.
inline constexpr std::size_t kReductionBlock = 32;

}  // namespace seqmarkov

#endif  // SEQMARKOV_PARALLEL_HPP
