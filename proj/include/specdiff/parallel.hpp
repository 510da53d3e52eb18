#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace specdiff {

/// Number of workers for `requested` (0 = hardware concurrency).
inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Splits [0, n) into fixed-size chunks and calls fn(chunk_index, begin, end)
/// for each chunk on up to `threads` workers. Chunk boundaries depend only on
/// n and chunk_size, so per-chunk results merged in chunk order are
/// independent of the worker count.
template <class Fn>
void parallel_chunks(std::int64_t n, std::int64_t chunk_size, unsigned threads, Fn&& fn) {
  const std::int64_t n_chunks = (n + chunk_size - 1) / chunk_size;
  auto run_chunk = [&](std::int64_t c) {
    const std::int64_t begin = c * chunk_size;
    fn(c, begin, std::min(n, begin + chunk_size));
  };
  const unsigned workers = static_cast<unsigned>(std::min<std::int64_t>(resolve_threads(threads), n_chunks));
  if (workers <= 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
    return;
  }
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::int64_t c = next++; c < n_chunks; c = next++) {
        try {
          run_chunk(c);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = n_chunks;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace specdiff
