#pragma once

#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace m2m {

inline int hardware_threads() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

namespace detail {
inline thread_local bool inside_parallel_region = false;
}

/// Runs fn(begin, end) over static contiguous chunks of [0, n).
/// threads <= 0 means hardware concurrency. Chunking depends only on
/// (n, threads), and workers write to disjoint index ranges, so results
/// are identical at any thread count. Nested calls run inline.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  if (threads <= 0) threads = hardware_threads();
  std::size_t n_chunks = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (n_chunks <= 1 || detail::inside_parallel_region) {
    fn(std::size_t{0}, n);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto run_chunk = [&](std::size_t c) {
    detail::inside_parallel_region = true;
    std::size_t begin = n * c / n_chunks;
    std::size_t end = n * (c + 1) / n_chunks;
    try {
      fn(begin, end);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
    detail::inside_parallel_region = false;
  };

  std::vector<std::thread> workers;
  workers.reserve(n_chunks - 1);
  for (std::size_t c = 1; c < n_chunks; ++c) workers.emplace_back(run_chunk, c);
  run_chunk(0);
  for (auto& w : workers) w.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace m2m
