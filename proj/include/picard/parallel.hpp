#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace picard {

/// Items per work block. The partition into blocks depends only on the item
/// count, so block results (and anything merged from them in block order) are
/// identical for every worker count.
inline constexpr std::size_t kBlockSize = 256;

[[nodiscard]] inline std::size_t resolve_workers(std::size_t requested) noexcept {
  if (requested > 0) {
    return requested;
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs `fn(begin, end)` over fixed-size blocks of [0, n_items) on `workers`
/// threads and returns the block results in block order. The first exception
/// (in block order) is rethrown after all workers join.
template <class Result, class Fn>
std::vector<Result> run_blocks(std::size_t n_items, std::size_t workers, Fn&& fn,
                               std::size_t block_size = kBlockSize) {
  const std::size_t n_blocks = (n_items + block_size - 1) / block_size;
  std::vector<Result> results(n_blocks);
  std::vector<std::exception_ptr> errors(n_blocks);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
      const std::size_t begin = b * block_size;
      const std::size_t end = std::min(n_items, begin + block_size);
      try {
        results[b] = fn(begin, end);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    }
  };

  const std::size_t threads = std::min(resolve_workers(workers), std::max<std::size_t>(1, n_blocks));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back(work);
    }
  }

  for (auto& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
  return results;
}

}  // namespace picard
