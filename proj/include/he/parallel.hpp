// SPDX-License-Identifier: MIT
/**
 * @file parallel.hpp
 * @brief Scheduling-independent reduction over Monte Carlo paths.
 *
 * Paths are cut into fixed chunks of kPathsPerChunk. Each chunk is
 * accumulated sequentially in path order, and chunk results are merged by a
 * fixed pairwise tree over chunk indices, so the floating-point result does
 * not depend on how many workers ran or which worker took which chunk.
 */
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace he {

inline constexpr std::int64_t kPathsPerChunk = 64;

/// 0 means: HE_WORKERS if set, else hardware concurrency.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HE_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/**
 * `make_acc()` returns an empty accumulator, `make_scratch()` per-worker
 * buffers, `path(m, acc, scratch)` adds path m, `merge(into, from)` combines.
 */
template <typename MakeAcc, typename MakeScratch, typename PathFn, typename MergeFn>
auto reduce_paths(std::int64_t paths, int workers, MakeAcc make_acc, MakeScratch make_scratch, PathFn path,
                  MergeFn merge) {
  using Acc = decltype(make_acc());
  const std::int64_t chunks = (paths + kPathsPerChunk - 1) / kPathsPerChunk;
  std::vector<Acc> partial;
  partial.reserve(static_cast<std::size_t>(chunks));
  for (std::int64_t c = 0; c < chunks; ++c) partial.push_back(make_acc());

  std::atomic<std::int64_t> next{0};
  std::mutex error_mutex;
  std::int64_t error_chunk = chunks;
  std::exception_ptr error;

  auto worker = [&]() {
    auto scratch = make_scratch();
    for (;;) {
      const std::int64_t c = next.fetch_add(1);
      if (c >= chunks) return;
      try {
        const std::int64_t end = std::min(paths, (c + 1) * kPathsPerChunk);
        for (std::int64_t m = c * kPathsPerChunk; m < end; ++m) path(m, partial[c], scratch);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (c < error_chunk) {
          error_chunk = c;
          error = std::current_exception();
        }
      }
    }
  };

  const int n = std::max(1, std::min<int>(resolve_workers(workers), static_cast<int>(std::max<std::int64_t>(chunks, 1))));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  // Fixed pairwise tree: stride 1, 2, 4, ... independent of worker count.
  if (chunks == 0) return make_acc();
  for (std::int64_t stride = 1; stride < chunks; stride *= 2) {
    for (std::int64_t i = 0; i + stride < chunks; i += 2 * stride) merge(partial[i], partial[i + stride]);
  }
  return std::move(partial[0]);
}

}  // namespace he
