#pragma once

// Deterministic parallel reduction over observation ranges. Work is cut
// into fixed-size chunks and partial results are combined in chunk
// order, so the result does not depend on the number of worker threads.
// RESLOGIT_THREADS caps the pool; 1 disables threading entirely.

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include <Eigen/Dense>

namespace reslogit {

inline int max_threads() {
  if (const char* env = std::getenv("RESLOGIT_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

inline constexpr Eigen::Index kChunkGrain = 1024;

/// Applies `per_chunk(begin, end, partial)` over [0, n) in chunks of
/// kChunkGrain and folds the partials in chunk order with
/// `combine(acc, partial)`. T must be default-constructible to an
/// additive identity via `make_zero()`.
template <typename T, typename PerChunk, typename Combine, typename MakeZero>
T chunked_reduce(Eigen::Index n, PerChunk per_chunk, Combine combine,
                 MakeZero make_zero) {
  const Eigen::Index n_chunks = (n + kChunkGrain - 1) / kChunkGrain;
  const int threads = std::min<Eigen::Index>(max_threads(), n_chunks);

  if (threads <= 1 || n_chunks <= 1) {
    T acc = make_zero();
    for (Eigen::Index c = 0; c < n_chunks; ++c) {
      T partial = make_zero();
      per_chunk(c * kChunkGrain, std::min(n, (c + 1) * kChunkGrain), partial);
      combine(acc, partial);
    }
    return acc;
  }

  std::vector<T> partials;
  partials.reserve(static_cast<std::size_t>(n_chunks));
  for (Eigen::Index c = 0; c < n_chunks; ++c) partials.push_back(make_zero());

  std::atomic<Eigen::Index> next{0};
  auto worker = [&] {
    for (;;) {
      const Eigen::Index c = next.fetch_add(1);
      if (c >= n_chunks) break;
      per_chunk(c * kChunkGrain, std::min(n, (c + 1) * kChunkGrain),
                partials[static_cast<std::size_t>(c)]);
    }
  };

  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  T acc = make_zero();
  for (Eigen::Index c = 0; c < n_chunks; ++c) {
    combine(acc, partials[static_cast<std::size_t>(c)]);
  }
  return acc;
}

}  // namespace reslogit
