#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace taskprior {

/// Set the worker-thread cap for internal reductions. 0 restores the
/// default (hardware concurrency). Thread-safe.
void set_max_threads(int n);
int max_threads();

namespace detail {

/// Deterministic chunked reduction over [0, n). The range is cut into
/// fixed-size chunks independent of the thread count, each chunk is
/// reduced by `chunk_fn(begin, end, slot)`, and the per-chunk slots are
/// combined in chunk order, so the floating-point result does not depend
/// on how many threads ran.
void for_each_chunk(std::int64_t n, std::int64_t chunk_size,
                    const std::function<void(std::int64_t, std::int64_t,
                                             std::size_t)>& chunk_fn,
                    std::size_t* n_chunks_out = nullptr);

}  // namespace detail

/// Reduce `n` items to a `Partial` by summing per-chunk partials in chunk
/// order. `Partial` must be default-constructible; `combine` folds the
/// chunk results left to right.
template <class Partial, class ChunkFn, class CombineFn>
Partial chunked_reduce(std::int64_t n, std::int64_t chunk_size, ChunkFn chunk_fn,
                       CombineFn combine) {
  std::size_t n_chunks = 0;
  std::vector<Partial> partials;
  partials.resize(static_cast<std::size_t>((n + chunk_size - 1) / chunk_size));
  detail::for_each_chunk(
      n, chunk_size,
      [&](std::int64_t begin, std::int64_t end, std::size_t slot) {
        partials[slot] = chunk_fn(begin, end);
      },
      &n_chunks);
  Partial total{};
  for (std::size_t i = 0; i < n_chunks; ++i) total = combine(total, partials[i]);
  return total;
}

}  // namespace taskprior
