#include "taskprior/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace taskprior {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
  int n = g_max_threads.load();
  if (n == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return std::max(1, n);
}

namespace detail {

void for_each_chunk(std::int64_t n, std::int64_t chunk_size,
                    const std::function<void(std::int64_t, std::int64_t,
                                             std::size_t)>& chunk_fn,
                    std::size_t* n_chunks_out) {
  if (chunk_size <= 0) chunk_size = 1;
  const std::size_t n_chunks =
      n <= 0 ? 0 : static_cast<std::size_t>((n + chunk_size - 1) / chunk_size);
  if (n_chunks_out) *n_chunks_out = n_chunks;
  if (n_chunks == 0) return;

  auto run_chunk = [&](std::size_t c) {
    const std::int64_t begin = static_cast<std::int64_t>(c) * chunk_size;
    const std::int64_t end = std::min<std::int64_t>(begin + chunk_size, n);
    chunk_fn(begin, end, c);
  };

  const int workers =
      std::min<int>(max_threads(), static_cast<int>(std::min<std::size_t>(
                                       n_chunks, 1u << 16)));
  if (workers <= 1 || n_chunks == 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) run_chunk(c);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t c = next.fetch_add(1); c < n_chunks; c = next.fetch_add(1))
        run_chunk(c);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

}  // namespace taskprior
