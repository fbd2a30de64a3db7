#include "eosprobe/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace eosprobe {

namespace {
std::atomic<int> g_threads{1};
}

int thread_count() noexcept { return g_threads.load(std::memory_order_relaxed); }

void set_thread_count(int n) noexcept {
  if (n < 1) n = 1;
  g_threads.store(n, std::memory_order_relaxed);
}

void parallel_for(int n, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::min(thread_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  auto run = [&] {
    for (;;) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
}

}  // namespace eosprobe
