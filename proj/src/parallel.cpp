#include "lamvs/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace lamvs {

namespace {
std::atomic<int> g_workers{1};
}

void set_worker_count(int workers) { g_workers = workers < 1 ? 1 : workers; }
int worker_count() { return g_workers.load(); }

void parallel_for(int n, const std::function<void(int)>& fn) {
  const int workers = std::min(g_workers.load(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([=, &fn] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace lamvs
