#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace modelscope {

/// Worker count used when the caller passes 0: all hardware threads but one.
inline int default_cores() {
  const auto hw = static_cast<int>(std::thread::hardware_concurrency());
  return hw > 1 ? hw - 1 : 1;
}

/// Runs body(i) for i in [0, count) on `cores` threads. Each index is run
/// exactly once; the first exception is rethrown after all workers stop.
inline void parallel_for(int count, int cores, const std::function<void(int)>& body) {
  if (cores <= 0) cores = default_cores();
  if (cores == 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::jthread> pool;
  const int workers = std::min(cores, count);
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace modelscope
