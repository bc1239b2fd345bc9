#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace forge {

// Worker cap for all parallel loops. 0 means hardware concurrency.
inline int& thread_count() {
  static int n = 0;
  return n;
}

inline void set_thread_count(int n) { thread_count() = n; }

inline int effective_threads() {
  int n = thread_count();
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  return std::max(1, n);
}

// Deterministic parallel loop: `fn(i)` for i in [begin, end). Work items must
// be independent and write to disjoint output slots; results are then
// identical for any worker count.
inline void parallel_for(std::size_t begin, std::size_t end,
                         const std::function<void(std::size_t)>& fn) {
  const std::size_t n = end > begin ? end - begin : 0;
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(effective_threads()), n));
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = begin + static_cast<std::size_t>(w); i < end;
           i += static_cast<std::size_t>(workers)) {
        fn(i);
      }
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace forge
