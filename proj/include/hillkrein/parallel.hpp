#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace hillkrein {

// Runs body(begin, end) over [0, count) split into contiguous chunks.
// Each index is owned by exactly one chunk, so results are deterministic.
template <class Body>
void parallel_chunks(long count, Body&& body, int threads = 0) {
  if (count <= 0) return;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<long>(threads, count));
  if (threads <= 1 || count < 8) {
    body(0L, count);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (count + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const long b = t * chunk, e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace hillkrein
