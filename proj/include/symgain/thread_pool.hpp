#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace symgain {

/// Worker count: explicit argument > SYMGAIN_THREADS env > hardware.
inline unsigned resolve_thread_count(unsigned requested = 0) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SYMGAIN_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs fn(begin, end) over [first, last) in chunks on `threads` workers.
/// All shared inputs must be immutable; chunks are disjoint.
inline void parallel_for_chunks(
    std::size_t first, std::size_t last, unsigned threads,
    const std::function<void(std::size_t, std::size_t)>& fn,
    std::size_t chunk = 0) {
  const std::size_t total = last - first;
  if (total == 0) return;
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
  if (threads == 1) {
    fn(first, last);
    return;
  }
  if (chunk == 0) chunk = std::max<std::size_t>(1, total / (threads * 8));
  std::atomic<std::size_t> next{first};
  auto worker = [&] {
    while (true) {
      std::size_t b = next.fetch_add(chunk);
      if (b >= last) break;
      fn(b, std::min(b + chunk, last));
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
}

}  // namespace symgain
