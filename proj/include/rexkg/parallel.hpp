#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace rexkg {

// Splits [0, count) into at most `jobs` contiguous chunks and runs `fn` on
// each, one thread per chunk. Callers merge per-chunk results themselves;
// aggregations must be commutative so the output is schedule-independent.
inline void parallel_chunks(std::size_t count, int jobs,
                            const std::function<void(std::size_t, std::size_t, int)>& fn) {
  if (count == 0) return;
  std::size_t workers = jobs < 1 ? 1 : static_cast<std::size_t>(jobs);
  if (workers > count) workers = count;
  if (workers <= 1) {
    fn(0, count, 0);
    return;
  }
  std::vector<std::thread> threads;
  threads.reserve(workers);
  std::size_t base = count / workers;
  std::size_t extra = count % workers;
  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t len = base + (w < extra ? 1 : 0);
    std::size_t end = begin + len;
    threads.emplace_back([&fn, begin, end, w] { fn(begin, end, static_cast<int>(w)); });
    begin = end;
  }
  for (std::thread& t : threads) t.join();
}

}  // namespace rexkg
