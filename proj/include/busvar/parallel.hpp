#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace busvar {

// Splits [0, n) into at most `threads` contiguous blocks and runs
// fn(begin, end, block) for each, one std::thread per block. Block boundaries
// depend only on n and threads, so per-block results merged in block order are
// reproducible. The first exception thrown by any block is rethrown.
template <typename Fn>
void parallel_blocks(std::size_t n, unsigned threads, Fn&& fn) {
  auto const blocks =
      static_cast<std::size_t>(std::max(1U, std::min<unsigned>(
          threads, static_cast<unsigned>(std::max<std::size_t>(n, 1)))));
  if (blocks == 1) {
    fn(std::size_t{0}, n, std::size_t{0});
    return;
  }
  std::vector<std::exception_ptr> errors(blocks);
  std::vector<std::thread> pool;
  pool.reserve(blocks);
  for (std::size_t b = 0; b < blocks; ++b) {
    auto const begin = n * b / blocks;
    auto const end = n * (b + 1) / blocks;
    pool.emplace_back([&, begin, end, b] {
      try {
        fn(begin, end, b);
      } catch (...) {
        errors[b] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  for (auto const& e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

// Number of blocks parallel_blocks will use for (n, threads).
inline std::size_t block_count(std::size_t n, unsigned threads) {
  return std::max<std::size_t>(
      1, std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  parallel_blocks(n, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
    for (auto i = begin; i < end; ++i) {
      fn(i);
    }
  });
}

}  // namespace busvar
