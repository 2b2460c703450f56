// SPDX-License-Identifier: Apache-2.0
#ifndef FDNET_DETAIL_PARALLEL_HPP
#define FDNET_DETAIL_PARALLEL_HPP

#include <algorithm>
#include <thread>
#include <vector>

#include "fdnet/tensor.hpp"

namespace fdnet::detail {

// Splits [0, count) into contiguous chunks. Each index is processed by exactly
// one thread and in the same way as the serial loop, so results do not depend
// on the thread count.
template <typename F>
void parallel_for(Index count, int threads, F&& body) {
  const Index workers = std::min<Index>(std::max(threads, 1), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(static_cast<std::size_t>(workers - 1));
  const Index chunk = (count + workers - 1) / workers;
  for (Index t = 1; t < workers; ++t) {
    const Index lo = t * chunk;
    const Index hi = std::min(count, lo + chunk);
    pool.emplace_back([&body, lo, hi] {
      for (Index i = lo; i < hi; ++i) body(i);
    });
  }
  for (Index i = 0; i < std::min(count, chunk); ++i) body(i);
}

}  // namespace fdnet::detail

#endif  // FDNET_DETAIL_PARALLEL_HPP
