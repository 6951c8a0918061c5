#pragma once

#include <algorithm>
#include <future>
#include <vector>

namespace pnpup::detail {

/// Evaluates fn(i) for i in [0, count) on up to `threads` workers. Results
/// keep index order.
template <typename Fn>
auto parallel_map(int count, int threads, Fn fn) -> std::vector<decltype(fn(0))> {
  using R = decltype(fn(0));
  std::vector<R> out;
  out.reserve(static_cast<std::size_t>(count));
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) out.push_back(fn(i));
    return out;
  }
  for (int start = 0; start < count; start += threads) {
    const int stop = std::min(count, start + threads);
    std::vector<std::future<R>> batch;
    for (int i = start; i < stop; ++i) batch.push_back(std::async(std::launch::async, fn, i));
    for (auto& f : batch) out.push_back(f.get());
  }
  return out;
}

}  // namespace pnpup::detail
