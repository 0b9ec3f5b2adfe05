#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace fracflow::detail {

inline constexpr std::size_t kReduceBlock = 8192;

/// Deterministic blocked reduction over [0, n).
///
/// The range is split into fixed-size blocks; each block is accumulated
/// serially by `fn(begin, end, acc)` and the per-block partials are then
/// combined pairwise in index order. The block structure is independent of
/// the thread count, so the result is bitwise reproducible whether the
/// blocks run on one thread or many.
template <std::size_t A, class BlockFn>
std::array<double, A> blocked_reduce(std::size_t n, BlockFn&& fn) {
  const std::size_t nblocks = n == 0 ? 1 : (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<std::array<double, A>> partials(nblocks);

#pragma omp parallel for schedule(static)
  for (long long b = 0; b < static_cast<long long>(nblocks); ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t end = begin + kReduceBlock < n ? begin + kReduceBlock : n;
    std::array<double, A> acc{};
    fn(begin, end, acc);
    partials[static_cast<std::size_t>(b)] = acc;
  }

  std::size_t m = nblocks;
  while (m > 1) {
    const std::size_t half = m / 2;
    for (std::size_t i = 0; i < half; ++i) {
      for (std::size_t a = 0; a < A; ++a) {
        partials[i][a] = partials[2 * i][a] + partials[2 * i + 1][a];
      }
    }
    if (m % 2 == 1) {
      partials[half] = partials[m - 1];
      m = half + 1;
    } else {
      m = half;
    }
  }
  return partials[0];
}

}  // namespace fracflow::detail
