#pragma once

// Deterministic block-parallel Monte Carlo helpers. Work is cut into blocks
// of a fixed size; each block's result depends only on its index range, and
// per-block results are merged along a fixed pairwise tree, so output is
// independent of the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mmc {

inline constexpr std::size_t kBlockSize = 2048;

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1u : hw;
}

/// Calls fn(begin, end) for each block and returns results in block order.
template <typename T, typename Fn>
std::vector<T> map_blocks(std::size_t count, unsigned workers, Fn&& fn,
                          std::size_t block = kBlockSize) {
  const std::size_t nblocks = (count + block - 1) / block;
  std::vector<T> out(nblocks);
  const unsigned nthreads =
      static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), nblocks));
  auto run = [&](std::size_t b) {
    const std::size_t begin = b * block;
    out[b] = fn(begin, std::min(count, begin + block));
  };
  if (nthreads <= 1) {
    for (std::size_t b = 0; b < nblocks; ++b) run(b);
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (unsigned t = 0; t < nthreads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t b = t; b < nblocks; b += nthreads) run(b);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Reduces items[lo, hi) with a balanced binary tree.
template <typename T, typename Merge>
T tree_reduce(const std::vector<T>& items, Merge&& merge, std::size_t lo,
              std::size_t hi) {
  if (hi - lo == 1) return items[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return merge(tree_reduce(items, merge, lo, mid), tree_reduce(items, merge, mid, hi));
}

template <typename T, typename Merge>
T tree_reduce(const std::vector<T>& items, Merge&& merge, T empty = T{}) {
  if (items.empty()) return empty;
  return tree_reduce(items, merge, 0, items.size());
}

/// Running mean and sum of squared deviations (Chan et al. merge).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }

  friend Moments merge(const Moments& a, const Moments& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    Moments r;
    r.n = a.n + b.n;
    const double d = b.mean - a.mean;
    const double fb = static_cast<double>(b.n) / static_cast<double>(r.n);
    r.mean = a.mean + d * fb;
    r.m2 = a.m2 + b.m2 + d * d * static_cast<double>(a.n) * fb;
    return r;
  }
};

/// Mean/SE of fn(index) over [0, count) with deterministic reduction.
template <typename Fn>
Moments parallel_moments(std::size_t count, unsigned workers, Fn&& fn) {
  auto blocks = map_blocks<Moments>(count, workers, [&](std::size_t b, std::size_t e) {
    Moments m;
    for (std::size_t k = b; k < e; ++k) m.add(fn(k));
    return m;
  });
  return tree_reduce(blocks, [](const Moments& a, const Moments& b) { return merge(a, b); });
}

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed ^ mix64(index + 0x632be59bd9b4e019ULL));
}

}  // namespace mmc
