// Copyright 2026 The traffic-shaping Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace shaping {

/// Deterministic 64-bit generator (splitmix64). Every simulation unit derives
/// its own stream from the master seed plus its coordinates, so results never
/// depend on scheduling or worker count. std:: distributions are avoided on
/// purpose: all sampling goes through uniform()/bernoulli() below, which are
/// bit-stable across standard library implementations.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

  std::uint64_t operator()() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::uint64_t state_;
};

/// Derives an independent stream from (seed, tags...). Tag order matters.
template <class... Tags>
SplitMix64 derive_stream(std::uint64_t seed, Tags... tags) {
  std::uint64_t h = seed ^ 0x8F1BBCDCBFA53E0BULL;
  auto absorb = [&h](std::uint64_t t) {
    h += 0x9E3779B97F4A7C15ULL;
    h ^= t;
    h *= 0xBF58476D1CE4E5B9ULL;
    h ^= h >> 29;
  };
  (absorb(static_cast<std::uint64_t>(tags)), ...);
  return SplitMix64(h);
}

// Stream tags per subsystem, to keep derived streams disjoint.
namespace stream_tag {
inline constexpr std::uint64_t probe = 0x1001;
inline constexpr std::uint64_t episode = 0x1002;
inline constexpr std::uint64_t policy_sample = 0x1003;
inline constexpr std::uint64_t bandit = 0x1004;
inline constexpr std::uint64_t harness = 0x1005;
}  // namespace stream_tag

/// Samples an index from a fixed discrete distribution via its CDF.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const std::vector<double>& probs) {
    cdf_.reserve(probs.size());
    double acc = 0.0;
    for (double p : probs) {
      acc += p;
      cdf_.push_back(acc);
    }
    if (!cdf_.empty()) cdf_.back() = 1.0;  // guard against rounding drift
  }

  int operator()(SplitMix64& rng) const {
    const double u = rng.uniform();
    for (std::size_t i = 0; i < cdf_.size(); ++i) {
      if (u < cdf_[i]) return static_cast<int>(i);
    }
    return static_cast<int>(cdf_.size()) - 1;
  }

 private:
  std::vector<double> cdf_;
};

/// Runs fn(i) for i in [0, count). With threads > 1 the indices are pulled
/// from a shared counter; fn must write only to its own slot so the result is
/// identical for any worker count.
inline void parallel_for_index(std::int64_t count, int threads,
                               const std::function<void(std::int64_t)>& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::int64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= count) return;
      fn(i);
    }
  };
  std::vector<std::thread> pool;
  const int n = std::min<std::int64_t>(threads, count);
  pool.reserve(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
}

}  // namespace shaping
