/*
 * Copyright (C) 2026 The hiercat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HIERCAT_RNG_HPP_
#define HIERCAT_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>
#include <vector>

#include "hiercat/common.hpp"

namespace hiercat {

// Deterministic random source. All samplers are implemented on top of the
// raw 64-bit mt19937_64 stream so that results do not depend on the standard
// library's distribution implementations. Every run that matters for
// reproducibility derives its generator from a seed via fork(), never from
// entropy.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Child stream addressed by a path of integers. Derived from the original
  // seed, not from the current generator state, so forks are insensitive to
  // how many draws were consumed before the fork.
  Rng fork(std::initializer_list<std::uint64_t> path) const {
    std::uint64_t s = seed_;
    for (std::uint64_t p : path) s = mix(s ^ mix(p + 0x9e3779b97f4a7c15ull));
    return Rng(s);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [lo, hi], inclusive. Lemire multiply-shift rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error(Errc::InvalidArgument, "uniform_int: hi < lo");
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
    if (range == 0) return lo + static_cast<std::int64_t>(next_u64());
    while (true) {
      const std::uint64_t x = next_u64();
      const unsigned __int128 m =
          static_cast<unsigned __int128>(x) * static_cast<unsigned __int128>(range);
      const std::uint64_t low = static_cast<std::uint64_t>(m);
      if (low < range) {
        const std::uint64_t threshold = (-range) % range;
        if (low < threshold) continue;
      }
      return lo + static_cast<std::int64_t>(m >> 64);
    }
  }

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Poisson draw. Knuth multiplication below lambda = 10, transformed
  // rejection with squeeze (Hormann's PTRS) above; runtime is O(1) in lambda
  // for the rejection branch.
  std::int64_t poisson(double lambda) {
    if (!(lambda >= 0) || !std::isfinite(lambda))
      throw Error(Errc::InvalidArgument, "poisson: lambda must be finite and >= 0");
    if (lambda == 0) return 0;
    if (lambda < 10.0) {
      const double limit = std::exp(-lambda);
      std::int64_t k = 0;
      double prod = uniform();
      while (prod > limit) {
        ++k;
        prod *= uniform();
      }
      return k;
    }
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(kf);
      if (kf < 0 || (us < 0.013 && v > us)) continue;
      const std::int64_t k = static_cast<std::int64_t>(kf);
      const double lhs = std::log(v * invalpha / (a / (us * us) + b));
      const double rhs =
          kf * loglam - lambda - std::lgamma(kf + 1.0);
      if (lhs <= rhs) return k;
    }
  }

  // Fisher-Yates, descending.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j =
          static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  // splitmix64 finalizer; also used to expand seeds.
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace hiercat

#endif  // HIERCAT_RNG_HPP_
