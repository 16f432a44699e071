/*
 * Copyright 2026 The MultiMix Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef MULTIMIX_RNG_HPP
#define MULTIMIX_RNG_HPP

#include <cstdint>
#include <limits>

namespace multimix {

/*
 * Counter-based splittable generator.
 *
 * Output i of a stream with key k is mix(k, i), where mix is two rounds of
 * the SplitMix64 finalizer. A stream is therefore addressable: fork(index)
 * derives an independent child keyed by (key, index) without touching the
 * parent, so work keyed by column or position index yields the same values
 * whether it runs sequentially or in parallel. split() derives a child from
 * the next counter value and advances the parent.
 *
 * Satisfies UniformRandomBitGenerator, but all samplers in this library use
 * their own transforms so streams are identical across standard libraries.
 */
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return next_u64(); }
  std::uint64_t next_u64() noexcept;

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1); never returns 0, safe for log().
  double uniform_open() noexcept;
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer in [0, n) without modulo bias. n must be positive.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept;
  double normal() noexcept;

  Rng split() noexcept;
  Rng fork(std::uint64_t index) const noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) noexcept : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace multimix

#endif  // MULTIMIX_RNG_HPP
