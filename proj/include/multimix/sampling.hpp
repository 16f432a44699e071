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

#ifndef MULTIMIX_SAMPLING_HPP
#define MULTIMIX_SAMPLING_HPP

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "multimix/numerics.hpp"
#include "multimix/rng.hpp"

namespace multimix {

/// Concentration of the symmetric Dirichlet: either a constant or a fresh
/// draw from U[lo, hi] for every interpolation vector.
class AlphaMode {
 public:
  enum class Kind { Fixed, UniformRange };

  static AlphaMode fixed(double alpha);
  static AlphaMode uniform_range(double lo, double hi);
  /// Parses "fixed:A" or "uniform:LO,HI".
  static AlphaMode parse(std::string_view text);

  Kind kind() const noexcept { return kind_; }
  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }

  /// The alpha for one interpolation vector. Consumes one uniform draw in
  /// UniformRange mode and none in Fixed mode.
  double resolve(Rng& rng) const noexcept;

  std::string to_string() const;

  friend bool operator==(const AlphaMode&, const AlphaMode&) = default;

 private:
  AlphaMode(Kind kind, double lo, double hi) : kind_(kind), lo_(lo), hi_(hi) {}

  Kind kind_;
  double lo_;
  double hi_;
};

/*
 * b x n matrix whose columns are convex-combination coefficients over the b
 * examples of a mini-batch. support_size m is the number of nonzero entries
 * per sampled column (m == b means full support).
 */
class InterpolationMatrix {
 public:
  /// Validates nonnegativity, unit column sums (1e-9) and at most
  /// `support_size` nonzeros per column.
  InterpolationMatrix(Matrix lambda, std::size_t support_size);

  static InterpolationMatrix identity(std::size_t b);

  const Matrix& lambda() const noexcept { return lambda_; }
  std::size_t batch() const noexcept { return lambda_.rows(); }
  std::size_t generated() const noexcept { return lambda_.cols(); }
  std::size_t support_size() const noexcept { return support_size_; }

 private:
  Matrix lambda_;
  std::size_t support_size_;
};

/// Scalar lambda and permutation pi of pairwise mixup: example i is mixed
/// with example permutation[i].
struct PairwiseMixSpec {
  double lambda = 1.0;
  std::vector<std::size_t> permutation;

  /// Throws ContractError unless lambda is in [0, 1] and permutation is a
  /// bijection on {0, ..., b-1}.
  void validate(std::size_t b) const;
};

/// log of a Gamma(shape, 1) draw. Used directly where the draw may underflow
/// (shape well below 1), since the logarithm never does.
double sample_log_gamma(double shape, Rng& rng);

/// Gamma(shape, 1) by Marsaglia-Tsang, with the U^(1/shape) boost for
/// shape < 1. Strictly positive: an underflowing draw is returned as the
/// smallest subnormal.
double sample_gamma(double shape, Rng& rng);

/// Symmetric Dirichlet of dimension m, normalized in log space.
std::vector<double> sample_dirichlet(double alpha, std::size_t m, Rng& rng);

/// Beta(alpha, alpha) as G1 / (G1 + G2).
double sample_beta(double alpha, Rng& rng);

/// Fisher-Yates permutation of {0, ..., b-1}.
std::vector<std::size_t> sample_permutation(std::size_t b, Rng& rng);

/// One lambda ~ Beta(alpha, alpha) and one permutation for the whole batch.
PairwiseMixSpec sample_pairwise_spec(std::size_t b, double alpha, Rng& rng);

/*
 * Draws n interpolation vectors over a batch of b. Column k resolves its
 * alpha, picks a uniformly random m-subset of the batch (all of it when
 * m == b) and places a Dir(alpha) draw on it. Column k uses the stream
 * fork(k) of a child split from `rng`, so the result is independent of the
 * order in which columns are filled.
 */
InterpolationMatrix build_interpolation_matrix(std::size_t b, std::size_t n, std::size_t m,
                                               const AlphaMode& mode, Rng& rng);

}  // namespace multimix

#endif  // MULTIMIX_SAMPLING_HPP
