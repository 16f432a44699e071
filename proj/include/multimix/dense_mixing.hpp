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

#ifndef MULTIMIX_DENSE_MIXING_HPP
#define MULTIMIX_DENSE_MIXING_HPP

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "multimix/numerics.hpp"
#include "multimix/rng.hpp"
#include "multimix/sampling.hpp"

namespace multimix {

/*
 * Structured embeddings of a mini-batch: b examples, each a d x r block
 * (d channels, r spatial positions). Storage is grouped by position, r
 * matrices Z^j of shape d x b; block(i) regroups by example. Column i of
 * position(j) is column j of block(i).
 */
class DenseEmbedding {
 public:
  DenseEmbedding() = default;
  DenseEmbedding(std::size_t channels, std::size_t positions, std::size_t batch);
  explicit DenseEmbedding(std::vector<Matrix> by_position);

  static DenseEmbedding from_blocks(std::span<const Matrix> blocks);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t positions() const noexcept { return by_position_.size(); }
  std::size_t batch() const noexcept { return batch_; }

  const Matrix& position(std::size_t j) const { return by_position_.at(j); }
  Matrix& position(std::size_t j) { return by_position_.at(j); }
  const std::vector<Matrix>& by_position() const noexcept { return by_position_; }

  Matrix block(std::size_t i) const;

  /// Mean over positions, d x b. For a linear classifier this commutes with
  /// applying the classifier densely and averaging the logits.
  Matrix pooled() const;

 private:
  std::size_t channels_ = 0;
  std::size_t batch_ = 0;
  std::vector<Matrix> by_position_;
};

enum class AttentionSource { Gap, Cam, None };
enum class Nonlinearity { Softmax, ReluL1 };

struct AttentionConfig {
  AttentionSource source = AttentionSource::Gap;
  Nonlinearity nonlinearity = Nonlinearity::ReluL1;
};

AttentionSource parse_attention_source(std::string_view text);
Nonlinearity parse_nonlinearity(std::string_view text);
std::string_view to_string(AttentionSource source);
std::string_view to_string(Nonlinearity nonlinearity);

/// Floor assigned to the loss weight of a column whose attention-scaled
/// coefficients are all zero.
inline constexpr double kDenseWeightFloor = 1e-8;

/// h(z^T u) over the r positions of one example; uniform when the source is
/// None or when ReLU zeroes every score.
std::vector<double> attention_map(const Matrix& z, std::span<const double> u,
                                  const AttentionConfig& cfg);

/// Row means of z (d x r).
std::vector<double> gap_vector(const Matrix& z);

/// W y for a one-hot y: the classifier column of the labelled class.
std::vector<double> cam_vector(const Matrix& classifier_weights, std::span<const double> y);

struct DenseWeights {
  Matrix normalized;            ///< columns of diag(a) Lambda rescaled to the simplex
  std::vector<double> weights;  ///< column sums of diag(a) Lambda
};

/// Scales the rows of lam by attention and renormalizes the columns. A column
/// with zero attention mass keeps its unscaled coefficients and gets weight
/// kDenseWeightFloor.
DenseWeights dense_interpolation_weights(std::span<const double> attention, const Matrix& lam);

struct DenseMixOutcome {
  std::vector<Matrix> mixed_embeddings;     ///< per position, d x n
  std::vector<Matrix> mixed_targets;        ///< per position, c x n
  std::vector<std::vector<double>> weights; ///< per position, length n
  std::vector<Matrix> coefficients;         ///< per position, b x n, columns on the simplex
  Matrix attention;                         ///< b x r; row i is the attention map of example i

  std::size_t positions() const noexcept { return mixed_embeddings.size(); }
  std::size_t generated() const noexcept {
    return mixed_embeddings.empty() ? 0 : mixed_embeddings.front().cols();
  }
  std::size_t terms() const noexcept { return positions() * generated(); }
};

/// Per-example attention maps, b x r. CAM needs `classifier_weights` (d x c)
/// and one-hot columns in y.
Matrix batch_attention(const DenseEmbedding& z, const Matrix& y, const AttentionConfig& cfg,
                       const Matrix* classifier_weights);

/// r independent b x n interpolation matrices; matrix j comes from the
/// stream fork(j) of a child split from `rng`.
std::vector<InterpolationMatrix> draw_position_lambdas(std::size_t b, std::size_t n,
                                                       std::size_t m, const AlphaMode& mode,
                                                       std::size_t positions, Rng& rng);

/// Dense MultiMix with the attention (b x r) and per-position interpolation
/// matrices supplied by the caller.
DenseMixOutcome dense_multimix_with(const DenseEmbedding& z, const Matrix& y,
                                    const Matrix& attention,
                                    std::span<const InterpolationMatrix> lambdas);

/*
 * Dense MultiMix. Attention is computed on the clean embeddings; each
 * position j draws its own b x n interpolation matrix from the stream
 * fork(j) of a child split from `rng`, then mixes Z^j and Y with the
 * attention-renormalized coefficients.
 */
DenseMixOutcome dense_multimix(const DenseEmbedding& z, const Matrix& y,
                               const AttentionConfig& cfg, std::size_t n, std::size_t m,
                               const AlphaMode& mode, Rng& rng,
                               const Matrix* classifier_weights = nullptr);

/// Pairwise mixup applied at every position with shared lambda and Pi;
/// all loss weights are 1.
DenseMixOutcome dense_pairwise_mix(const DenseEmbedding& z, const Matrix& y,
                                   const PairwiseMixSpec& spec);

}  // namespace multimix

#endif  // MULTIMIX_DENSE_MIXING_HPP
