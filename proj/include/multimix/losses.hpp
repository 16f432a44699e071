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

#ifndef MULTIMIX_LOSSES_HPP
#define MULTIMIX_LOSSES_HPP

#include <cstddef>
#include <optional>
#include <span>

#include "multimix/classifier.hpp"
#include "multimix/dense_mixing.hpp"
#include "multimix/numerics.hpp"
#include "multimix/sampling.hpp"

namespace multimix {

/// Probabilities are clamped from below before taking the log.
inline constexpr double kProbabilityFloor = 1e-12;

struct LossValue {
  double value = 0.0;
  std::size_t terms = 0;  ///< number of loss columns contributing
};

/// Mean over columns of -sum_c y log p.
LossValue cross_entropy(const Matrix& y, const Matrix& p);

/// Per-column cross-entropy averaged with weights s, normalized by sum(s).
LossValue weighted_cross_entropy(const Matrix& y, const Matrix& p, std::span<const double> s);

/// dL/dlogits for L = cross_entropy(y, softmax(logits)), or its weighted
/// form when `weights` is given.
Matrix ce_gradient_wrt_logits(const Matrix& y, const Matrix& logits,
                              std::optional<std::span<const double>> weights = std::nullopt);

/// H(Y Lambda, softmax(classifier(Z Lambda))).
LossValue multimix_loss(const Matrix& z, const Matrix& y, const InterpolationMatrix& lam,
                        const Classifier& classifier);

/// Mean over positions of the weighted cross-entropy at each position.
LossValue dense_multimix_loss(const DenseMixOutcome& outcome, const Classifier& classifier);

}  // namespace multimix

#endif  // MULTIMIX_LOSSES_HPP
