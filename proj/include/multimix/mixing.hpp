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

#ifndef MULTIMIX_MIXING_HPP
#define MULTIMIX_MIXING_HPP

#include "multimix/numerics.hpp"
#include "multimix/sampling.hpp"

namespace multimix {

struct MixOutcome {
  Matrix mixed_embeddings;
  Matrix mixed_targets;
};

/// The b x b operator lambda * I + (1 - lambda) * Pi, so that X * op mixes
/// column i with column permutation[i]. Fixed points of the permutation get
/// a single accumulated entry.
Matrix pairwise_operator(const PairwiseMixSpec& spec);

/// Mixup in input space: X (lambda I + (1 - lambda) Pi).
Matrix input_mixup(const Matrix& x, const PairwiseMixSpec& spec);

/// Pairwise mixup of embeddings and targets with a shared lambda and Pi.
MixOutcome manifold_mixup(const Matrix& z, const Matrix& y, const PairwiseMixSpec& spec);

/// n convex combinations of the whole batch: (Z Lambda, Y Lambda).
MixOutcome multimix(const Matrix& z, const Matrix& y, const InterpolationMatrix& lam);

/// Gradient w.r.t. Z of a loss on Z Lambda, given its gradient w.r.t. Z Lambda.
Matrix multimix_backward(const Matrix& grad_mixed, const InterpolationMatrix& lam);

}  // namespace multimix

#endif  // MULTIMIX_MIXING_HPP
