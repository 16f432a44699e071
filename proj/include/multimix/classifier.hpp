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

#ifndef MULTIMIX_CLASSIFIER_HPP
#define MULTIMIX_CLASSIFIER_HPP

#include <cstddef>

#include "multimix/numerics.hpp"

namespace multimix {

/// Linear classifier: logits = W^T z + bias with W of shape d x c. Applied
/// column-wise, so it works unchanged on every position of a dense embedding.
struct Classifier {
  Matrix weights;  // d x c
  Matrix bias;     // c x 1

  Classifier() = default;
  Classifier(std::size_t embedding_dim, std::size_t classes)
      : weights(embedding_dim, classes), bias(classes, 1) {}
  Classifier(Matrix w, Matrix b);

  std::size_t embedding_dim() const noexcept { return weights.rows(); }
  std::size_t classes() const noexcept { return weights.cols(); }

  Matrix logits(const Matrix& z) const;

  struct Gradients {
    Matrix weights;
    Matrix bias;
    Matrix embeddings;  // d x n, gradient flowing back into z
  };

  /// Gradients given dL/dlogits for the columns z.
  Gradients backward(const Matrix& z, const Matrix& grad_logits) const;
};

}  // namespace multimix

#endif  // MULTIMIX_CLASSIFIER_HPP
