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

#include "multimix/mixing.hpp"

#include "multimix/errors.hpp"

namespace multimix {

Matrix pairwise_operator(const PairwiseMixSpec& spec) {
  const std::size_t b = spec.permutation.size();
  spec.validate(b);
  Matrix op(b, b);
  for (std::size_t k = 0; k < b; ++k) {
    op(k, k) = spec.lambda;
    op(spec.permutation[k], k) += 1.0 - spec.lambda;
  }
  return op;
}

Matrix input_mixup(const Matrix& x, const PairwiseMixSpec& spec) {
  require(spec.permutation.size() == x.cols(), "input_mixup: permutation length != batch size");
  return matmul(x, pairwise_operator(spec));
}

MixOutcome manifold_mixup(const Matrix& z, const Matrix& y, const PairwiseMixSpec& spec) {
  require(z.cols() == y.cols(), "manifold_mixup: embeddings and targets differ in batch size");
  require(spec.permutation.size() == z.cols(), "manifold_mixup: permutation length != batch size");
  const Matrix op = pairwise_operator(spec);
  return {matmul(z, op), matmul(y, op)};
}

MixOutcome multimix(const Matrix& z, const Matrix& y, const InterpolationMatrix& lam) {
  require(z.cols() == y.cols(), "multimix: embeddings and targets differ in batch size");
  require(lam.batch() == z.cols(), "multimix: interpolation matrix rows != batch size");
  return {matmul(z, lam.lambda()), matmul(y, lam.lambda())};
}

Matrix multimix_backward(const Matrix& grad_mixed, const InterpolationMatrix& lam) {
  require(grad_mixed.cols() == lam.generated(),
          "multimix_backward: gradient columns != generated count");
  return matmul_transposed(grad_mixed, lam.lambda());
}

}  // namespace multimix
