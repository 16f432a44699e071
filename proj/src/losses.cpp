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

#include "multimix/losses.hpp"

#include <algorithm>
#include <cmath>

#include "multimix/errors.hpp"
#include "multimix/mixing.hpp"

namespace multimix {
namespace {

std::vector<double> column_cross_entropies(const Matrix& y, const Matrix& p) {
  require(y.rows() == p.rows() && y.cols() == p.cols(), "cross_entropy: shape mismatch");
  std::vector<double> per_column(y.cols(), 0.0);
  for (std::size_t r = 0; r < y.rows(); ++r) {
    for (std::size_t k = 0; k < y.cols(); ++k) {
      const double target = y(r, k);
      if (target != 0.0) per_column[k] -= target * std::log(std::max(p(r, k), kProbabilityFloor));
    }
  }
  return per_column;
}

void check_weights(std::span<const double> s, std::size_t n) {
  require(s.size() == n, "weighted cross-entropy: weight count != column count");
  for (double w : s) {
    require(std::isfinite(w) && w > 0.0, "weighted cross-entropy: weights must be positive");
  }
}

}  // namespace

Classifier::Classifier(Matrix w, Matrix b) : weights(std::move(w)), bias(std::move(b)) {
  require(bias.rows() == weights.cols() && bias.cols() == 1, "Classifier: bias must be c x 1");
}

Matrix Classifier::logits(const Matrix& z) const {
  require(z.rows() == weights.rows(), "Classifier::logits: embedding dim mismatch");
  Matrix out = transposed_matmul(weights, z);
  for (std::size_t c = 0; c < out.rows(); ++c) {
    const double b = bias(c, 0);
    for (double& v : out.row(c)) v += b;
  }
  return out;
}

Classifier::Gradients Classifier::backward(const Matrix& z, const Matrix& grad_logits) const {
  require(grad_logits.rows() == classes() && grad_logits.cols() == z.cols(),
          "Classifier::backward: gradient shape mismatch");
  Gradients g;
  g.weights = matmul_transposed(z, grad_logits);
  g.bias = Matrix::column_vector(row_sums(grad_logits));
  g.embeddings = matmul(weights, grad_logits);
  return g;
}

LossValue cross_entropy(const Matrix& y, const Matrix& p) {
  const auto per_column = column_cross_entropies(y, p);
  require(!per_column.empty(), "cross_entropy: no columns");
  double total = 0.0;
  for (double v : per_column) total += v;
  return {total / static_cast<double>(per_column.size()), per_column.size()};
}

LossValue weighted_cross_entropy(const Matrix& y, const Matrix& p, std::span<const double> s) {
  const auto per_column = column_cross_entropies(y, p);
  check_weights(s, per_column.size());
  double numerator = 0.0;
  double denominator = 0.0;
  for (std::size_t k = 0; k < per_column.size(); ++k) {
    numerator += per_column[k] * s[k];
    denominator += s[k];
  }
  return {numerator / denominator, per_column.size()};
}

Matrix ce_gradient_wrt_logits(const Matrix& y, const Matrix& logits,
                              std::optional<std::span<const double>> weights) {
  require(y.rows() == logits.rows() && y.cols() == logits.cols(),
          "ce_gradient_wrt_logits: shape mismatch");
  const std::size_t n = y.cols();
  std::vector<double> column_scale(n, 1.0 / static_cast<double>(n));
  if (weights) {
    check_weights(*weights, n);
    double total = 0.0;
    for (double w : *weights) total += w;
    for (std::size_t k = 0; k < n; ++k) column_scale[k] = (*weights)[k] / total;
  }
  const Matrix p = softmax_columns(logits);
  const auto mass = column_sums(y);
  Matrix grad(y.rows(), n);
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t k = 0; k < n; ++k)
      grad(r, k) = (p(r, k) * mass[k] - y(r, k)) * column_scale[k];
  return grad;
}

LossValue multimix_loss(const Matrix& z, const Matrix& y, const InterpolationMatrix& lam,
                        const Classifier& classifier) {
  const auto mixed = multimix(z, y, lam);
  const Matrix p = softmax_columns(classifier.logits(mixed.mixed_embeddings));
  return cross_entropy(mixed.mixed_targets, p);
}

LossValue dense_multimix_loss(const DenseMixOutcome& outcome, const Classifier& classifier) {
  const std::size_t r = outcome.positions();
  require(r >= 1, "dense_multimix_loss: empty outcome");
  double total = 0.0;
  std::size_t terms = 0;
  for (std::size_t j = 0; j < r; ++j) {
    const Matrix p = softmax_columns(classifier.logits(outcome.mixed_embeddings[j]));
    const auto loss = weighted_cross_entropy(outcome.mixed_targets[j], p, outcome.weights[j]);
    total += loss.value;
    terms += loss.terms;
  }
  return {total / static_cast<double>(r), terms};
}

}  // namespace multimix
