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

#include <doctest.h>

#include <cmath>

#include "multimix/classifier.hpp"
#include "multimix/data.hpp"
#include "multimix/errors.hpp"
#include "multimix/losses.hpp"
#include "multimix/mixing.hpp"
#include "support.hpp"

using namespace multimix;
using multimix::testing::central_differences;
using multimix::testing::flatten;
using multimix::testing::random_matrix;
using multimix::testing::random_stochastic;
using multimix::testing::relative_error;

namespace {

// Column-by-column cross-entropy written out from the definition.
std::vector<double> oracle_columns(const Matrix& y, const Matrix& p) {
  std::vector<double> out(y.cols(), 0.0);
  for (std::size_t k = 0; k < y.cols(); ++k)
    for (std::size_t c = 0; c < y.rows(); ++c)
      if (y(c, k) != 0.0) out[k] -= y(c, k) * std::log(std::max(p(c, k), 1e-12));
  return out;
}

Classifier random_classifier(std::size_t d, std::size_t c, Rng& rng) {
  return Classifier(random_matrix(d, c, rng), random_matrix(c, 1, rng));
}

}  // namespace

TEST_CASE("cross entropy examples") {
  const Matrix y = one_hot(std::vector<std::size_t>{0, 2, 1}, 3);
  const auto zero = cross_entropy(y, y);
  CHECK(zero.value == 0.0);
  CHECK(zero.terms == 3);

  const Matrix uniform(3, 3, 1.0 / 3.0);
  CHECK(std::abs(cross_entropy(y, uniform).value - std::log(3.0)) <= 1e-15);

  const auto hand = cross_entropy(Matrix::from_rows({{0.5}, {0.5}}), Matrix::from_rows({{0.25}, {0.75}}));
  CHECK(std::abs(hand.value - (-0.5 * std::log(0.25) - 0.5 * std::log(0.75))) <= 1e-15);
  CHECK(std::abs(hand.value - 0.8370) <= 5e-5);

  CHECK_THROWS_AS(cross_entropy(y, Matrix(3, 2)), ContractError);
}

TEST_CASE("cross entropy clamps zero probabilities") {
  const auto v = cross_entropy(Matrix::from_rows({{1}, {0}}), Matrix::from_rows({{0}, {1}}));
  CHECK(std::abs(v.value + std::log(1e-12)) <= 1e-12);
}

TEST_CASE("weighted cross entropy examples") {
  Rng rng(1);
  const Matrix y = random_stochastic(3, 4, rng);
  const Matrix p = random_stochastic(3, 4, rng);
  const std::vector<double> flat(4, 0.7);
  CHECK(std::abs(weighted_cross_entropy(y, p, flat).value - cross_entropy(y, p).value) <= 1e-15);

  const auto cols = oracle_columns(y, p);
  const std::vector<double> only{1e-300, 1e-300, 1.0, 1e-300};
  CHECK(std::abs(weighted_cross_entropy(y, p, only).value - cols[2]) <= 1e-12);

  const Matrix y2 = random_stochastic(2, 2, rng);
  const Matrix p2 = random_stochastic(2, 2, rng);
  const auto c2 = oracle_columns(y2, p2);
  const auto w = weighted_cross_entropy(y2, p2, std::vector<double>{1.0, 3.0});
  CHECK(std::abs(w.value - (c2[0] + 3.0 * c2[1]) / 4.0) <= 1e-15);
  CHECK(w.terms == 2);

  CHECK_THROWS_AS(weighted_cross_entropy(y2, p2, std::vector<double>{1.0, 0.0}), ContractError);
  CHECK_THROWS_AS(weighted_cross_entropy(y2, p2, std::vector<double>{1.0, -1.0}), ContractError);
  CHECK_THROWS_AS(weighted_cross_entropy(y2, p2, std::vector<double>{1.0}), ContractError);
}

TEST_CASE("weighted cross entropy is invariant to rescaling the weights") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix y = random_stochastic(4, 6, rng);
    const Matrix p = random_stochastic(4, 6, rng);
    std::vector<double> s(6), s10(6);
    for (std::size_t k = 0; k < 6; ++k) s10[k] = 10.0 * (s[k] = rng.uniform_open());
    const double a = weighted_cross_entropy(y, p, s).value;
    CHECK(std::abs(a - weighted_cross_entropy(y, p, s10).value) <= 1e-12 * std::max(1.0, a));
  }
}

TEST_CASE("loss values are nonnegative and obey the Gibbs bound") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix y = random_stochastic(5, 1, rng);
    const Matrix p = random_stochastic(5, 1, rng);
    double entropy = 0.0;
    for (double v : y.data()) entropy -= v * std::log(v);
    const double ce = cross_entropy(y, p).value;
    CHECK(ce >= 0.0);
    CHECK(ce >= entropy - 1e-12);
    CHECK(std::abs(cross_entropy(y, y).value - entropy) <= 1e-9);
  }
}

TEST_CASE("gradient with respect to logits") {
  Rng rng(4);
  const Matrix y = one_hot(std::vector<std::size_t>{1, 0}, 3);
  Matrix logits(3, 2, -40.0);
  logits(1, 0) = 40.0;
  logits(0, 1) = 40.0;
  const Matrix saturated = ce_gradient_wrt_logits(y, logits);
  for (double g : saturated.data()) CHECK(std::abs(g) <= 1e-15);

  for (int trial = 0; trial < 20; ++trial) {
    const Matrix ys = random_stochastic(4, 5, rng);
    Matrix lg = random_matrix(4, 5, rng, -3.0, 3.0);
    std::vector<double> s(5);
    for (double& v : s) v = rng.uniform(0.1, 2.0);

    const Matrix g = ce_gradient_wrt_logits(ys, lg);
    for (double sum : column_sums(g)) CHECK(std::abs(sum) <= 1e-12);
    const auto fd = central_differences({&lg}, [&] { return cross_entropy(ys, softmax_columns(lg)).value; });
    CHECK(relative_error(flatten({g}), fd) < 1e-6);

    const Matrix gw = ce_gradient_wrt_logits(ys, lg, std::span<const double>(s));
    const auto fdw = central_differences(
        {&lg}, [&] { return weighted_cross_entropy(ys, softmax_columns(lg), s).value; });
    CHECK(relative_error(flatten({gw}), fdw) < 1e-6);
  }
}

TEST_CASE("gradient for non-stochastic targets scales the softmax term") {
  Rng rng(5);
  const Matrix y = random_matrix(3, 4, rng, 0.0, 2.0);
  Matrix lg = random_matrix(3, 4, rng);
  const Matrix g = ce_gradient_wrt_logits(y, lg);
  // No clamping is active here, so the exact derivative of -sum y log softmax applies.
  const auto fd = central_differences({&lg}, [&] { return cross_entropy(y, softmax_columns(lg)).value; });
  CHECK(relative_error(flatten({g}), fd) < 1e-6);
}

TEST_CASE("classifier logits and backward") {
  Rng rng(6);
  Classifier cls = random_classifier(4, 3, rng);
  Matrix z = random_matrix(4, 5, rng);
  const Matrix logits = cls.logits(z);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t k = 0; k < 5; ++k) {
      double v = cls.bias(c, 0);
      for (std::size_t i = 0; i < 4; ++i) v += cls.weights(i, c) * z(i, k);
      CHECK(std::abs(logits(c, k) - v) <= 1e-12);
    }

  const Matrix y = random_stochastic(3, 5, rng);
  const auto loss = [&] { return cross_entropy(y, softmax_columns(cls.logits(z))).value; };
  const auto g = cls.backward(z, ce_gradient_wrt_logits(y, cls.logits(z)));
  const auto fd = central_differences({&cls.weights, &cls.bias, &z}, loss);
  CHECK(relative_error(flatten({g.weights, g.bias, g.embeddings}), fd) < 1e-6);

  CHECK_THROWS_AS(cls.logits(Matrix(3, 2)), ContractError);
  CHECK_THROWS_AS(cls.backward(z, Matrix(3, 4)), ContractError);
  CHECK_THROWS_AS(Classifier(Matrix(4, 3), Matrix(2, 1)), ContractError);
}

TEST_CASE("multimix loss") {
  Rng rng(7);
  const Classifier cls = random_classifier(4, 3, rng);
  const Matrix z = random_matrix(4, 6, rng);
  const Matrix y = one_hot(std::vector<std::size_t>{0, 1, 2, 0, 1, 2}, 3);

  const auto plain = multimix_loss(z, y, InterpolationMatrix::identity(6), cls);
  CHECK(plain.value == cross_entropy(y, softmax_columns(cls.logits(z))).value);
  CHECK(plain.terms == 6);

  const auto lam = build_interpolation_matrix(6, 40, 4, AlphaMode::uniform_range(0.5, 2.0), rng);
  const auto mixed = multimix_loss(z, y, lam, cls);
  CHECK(mixed.terms == 40);

  // Step-by-step oracle with the naive product.
  const Matrix zt = multimix::testing::naive_matmul(z, lam.lambda());
  const Matrix yt = multimix::testing::naive_matmul(y, lam.lambda());
  const auto cols = oracle_columns(yt, softmax_columns(cls.logits(zt)));
  double mean = 0.0;
  for (double v : cols) mean += v;
  mean /= cols.size();
  CHECK(std::abs(mixed.value - mean) <= 1e-12);
}

TEST_CASE("dense multimix loss") {
  Rng rng(8);
  const Classifier cls = random_classifier(3, 2, rng);
  std::vector<Matrix> positions;
  for (int j = 0; j < 3; ++j) positions.push_back(random_matrix(3, 5, rng));
  const DenseEmbedding z(positions);
  const Matrix y = one_hot(std::vector<std::size_t>{0, 1, 1, 0, 1}, 2);
  const auto out = dense_multimix(z, y, {}, 7, 3, AlphaMode::fixed(1.0), rng);
  const auto loss = dense_multimix_loss(out, cls);
  CHECK(loss.terms == 7 * 3);

  double total = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const auto cols = oracle_columns(out.mixed_targets[j],
                                     softmax_columns(cls.logits(out.mixed_embeddings[j])));
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      num += out.weights[j][k] * cols[k];
      den += out.weights[j][k];
    }
    total += num / den;
  }
  CHECK(std::abs(loss.value - total / 3.0) <= 1e-12);
}

TEST_CASE("dense loss at one position with uniform weights equals multimix loss") {
  Rng rng(9);
  const Classifier cls = random_classifier(4, 3, rng);
  const DenseEmbedding z(std::vector<Matrix>{random_matrix(4, 6, rng)});
  const Matrix y = one_hot(std::vector<std::size_t>{0, 1, 2, 2, 1, 0}, 3);
  const auto lambdas = draw_position_lambdas(6, 10, 6, AlphaMode::fixed(1.0), 1, rng);
  const AttentionConfig none{AttentionSource::None, Nonlinearity::ReluL1};
  const auto out = dense_multimix_with(z, y, batch_attention(z, y, none, nullptr), lambdas);
  const double dense = dense_multimix_loss(out, cls).value;
  const double plain = multimix_loss(z.pooled(), y, lambdas[0], cls).value;
  CHECK(std::abs(dense - plain) <= 1e-12 * plain);
}
