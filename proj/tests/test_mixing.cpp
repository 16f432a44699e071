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

#include "multimix/data.hpp"
#include "multimix/errors.hpp"
#include "multimix/mixing.hpp"
#include "support.hpp"

using namespace multimix;
using multimix::testing::central_differences;
using multimix::testing::max_abs_diff;
using multimix::testing::random_matrix;
using multimix::testing::random_stochastic;
using multimix::testing::relative_error;

TEST_CASE("input mixup examples") {
  Rng rng(1);
  const Matrix x = random_matrix(3, 4, rng);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  CHECK(input_mixup(x, {1.0, perm}) == x);

  const Matrix swapped = input_mixup(x, {0.0, perm});
  for (std::size_t i = 0; i < 4; ++i) CHECK(swapped.column(i) == x.column(perm[i]));

  const Matrix eye = Matrix::from_rows({{1, 0}, {0, 1}});
  const Matrix half = input_mixup(eye, {0.5, {1, 0}});
  CHECK(half == Matrix::from_rows({{0.5, 0.5}, {0.5, 0.5}}));

  CHECK_THROWS_AS(input_mixup(x, {0.5, {0, 1}}), ContractError);
}

TEST_CASE("input mixup column formula") {
  Rng rng(2);
  const Matrix x = random_matrix(5, 6, rng);
  const PairwiseMixSpec spec{0.3, sample_permutation(6, rng)};
  const Matrix out = input_mixup(x, spec);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t r = 0; r < 5; ++r)
      CHECK(std::abs(out(r, i) - (0.3 * x(r, i) + 0.7 * x(r, spec.permutation[i]))) <= 1e-15);
}

TEST_CASE("pairwise operator handles fixed points") {
  const Matrix op = pairwise_operator({0.25, {0, 2, 1}});
  CHECK(op(0, 0) == 1.0);
  CHECK(op(1, 1) == 0.25);
  CHECK(op(2, 1) == 0.75);
  for (double s : column_sums(op)) CHECK(s == 1.0);
}

TEST_CASE("manifold mixup examples") {
  Rng rng(3);
  const Matrix z = random_matrix(4, 3, rng);
  const Matrix y = one_hot(std::vector<std::size_t>{0, 1, 2}, 3);
  const auto same = manifold_mixup(z, y, {1.0, {1, 2, 0}});
  CHECK(same.mixed_embeddings == z);
  CHECK(same.mixed_targets == y);

  const auto mixed = manifold_mixup(z, y, {0.7, {1, 2, 0}});
  CHECK(std::abs(mixed.mixed_targets(0, 0) - 0.7) <= 1e-15);
  CHECK(std::abs(mixed.mixed_targets(1, 0) - 0.3) <= 1e-15);
  CHECK(mixed.mixed_targets(2, 0) == 0.0);
  for (double s : column_sums(mixed.mixed_targets)) CHECK(std::abs(s - 1.0) <= 1e-12);
  CHECK_THROWS_AS(manifold_mixup(z, Matrix(3, 2), {0.5, {0, 1, 2}}), ContractError);
}

TEST_CASE("multimix examples") {
  Rng rng(4);
  const Matrix z = random_matrix(5, 4, rng);
  const Matrix y = random_stochastic(3, 4, rng);
  const auto id = multimix::multimix(z, y, InterpolationMatrix::identity(4));
  CHECK(id.mixed_embeddings == z);
  CHECK(id.mixed_targets == y);

  Matrix vertex(4, 1);
  vertex(2, 0) = 1.0;
  const auto corner = multimix::multimix(z, y, InterpolationMatrix(vertex, 4));
  CHECK(corner.mixed_embeddings.column(0) == z.column(2));
  CHECK(corner.mixed_targets.column(0) == y.column(2));

  const Matrix eye = Matrix::identity(2);
  const auto hand = multimix::multimix(eye, eye, InterpolationMatrix(Matrix::from_rows({{0.25}, {0.75}}), 2));
  CHECK(hand.mixed_embeddings == Matrix::from_rows({{0.25}, {0.75}}));
  CHECK(hand.mixed_targets == Matrix::from_rows({{0.25}, {0.75}}));

  CHECK_THROWS_AS(multimix::multimix(random_matrix(5, 3, rng), Matrix(3, 3), InterpolationMatrix::identity(4)),
                  ContractError);
}

TEST_CASE("multimix generates more columns than the batch") {
  Rng rng(5);
  const auto lam = build_interpolation_matrix(4, 50, 4, AlphaMode::fixed(1.0), rng);
  const auto out = multimix::multimix(random_matrix(3, 4, rng), random_stochastic(2, 4, rng), lam);
  CHECK(out.mixed_embeddings.cols() == 50);
  CHECK(out.mixed_targets.cols() == 50);
}

TEST_CASE("target and class mass are conserved") {
  Rng rng(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t b = 2 + rng.below(10);
    const std::size_t n = 1 + rng.below(20);
    const std::size_t m = 2 + rng.below(b - 1);
    const auto lam = build_interpolation_matrix(b, n, m, AlphaMode::uniform_range(0.5, 2.0), rng);
    const Matrix y = random_stochastic(4, b, rng);
    const auto out = multimix::multimix(Matrix(1, b), y, lam);
    for (double s : column_sums(out.mixed_targets)) CHECK(std::abs(s - 1.0) <= 1e-9);
    const auto lhs = row_sums(out.mixed_targets);
    const auto rhs = matmul(y, Matrix::column_vector(row_sums(lam.lambda())));
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(lhs[c] - rhs(c, 0)) <= 1e-9);
  }
}

TEST_CASE("structured two-sparse matrix reproduces manifold mixup bit for bit") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t b = 3 + rng.below(8);
    const PairwiseMixSpec spec{sample_beta(1.0, rng), sample_permutation(b, rng)};
    Matrix lam(b, b);
    for (std::size_t k = 0; k < b; ++k) {
      lam(k, k) += spec.lambda;
      lam(spec.permutation[k], k) += 1.0 - spec.lambda;
    }
    const Matrix z = random_matrix(4, b, rng);
    const Matrix y = random_stochastic(3, b, rng);
    const auto a = multimix::multimix(z, y, InterpolationMatrix(lam, 2));
    const auto m = manifold_mixup(z, y, spec);
    CHECK(a.mixed_embeddings == m.mixed_embeddings);
    CHECK(a.mixed_targets == m.mixed_targets);
  }
}

TEST_CASE("multimix backward") {
  Rng rng(8);
  const Matrix g = random_matrix(3, 4, rng);
  CHECK(multimix_backward(g, InterpolationMatrix::identity(4)) == g);

  const auto lam = build_interpolation_matrix(4, 7, 3, AlphaMode::fixed(1.0), rng);
  const Matrix grad = multimix_backward(Matrix(3, 7, 1.0), lam);
  const auto rs = row_sums(lam.lambda());
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(grad(r, i) - rs[i]) <= 1e-15);

  CHECK_THROWS_AS(multimix_backward(Matrix(3, 6), lam), ContractError);
}

TEST_CASE("multimix backward matches central differences") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto lam = build_interpolation_matrix(5, 6, 4, AlphaMode::uniform_range(0.5, 2.0), rng);
    Matrix z = random_matrix(3, 5, rng);
    const Matrix w = random_matrix(3, 6, rng);
    // Scalar test loss: sum of w .* (Z Lambda)^2.
    const auto loss = [&] {
      const Matrix mixed = matmul(z, lam.lambda());
      double total = 0.0;
      for (std::size_t i = 0; i < mixed.size(); ++i)
        total += w.data()[i] * mixed.data()[i] * mixed.data()[i];
      return total;
    };
    const Matrix mixed = matmul(z, lam.lambda());
    Matrix upstream(3, 6);
    for (std::size_t i = 0; i < mixed.size(); ++i)
      upstream.data()[i] = 2.0 * w.data()[i] * mixed.data()[i];
    const Matrix analytic = multimix_backward(upstream, lam);
    const auto fd = central_differences({&z}, loss);
    CHECK(relative_error(multimix::testing::flatten({analytic}), fd) < 1e-6);
  }
}
