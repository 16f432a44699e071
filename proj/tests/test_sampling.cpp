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

#include <algorithm>
#include <cmath>
#include <map>

#include "multimix/errors.hpp"
#include "multimix/sampling.hpp"

using namespace multimix;

namespace {

double ks_uniform(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    d = std::max(d, (static_cast<double>(i) + 1.0) / n - xs[i]);
    d = std::max(d, xs[i] - static_cast<double>(i) / n);
  }
  return d;
}

std::size_t nonzeros(const Matrix& m, std::size_t col) {
  std::size_t count = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) count += m(r, col) != 0.0 ? 1 : 0;
  return count;
}

}  // namespace

TEST_CASE("alpha mode parsing") {
  CHECK(AlphaMode::parse("fixed:1.5") == AlphaMode::fixed(1.5));
  CHECK(AlphaMode::parse("uniform:0.5,2") == AlphaMode::uniform_range(0.5, 2.0));
  CHECK(AlphaMode::parse(AlphaMode::uniform_range(0.5, 2.0).to_string()) ==
        AlphaMode::uniform_range(0.5, 2.0));
  CHECK(AlphaMode::parse(AlphaMode::fixed(0.25).to_string()) == AlphaMode::fixed(0.25));
  CHECK_THROWS_AS(AlphaMode::parse("fixed:0"), ContractError);
  CHECK_THROWS_AS(AlphaMode::parse("fixed:-1"), ContractError);
  CHECK_THROWS_AS(AlphaMode::parse("uniform:2,1"), ContractError);
  CHECK_THROWS_AS(AlphaMode::parse("uniform:1"), ContractError);
  CHECK_THROWS_AS(AlphaMode::parse("beta:1"), ContractError);
  CHECK_THROWS_AS(AlphaMode::parse("fixed:abc"), ContractError);
  CHECK_THROWS_AS(AlphaMode::parse("1.0"), ContractError);
}

TEST_CASE("alpha mode resolve") {
  Rng rng(1);
  const auto fixed = AlphaMode::fixed(0.7);
  const auto before = rng.counter();
  CHECK(fixed.resolve(rng) == 0.7);
  CHECK(rng.counter() == before);
  const auto range = AlphaMode::uniform_range(0.5, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = range.resolve(rng);
    CHECK(a >= 0.5);
    CHECK(a <= 2.0);
  }
  CHECK(AlphaMode::uniform_range(1.0, 1.0).resolve(rng) == 1.0);
}

TEST_CASE("gamma sample means") {
  for (double shape : {1.0, 5.0, 0.3}) {
    Rng rng(100 + static_cast<std::uint64_t>(shape * 10));
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double g = sample_gamma(shape, rng);
      CHECK(g > 0.0);
      sum += g;
    }
    // Gamma(k, 1): mean k, variance k.
    CHECK(std::abs(sum / n - shape) <= 4.0 * std::sqrt(shape / n));
  }
}

TEST_CASE("gamma is deterministic and strictly positive for tiny shapes") {
  Rng a(5), b(5);
  for (int i = 0; i < 50; ++i) CHECK(sample_gamma(2.5, a) == sample_gamma(2.5, b));
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    CHECK(sample_gamma(1e-3, rng) > 0.0);
    CHECK(std::isfinite(sample_log_gamma(1e-3, rng)));
  }
  CHECK_THROWS_AS(sample_gamma(0.0, rng), ContractError);
  CHECK_THROWS_AS(sample_gamma(-1.0, rng), ContractError);
}

TEST_CASE("log gamma agrees with gamma on the same stream") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    const double g = sample_gamma(1.7, a);
    const double lg = sample_log_gamma(1.7, b);
    CHECK(std::abs(std::log(g) - lg) <= 1e-12 * std::max(1.0, std::abs(lg)));
  }
}

TEST_CASE("dirichlet of dimension one") {
  Rng rng(8);
  CHECK(sample_dirichlet(0.5, 1, rng) == std::vector<double>{1.0});
}

TEST_CASE("dirichlet simplex and moments") {
  Rng rng(9);
  const std::size_t m = 8;
  const double alpha = 1.0;
  const int n = 100000;
  std::vector<double> mean(m, 0.0);
  for (int i = 0; i < n; ++i) {
    const auto v = sample_dirichlet(alpha, m, rng);
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      CHECK(v[k] >= 0.0);
      total += v[k];
      mean[k] += v[k];
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
  const double md = static_cast<double>(m);
  const double sigma = std::sqrt((1.0 / md) * (1.0 - 1.0 / md) / (alpha * md + 1.0) / n);
  for (double s : mean) CHECK(std::abs(s / n - 1.0 / md) <= 4.0 * sigma);
}

TEST_CASE("dirichlet(1,1) marginal is uniform") {
  Rng rng(10);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(sample_dirichlet(1.0, 2, rng)[0]);
  CHECK(ks_uniform(xs) < 0.01);
}

TEST_CASE("dirichlet with tiny alpha stays on the simplex") {
  Rng rng(11);
  for (int i = 0; i < 2000; ++i) {
    const auto v = sample_dirichlet(1e-4, 16, rng);
    double total = 0.0;
    for (double x : v) {
      CHECK(x > 0.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("beta(1,1) is uniform and beta is symmetric") {
  Rng rng(12);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(sample_beta(1.0, rng));
  CHECK(ks_uniform(xs) < 0.01);
  for (double alpha : {0.2, 0.5, 2.0, 8.0}) {
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = sample_beta(alpha, rng);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    // Beta(a, a): variance 1 / (4 (2a + 1)).
    const double sigma = std::sqrt(1.0 / (4.0 * (2.0 * alpha + 1.0)) / n);
    CHECK(std::abs(sum / n - 0.5) <= 4.0 * sigma);
  }
  Rng a(13), b(13);
  CHECK(sample_beta(0.4, a) == sample_beta(0.4, b));
}

TEST_CASE("permutation examples") {
  Rng rng(14);
  CHECK(sample_permutation(1, rng) == std::vector<std::size_t>{0});
  PairwiseMixSpec spec{0.5, sample_permutation(5, rng)};
  CHECK_NOTHROW(spec.validate(5));
  CHECK_THROWS_AS(sample_permutation(0, rng), ContractError);
}

TEST_CASE("permutations of three are uniform") {
  Rng rng(15);
  const int n = 100000;
  std::map<std::vector<std::size_t>, int> counts;
  for (int i = 0; i < n; ++i) ++counts[sample_permutation(3, rng)];
  CHECK(counts.size() == 6);
  const double p = 1.0 / 6.0;
  for (const auto& [perm, c] : counts) CHECK(std::abs(c - n * p) <= 4.0 * std::sqrt(n * p * (1 - p)));
}

TEST_CASE("pairwise mix spec validation") {
  CHECK_THROWS_AS((PairwiseMixSpec{1.5, {0, 1}}.validate(2)), ContractError);
  CHECK_THROWS_AS((PairwiseMixSpec{-0.1, {0, 1}}.validate(2)), ContractError);
  CHECK_THROWS_AS((PairwiseMixSpec{0.5, {0, 0}}.validate(2)), ContractError);
  CHECK_THROWS_AS((PairwiseMixSpec{0.5, {0, 2}}.validate(2)), ContractError);
  CHECK_THROWS_AS((PairwiseMixSpec{0.5, {0}}.validate(2)), ContractError);
  Rng rng(16);
  const auto spec = sample_pairwise_spec(6, 1.0, rng);
  CHECK_NOTHROW(spec.validate(6));
}

TEST_CASE("interpolation matrix validation") {
  CHECK_NOTHROW(InterpolationMatrix(Matrix::from_rows({{0.5, 1}, {0.5, 0}}), 2));
  CHECK_THROWS_AS(InterpolationMatrix(Matrix::from_rows({{1.5}, {-0.5}}), 2), ContractError);
  CHECK_THROWS_AS(InterpolationMatrix(Matrix::from_rows({{0.5}, {0.4}}), 2), ContractError);
  CHECK_THROWS_AS(InterpolationMatrix(Matrix::from_rows({{0.4}, {0.3}, {0.3}}), 2), ContractError);
  CHECK_THROWS_AS(InterpolationMatrix(Matrix::from_rows({{1}, {0}}), 3), ContractError);
  CHECK_THROWS_AS(InterpolationMatrix(Matrix(), 1), ContractError);
  const auto id = InterpolationMatrix::identity(4);
  CHECK(id.lambda() == Matrix::identity(4));
  CHECK(id.batch() == 4);
  CHECK(id.generated() == 4);
}

TEST_CASE("build_interpolation_matrix shapes and support") {
  Rng rng(17);
  const auto full = build_interpolation_matrix(4, 3, 4, AlphaMode::fixed(1.0), rng);
  CHECK(full.batch() == 4);
  CHECK(full.generated() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(nonzeros(full.lambda(), k) == 4);
  for (double s : column_sums(full.lambda())) CHECK(std::abs(s - 1.0) <= 1e-9);

  const auto pair = build_interpolation_matrix(16, 200, 2, AlphaMode::uniform_range(0.5, 2.0), rng);
  for (std::size_t k = 0; k < 200; ++k) CHECK(nonzeros(pair.lambda(), k) == 2);

  const auto full_scale = build_interpolation_matrix(128, 1000, 128, AlphaMode::uniform_range(0.5, 2.0), rng);
  CHECK(full_scale.batch() == 128);
  CHECK(full_scale.generated() == 1000);
  for (double s : column_sums(full_scale.lambda())) CHECK(std::abs(s - 1.0) <= 1e-9);

  CHECK_THROWS_AS(build_interpolation_matrix(4, 3, 1, AlphaMode::fixed(1.0), rng), ContractError);
  CHECK_THROWS_AS(build_interpolation_matrix(4, 3, 5, AlphaMode::fixed(1.0), rng), ContractError);
  CHECK_THROWS_AS(build_interpolation_matrix(4, 0, 2, AlphaMode::fixed(1.0), rng), ContractError);
}

TEST_CASE("sparse support is spread uniformly over the batch") {
  Rng rng(18);
  const std::size_t b = 8, m = 3, n = 20000;
  const auto lam = build_interpolation_matrix(b, n, m, AlphaMode::fixed(1.0), rng);
  std::vector<double> hits(b, 0.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < b; ++i) hits[i] += lam.lambda()(i, k) != 0.0 ? 1.0 : 0.0;
  const double p = static_cast<double>(m) / b;
  for (double h : hits) CHECK(std::abs(h - n * p) <= 4.0 * std::sqrt(n * p * (1 - p)));
}

TEST_CASE("columns are addressed by index") {
  const auto mode = AlphaMode::uniform_range(0.5, 2.0);
  Rng a(19), b(19);
  const auto small = build_interpolation_matrix(6, 5, 3, mode, a);
  const auto large = build_interpolation_matrix(6, 10, 3, mode, b);
  for (std::size_t k = 0; k < 5; ++k) CHECK(small.lambda().column(k) == large.lambda().column(k));
}

TEST_CASE("near-degenerate alpha keeps every invariant") {
  Rng rng(20);
  const auto lam = build_interpolation_matrix(16, 16, 16, AlphaMode::fixed(1e-6), rng);
  for (double s : column_sums(lam.lambda())) CHECK(std::abs(s - 1.0) <= 1e-9);
  for (double v : lam.lambda().data()) CHECK(v >= 0.0);
  for (std::size_t k = 0; k < 16; ++k) CHECK(nonzeros(lam.lambda(), k) == 16);
  // At this concentration each column sits on a vertex.
  for (std::size_t k = 0; k < 16; ++k) {
    double top = 0.0;
    for (std::size_t i = 0; i < 16; ++i) top = std::max(top, lam.lambda()(i, k));
    CHECK(top > 0.99);
  }
}
