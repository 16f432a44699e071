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

#include "multimix/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "multimix/errors.hpp"

namespace multimix {
namespace {

constexpr double kTinyPositive = std::numeric_limits<double>::denorm_min();

double parse_positive(std::string_view text, std::string_view full) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ContractError("alpha mode: cannot parse number in '" + std::string(full) + "'");
  }
  return value;
}

}  // namespace

AlphaMode AlphaMode::fixed(double alpha) {
  require(std::isfinite(alpha) && alpha > 0.0, "AlphaMode::fixed: alpha must be positive");
  return AlphaMode(Kind::Fixed, alpha, alpha);
}

AlphaMode AlphaMode::uniform_range(double lo, double hi) {
  require(std::isfinite(lo) && std::isfinite(hi) && lo > 0.0 && lo <= hi,
          "AlphaMode::uniform_range: need 0 < lo <= hi");
  return AlphaMode(Kind::UniformRange, lo, hi);
}

AlphaMode AlphaMode::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw ContractError("alpha mode must be 'fixed:A' or 'uniform:LO,HI', got '" +
                        std::string(text) + "'");
  }
  const auto kind = text.substr(0, colon);
  const auto rest = text.substr(colon + 1);
  if (kind == "fixed") return fixed(parse_positive(rest, text));
  if (kind == "uniform") {
    const auto comma = rest.find(',');
    if (comma == std::string_view::npos) {
      throw ContractError("alpha mode 'uniform' needs LO,HI, got '" + std::string(text) + "'");
    }
    return uniform_range(parse_positive(rest.substr(0, comma), text),
                         parse_positive(rest.substr(comma + 1), text));
  }
  throw ContractError("unknown alpha mode '" + std::string(kind) + "'");
}

double AlphaMode::resolve(Rng& rng) const noexcept {
  if (kind_ == Kind::Fixed) return lo_;
  return rng.uniform(lo_, hi_);
}

std::string AlphaMode::to_string() const {
  std::ostringstream os;
  os.precision(17);
  if (kind_ == Kind::Fixed) {
    os << "fixed:" << lo_;
  } else {
    os << "uniform:" << lo_ << ',' << hi_;
  }
  return os.str();
}

InterpolationMatrix::InterpolationMatrix(Matrix lambda, std::size_t support_size)
    : lambda_(std::move(lambda)), support_size_(support_size) {
  const std::size_t b = lambda_.rows();
  require(b >= 1 && lambda_.cols() >= 1, "InterpolationMatrix: empty matrix");
  require(support_size_ >= 1 && support_size_ <= b,
          "InterpolationMatrix: support size must be in [1, b]");
  for (std::size_t k = 0; k < lambda_.cols(); ++k) {
    double total = 0.0;
    std::size_t nonzeros = 0;
    for (std::size_t i = 0; i < b; ++i) {
      const double v = lambda_(i, k);
      require(std::isfinite(v) && v >= 0.0, "InterpolationMatrix: entries must be nonnegative");
      total += v;
      nonzeros += v > 0.0 ? 1 : 0;
    }
    require(std::abs(total - 1.0) <= 1e-9,
            "InterpolationMatrix: column " + std::to_string(k) + " does not sum to 1");
    require(nonzeros <= support_size_,
            "InterpolationMatrix: column " + std::to_string(k) + " exceeds support size");
  }
}

InterpolationMatrix InterpolationMatrix::identity(std::size_t b) {
  return InterpolationMatrix(Matrix::identity(b), b);
}

void PairwiseMixSpec::validate(std::size_t b) const {
  require(lambda >= 0.0 && lambda <= 1.0, "PairwiseMixSpec: lambda must be in [0, 1]");
  require(permutation.size() == b, "PairwiseMixSpec: permutation length must equal batch size");
  std::vector<bool> seen(b, false);
  for (std::size_t p : permutation) {
    require(p < b && !seen[p], "PairwiseMixSpec: permutation is not a bijection");
    seen[p] = true;
  }
}

double sample_log_gamma(double shape, Rng& rng) {
  require(std::isfinite(shape) && shape > 0.0, "sample_gamma: shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a).
    return sample_log_gamma(shape + 1.0, rng) + std::log(rng.uniform_open()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2 ||
        std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return std::log(d) + std::log(v);
    }
  }
}

double sample_gamma(double shape, Rng& rng) {
  return std::max(std::exp(sample_log_gamma(shape, rng)), kTinyPositive);
}

std::vector<double> sample_dirichlet(double alpha, std::size_t m, Rng& rng) {
  require(std::isfinite(alpha) && alpha > 0.0, "sample_dirichlet: alpha must be positive");
  require(m >= 1, "sample_dirichlet: dimension must be at least 1");
  if (m == 1) return {1.0};
  std::vector<double> out(m);
  for (double& v : out) v = sample_log_gamma(alpha, rng);
  // Subtracting the max keeps the largest coordinate at exp(0) = 1, so the
  // normalizer is never zero even when every raw Gamma draw would underflow.
  const double max_log = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (double& v : out) {
    v = std::exp(v - max_log);
    total += v;
  }
  for (double& v : out) v = std::max(v / total, kTinyPositive);
  return out;
}

double sample_beta(double alpha, Rng& rng) {
  require(std::isfinite(alpha) && alpha > 0.0, "sample_beta: alpha must be positive");
  const double log_a = sample_log_gamma(alpha, rng);
  const double log_b = sample_log_gamma(alpha, rng);
  return 1.0 / (1.0 + std::exp(log_b - log_a));
}

std::vector<std::size_t> sample_permutation(std::size_t b, Rng& rng) {
  require(b >= 1, "sample_permutation: batch size must be at least 1");
  std::vector<std::size_t> perm(b);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (std::size_t i = b - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(perm[i], perm[j]);
  }
  return perm;
}

PairwiseMixSpec sample_pairwise_spec(std::size_t b, double alpha, Rng& rng) {
  PairwiseMixSpec spec;
  spec.lambda = sample_beta(alpha, rng);
  spec.permutation = sample_permutation(b, rng);
  return spec;
}

InterpolationMatrix build_interpolation_matrix(std::size_t b, std::size_t n, std::size_t m,
                                               const AlphaMode& mode, Rng& rng) {
  require(m >= 2 && m <= b, "build_interpolation_matrix: need 2 <= m <= b");
  require(n >= 1, "build_interpolation_matrix: need n >= 1");
  const Rng base = rng.split();
  Matrix lambda(b, n);
  std::vector<std::size_t> pool(b);
  for (std::size_t k = 0; k < n; ++k) {
    Rng column_rng = base.fork(k);
    const double alpha = mode.resolve(column_rng);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    if (m < b) {
      // Partial Fisher-Yates: the first m slots become a uniform m-subset.
      for (std::size_t t = 0; t < m; ++t) {
        const auto j = t + static_cast<std::size_t>(column_rng.below(b - t));
        std::swap(pool[t], pool[j]);
      }
    }
    const auto weights = sample_dirichlet(alpha, m, column_rng);
    for (std::size_t t = 0; t < m; ++t) lambda(pool[t], k) = weights[t];
  }
  return InterpolationMatrix(std::move(lambda), m);
}

}  // namespace multimix
