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

#include "multimix/dense_mixing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multimix/errors.hpp"
#include "multimix/mixing.hpp"

namespace multimix {

DenseEmbedding::DenseEmbedding(std::size_t channels, std::size_t positions, std::size_t batch)
    : channels_(channels), batch_(batch), by_position_(positions, Matrix(channels, batch)) {
  require(positions >= 1, "DenseEmbedding: need at least one position");
}

DenseEmbedding::DenseEmbedding(std::vector<Matrix> by_position)
    : by_position_(std::move(by_position)) {
  require(!by_position_.empty(), "DenseEmbedding: need at least one position");
  channels_ = by_position_.front().rows();
  batch_ = by_position_.front().cols();
  for (const auto& m : by_position_) {
    require(m.rows() == channels_ && m.cols() == batch_,
            "DenseEmbedding: position matrices differ in shape");
  }
}

DenseEmbedding DenseEmbedding::from_blocks(std::span<const Matrix> blocks) {
  require(!blocks.empty(), "DenseEmbedding::from_blocks: empty batch");
  const std::size_t d = blocks.front().rows();
  const std::size_t r = blocks.front().cols();
  DenseEmbedding out(d, r, blocks.size());
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    require(blocks[i].rows() == d && blocks[i].cols() == r,
            "DenseEmbedding::from_blocks: blocks differ in shape");
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t ch = 0; ch < d; ++ch) out.by_position_[j](ch, i) = blocks[i](ch, j);
  }
  return out;
}

Matrix DenseEmbedding::block(std::size_t i) const {
  require(i < batch_, "DenseEmbedding::block: index out of range");
  Matrix out(channels_, positions());
  for (std::size_t j = 0; j < positions(); ++j)
    for (std::size_t ch = 0; ch < channels_; ++ch) out(ch, j) = by_position_[j](ch, i);
  return out;
}

Matrix DenseEmbedding::pooled() const {
  if (positions() == 1) return by_position_.front();
  Matrix out(channels_, batch_);
  for (const auto& m : by_position_) axpy(out, 1.0, m);
  const double inv = 1.0 / static_cast<double>(positions());
  for (double& v : out.data()) v *= inv;
  return out;
}

AttentionSource parse_attention_source(std::string_view text) {
  if (text == "gap") return AttentionSource::Gap;
  if (text == "cam") return AttentionSource::Cam;
  if (text == "uniform" || text == "none") return AttentionSource::None;
  throw ContractError("unknown attention source '" + std::string(text) + "'");
}

Nonlinearity parse_nonlinearity(std::string_view text) {
  if (text == "softmax") return Nonlinearity::Softmax;
  if (text == "relul1") return Nonlinearity::ReluL1;
  throw ContractError("unknown attention nonlinearity '" + std::string(text) + "'");
}

std::string_view to_string(AttentionSource source) {
  switch (source) {
    case AttentionSource::Gap: return "gap";
    case AttentionSource::Cam: return "cam";
    case AttentionSource::None: return "uniform";
  }
  return "?";
}

std::string_view to_string(Nonlinearity nonlinearity) {
  return nonlinearity == Nonlinearity::Softmax ? "softmax" : "relul1";
}

std::vector<double> attention_map(const Matrix& z, std::span<const double> u,
                                  const AttentionConfig& cfg) {
  const std::size_t r = z.cols();
  require(r >= 1, "attention_map: need at least one position");
  const std::vector<double> uniform(r, 1.0 / static_cast<double>(r));
  if (cfg.source == AttentionSource::None) return uniform;
  require(u.size() == z.rows(), "attention_map: reference vector length != channels");

  std::vector<double> scores(r, 0.0);
  for (std::size_t ch = 0; ch < z.rows(); ++ch) {
    const auto row = z.row(ch);
    for (std::size_t j = 0; j < r; ++j) scores[j] += row[j] * u[ch];
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw NumericError("attention_map: non-finite score");
  }

  if (cfg.nonlinearity == Nonlinearity::Softmax) {
    const double max_score = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) {
      s = std::exp(s - max_score);
      total += s;
    }
    for (double& s : scores) s /= total;
    return scores;
  }

  double total = 0.0;
  for (double& s : scores) {
    s = std::max(s, 0.0);
    total += s;
  }
  if (!(total > 0.0)) return uniform;
  for (double& s : scores) s /= total;
  return scores;
}

std::vector<double> gap_vector(const Matrix& z) {
  require(z.cols() >= 1, "gap_vector: need at least one position");
  std::vector<double> u = row_sums(z);
  const double inv = 1.0 / static_cast<double>(z.cols());
  for (double& v : u) v *= inv;
  return u;
}

std::vector<double> cam_vector(const Matrix& classifier_weights, std::span<const double> y) {
  require(y.size() == classifier_weights.cols(), "cam_vector: target length != class count");
  std::size_t hot = y.size();
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (y[k] == 1.0) {
      require(hot == y.size(), "cam_vector: target is not one-hot");
      hot = k;
    } else {
      require(y[k] == 0.0, "cam_vector: target is not one-hot");
    }
  }
  require(hot < y.size(), "cam_vector: target is not one-hot");
  return classifier_weights.column(hot);
}

DenseWeights dense_interpolation_weights(std::span<const double> attention, const Matrix& lam) {
  require(attention.size() == lam.rows(), "dense_interpolation_weights: attention length != rows");
  for (double a : attention) {
    require(std::isfinite(a) && a >= 0.0, "dense_interpolation_weights: negative attention");
  }
  const std::size_t rows = lam.rows();
  const std::size_t n = lam.cols();
  DenseWeights out{Matrix(rows, n), std::vector<double>(n, 0.0)};

  // Constant attention cancels in the renormalization; keep Lambda as is so
  // the reduction to the unscaled case holds exactly.
  const bool constant =
      std::all_of(attention.begin(), attention.end(), [&](double a) { return a == attention[0]; });
  if (constant && attention[0] > 0.0) {
    out.normalized = lam;
    const auto sums = column_sums(lam);
    for (std::size_t k = 0; k < n; ++k) out.weights[k] = attention[0] * sums[k];
    return out;
  }

  for (std::size_t i = 0; i < rows; ++i) {
    const auto src = lam.row(i);
    auto dst = out.normalized.row(i);
    for (std::size_t k = 0; k < n; ++k) {
      dst[k] = attention[i] * src[k];
      out.weights[k] += dst[k];
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (out.weights[k] > 0.0) {
      for (std::size_t i = 0; i < rows; ++i) out.normalized(i, k) /= out.weights[k];
    } else {
      for (std::size_t i = 0; i < rows; ++i) out.normalized(i, k) = lam(i, k);
      out.weights[k] = kDenseWeightFloor;
    }
  }
  return out;
}

Matrix batch_attention(const DenseEmbedding& z, const Matrix& y, const AttentionConfig& cfg,
                       const Matrix* classifier_weights) {
  require(y.cols() == z.batch(), "batch_attention: targets and embeddings differ in batch size");
  if (cfg.source == AttentionSource::Cam) {
    require(classifier_weights != nullptr, "batch_attention: CAM attention needs classifier weights");
    require(classifier_weights->rows() == z.channels(),
            "batch_attention: classifier weights rows != channels");
  }
  Matrix out(z.batch(), z.positions());
  for (std::size_t i = 0; i < z.batch(); ++i) {
    const Matrix block = z.block(i);
    std::vector<double> u;
    switch (cfg.source) {
      case AttentionSource::Gap: u = gap_vector(block); break;
      case AttentionSource::Cam: u = cam_vector(*classifier_weights, y.column(i)); break;
      case AttentionSource::None: break;
    }
    const auto a = attention_map(block, u, cfg);
    for (std::size_t j = 0; j < a.size(); ++j) out(i, j) = a[j];
  }
  return out;
}

std::vector<InterpolationMatrix> draw_position_lambdas(std::size_t b, std::size_t n,
                                                       std::size_t m, const AlphaMode& mode,
                                                       std::size_t positions, Rng& rng) {
  const Rng base = rng.split();
  std::vector<InterpolationMatrix> out;
  out.reserve(positions);
  for (std::size_t j = 0; j < positions; ++j) {
    Rng position_rng = base.fork(j);
    out.push_back(build_interpolation_matrix(b, n, m, mode, position_rng));
  }
  return out;
}

DenseMixOutcome dense_multimix_with(const DenseEmbedding& z, const Matrix& y,
                                    const Matrix& attention,
                                    std::span<const InterpolationMatrix> lambdas) {
  const std::size_t b = z.batch();
  const std::size_t r = z.positions();
  require(y.cols() == b, "dense_multimix: targets and embeddings differ in batch size");
  require(attention.rows() == b && attention.cols() == r, "dense_multimix: attention must be b x r");
  require(lambdas.size() == r, "dense_multimix: need one interpolation matrix per position");

  DenseMixOutcome out;
  out.attention = attention;
  std::vector<double> attention_at(b);
  for (std::size_t j = 0; j < r; ++j) {
    require(lambdas[j].batch() == b, "dense_multimix: interpolation matrix rows != batch size");
    require(j == 0 || lambdas[j].generated() == lambdas[0].generated(),
            "dense_multimix: positions differ in generated count");
    for (std::size_t i = 0; i < b; ++i) attention_at[i] = attention(i, j);
    auto weights = dense_interpolation_weights(attention_at, lambdas[j].lambda());
    out.mixed_embeddings.push_back(matmul(z.position(j), weights.normalized));
    out.mixed_targets.push_back(matmul(y, weights.normalized));
    out.weights.push_back(std::move(weights.weights));
    out.coefficients.push_back(std::move(weights.normalized));
  }
  return out;
}

DenseMixOutcome dense_multimix(const DenseEmbedding& z, const Matrix& y,
                               const AttentionConfig& cfg, std::size_t n, std::size_t m,
                               const AlphaMode& mode, Rng& rng,
                               const Matrix* classifier_weights) {
  require(m <= z.batch(), "dense_multimix: need m <= b");
  const Matrix attention = batch_attention(z, y, cfg, classifier_weights);
  const auto lambdas = draw_position_lambdas(z.batch(), n, m, mode, z.positions(), rng);
  return dense_multimix_with(z, y, attention, lambdas);
}

DenseMixOutcome dense_pairwise_mix(const DenseEmbedding& z, const Matrix& y,
                                   const PairwiseMixSpec& spec) {
  const std::size_t b = z.batch();
  require(y.cols() == b, "dense_pairwise_mix: targets and embeddings differ in batch size");
  require(spec.permutation.size() == b, "dense_pairwise_mix: permutation length != batch size");
  const Matrix op = pairwise_operator(spec);
  const Matrix mixed_targets = matmul(y, op);

  DenseMixOutcome out;
  out.attention = Matrix(b, z.positions(), 1.0 / static_cast<double>(z.positions()));
  for (std::size_t j = 0; j < z.positions(); ++j) {
    out.mixed_embeddings.push_back(matmul(z.position(j), op));
    out.mixed_targets.push_back(mixed_targets);
    out.weights.emplace_back(b, 1.0);
    out.coefficients.push_back(op);
  }
  return out;
}

}  // namespace multimix
