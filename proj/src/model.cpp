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

#include "multimix/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "multimix/errors.hpp"
#include "multimix/io.hpp"

namespace multimix {
namespace {

constexpr std::string_view kCheckpointMagic = "multimix-checkpoint 1";

Matrix he_normal(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  const double stddev = std::sqrt(2.0 / static_cast<double>(cols));
  for (double& v : m.data()) v = stddev * rng.normal();
  return m;
}

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double b = bias(r, 0);
    for (double& v : m.row(r)) v += b;
  }
}

Matrix relu(const Matrix& m) {
  Matrix out = m;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

Matrix relu_backward(const Matrix& grad, const Matrix& pre_activation) {
  Matrix out = grad;
  const auto pre = pre_activation.data();
  auto g = out.data();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  return out;
}

// Rows [first, first + count) of m.
Matrix row_slice(const Matrix& m, std::size_t first, std::size_t count) {
  Matrix out(count, m.cols());
  for (std::size_t r = 0; r < count; ++r) {
    const auto src = m.row(first + r);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace

EncoderKind parse_encoder_kind(std::string_view text) {
  if (text == "pooled") return EncoderKind::Pooled;
  if (text == "dense") return EncoderKind::Dense;
  throw ContractError("unknown encoder kind '" + std::string(text) + "'");
}

std::string_view to_string(EncoderKind kind) {
  return kind == EncoderKind::Pooled ? "pooled" : "dense";
}

Encoder::Encoder(EncoderKind kind, std::size_t input_dim, std::size_t hidden,
                 std::size_t embedding_dim, std::size_t positions)
    : kind_(kind),
      input_dim_(input_dim),
      hidden_(hidden),
      embedding_dim_(embedding_dim),
      positions_(positions) {
  require(input_dim >= 1 && embedding_dim >= 1, "Encoder: dimensions must be positive");
  if (kind == EncoderKind::Pooled) {
    require(positions == 1, "Encoder: pooled encoder has a single position");
    require(hidden >= 1, "Encoder: hidden width must be positive");
    params_ = {{"encoder.w1", Matrix(hidden, input_dim)},
               {"encoder.b1", Matrix(hidden, 1)},
               {"encoder.w2", Matrix(embedding_dim, hidden)},
               {"encoder.b2", Matrix(embedding_dim, 1)}};
  } else {
    require(positions >= 1 && input_dim % positions == 0,
            "Encoder: dense encoder needs positions dividing the input dimension");
    const std::size_t chunk = input_dim / positions;
    params_ = {{"encoder.w", Matrix(embedding_dim, chunk)},
               {"encoder.b", Matrix(embedding_dim, 1)},
               {"encoder.pos", Matrix(embedding_dim, positions)}};
  }
}

Encoder Encoder::zeros(EncoderKind kind, std::size_t input_dim, std::size_t hidden,
                       std::size_t embedding_dim, std::size_t positions) {
  return Encoder(kind, input_dim, kind == EncoderKind::Pooled ? hidden : 0, embedding_dim,
                 positions);
}

Encoder Encoder::pooled(std::size_t input_dim, std::size_t hidden, std::size_t embedding_dim,
                        Rng& rng) {
  Encoder enc(EncoderKind::Pooled, input_dim, hidden, embedding_dim, 1);
  enc.params_[0].value = he_normal(hidden, input_dim, rng);
  enc.params_[2].value = he_normal(embedding_dim, hidden, rng);
  return enc;
}

Encoder Encoder::dense(std::size_t input_dim, std::size_t positions, std::size_t embedding_dim,
                       Rng& rng) {
  Encoder enc(EncoderKind::Dense, input_dim, 0, embedding_dim, positions);
  enc.params_[0].value = he_normal(embedding_dim, input_dim / positions, rng);
  return enc;
}

std::vector<NamedMatrix>& Encoder::mutable_parameters() noexcept {
  ++generation_;
  return params_;
}

DenseEmbedding Encoder::forward(const Matrix& x, Cache* cache) const {
  require(x.rows() == input_dim_, "Encoder::forward: input rows != input dimension");
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  if (kind_ == EncoderKind::Pooled) {
    Matrix h = matmul(params_[0].value, x);
    add_bias(h, params_[1].value);
    Matrix h_act = relu(h);
    Matrix z = matmul(params_[2].value, h_act);
    add_bias(z, params_[3].value);
    Matrix z_act = relu(z);
    pre = {std::move(h), std::move(z)};
    post = {std::move(h_act), std::move(z_act)};
  } else {
    const std::size_t chunk = input_dim_ / positions_;
    const Matrix& pos = params_[2].value;
    for (std::size_t j = 0; j < positions_; ++j) {
      Matrix z = matmul(params_[0].value, row_slice(x, j * chunk, chunk));
      for (std::size_t ch = 0; ch < embedding_dim_; ++ch) {
        const double offset = params_[1].value(ch, 0) + pos(ch, j);
        for (double& v : z.row(ch)) v += offset;
      }
      post.push_back(relu(z));
      pre.push_back(std::move(z));
    }
  }
  std::vector<Matrix> embedding =
      kind_ == EncoderKind::Pooled ? std::vector<Matrix>{post.back()} : post;
  if (cache != nullptr) {
    cache->owner = this;
    cache->generation = generation_;
    cache->input = x;
    cache->pre_activations = std::move(pre);
    cache->activations = std::move(post);
  }
  return DenseEmbedding(std::move(embedding));
}

Encoder::Gradients Encoder::backward(const Cache& cache, const DenseEmbedding& grad) const {
  require(cache.owner == this && cache.generation == generation_,
          "Encoder::backward: stale or foreign forward cache");
  require(grad.positions() == positions_ && grad.channels() == embedding_dim_ &&
              grad.batch() == cache.input.cols(),
          "Encoder::backward: gradient shape mismatch");
  Gradients out;
  const Matrix& x = cache.input;
  if (kind_ == EncoderKind::Pooled) {
    const Matrix g_z = relu_backward(grad.position(0), cache.pre_activations[1]);
    Matrix g_w2 = matmul_transposed(g_z, cache.activations[0]);
    Matrix g_b2 = Matrix::column_vector(row_sums(g_z));
    const Matrix g_h = relu_backward(transposed_matmul(params_[2].value, g_z),
                                     cache.pre_activations[0]);
    Matrix g_w1 = matmul_transposed(g_h, x);
    Matrix g_b1 = Matrix::column_vector(row_sums(g_h));
    out.input = transposed_matmul(params_[0].value, g_h);
    out.parameters = {std::move(g_w1), std::move(g_b1), std::move(g_w2), std::move(g_b2)};
    return out;
  }

  const std::size_t chunk = input_dim_ / positions_;
  Matrix g_w(embedding_dim_, chunk);
  Matrix g_b(embedding_dim_, 1);
  Matrix g_pos(embedding_dim_, positions_);
  out.input = Matrix(input_dim_, x.cols());
  for (std::size_t j = 0; j < positions_; ++j) {
    const Matrix g_pre = relu_backward(grad.position(j), cache.pre_activations[j]);
    axpy(g_w, 1.0, matmul_transposed(g_pre, row_slice(x, j * chunk, chunk)));
    const auto sums = row_sums(g_pre);
    for (std::size_t ch = 0; ch < embedding_dim_; ++ch) {
      g_b(ch, 0) += sums[ch];
      g_pos(ch, j) = sums[ch];
    }
    const Matrix g_x = transposed_matmul(params_[0].value, g_pre);
    for (std::size_t r = 0; r < chunk; ++r) {
      const auto src = g_x.row(r);
      std::copy(src.begin(), src.end(), out.input.row(j * chunk + r).begin());
    }
  }
  out.parameters = {std::move(g_w), std::move(g_b), std::move(g_pos)};
  return out;
}

Model Model::create(const ModelConfig& config, Rng& rng) {
  require(config.classes >= 2, "Model: need at least two classes");
  Encoder encoder =
      config.kind == EncoderKind::Pooled
          ? Encoder::pooled(config.input_dim, config.hidden, config.embedding_dim, rng)
          : Encoder::dense(config.input_dim, config.positions, config.embedding_dim, rng);
  Classifier classifier(config.embedding_dim, config.classes);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(config.embedding_dim));
  for (double& v : classifier.weights.data()) v = stddev * rng.normal();
  return Model{std::move(encoder), std::move(classifier)};
}

ModelConfig Model::config() const {
  return {encoder.kind(), encoder.input_dim(), encoder.hidden(), encoder.embedding_dim(),
          encoder.positions(), classifier.classes()};
}

std::vector<const Matrix*> Model::parameters() const {
  std::vector<const Matrix*> out;
  for (const auto& p : encoder.parameters()) out.push_back(&p.value);
  out.push_back(&classifier.weights);
  out.push_back(&classifier.bias);
  return out;
}

std::vector<Matrix*> Model::mutable_parameters() {
  std::vector<Matrix*> out;
  for (auto& p : encoder.mutable_parameters()) out.push_back(&p.value);
  out.push_back(&classifier.weights);
  out.push_back(&classifier.bias);
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> out;
  for (const auto& p : encoder.parameters()) out.push_back(p.name);
  out.emplace_back("classifier.w");
  out.emplace_back("classifier.b");
  return out;
}

std::vector<Matrix> zero_gradients(const Model& model) {
  std::vector<Matrix> out;
  for (const Matrix* p : model.parameters()) out.emplace_back(p->rows(), p->cols());
  return out;
}

Sgd::Sgd(double learning_rate, double momentum, double weight_decay)
    : learning_rate_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "Sgd: learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "Sgd: momentum must be in [0, 1)");
  require(weight_decay >= 0.0, "Sgd: weight decay must be nonnegative");
}

void Sgd::step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads) {
  require(params.size() == grads.size(), "Sgd::step: parameter/gradient count mismatch");
  if (velocity_.empty()) {
    for (const Matrix* p : params) velocity_.emplace_back(p->rows(), p->cols());
  }
  require(velocity_.size() == params.size(), "Sgd::step: parameter set changed");
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto w = params[t]->data();
    const auto g = grads[t].data();
    auto v = velocity_[t].data();
    require(w.size() == g.size() && w.size() == v.size(), "Sgd::step: shape mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = momentum_ * v[i] + g[i] + weight_decay_ * w[i];
      w[i] -= learning_rate_ * v[i];
    }
    check_finite(*params[t], "Sgd::step");
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const ModelConfig cfg = model.config();
  out << kCheckpointMagic << '\n';
  out << "encoder " << to_string(cfg.kind) << ' ' << cfg.input_dim << ' ' << cfg.hidden << ' '
      << cfg.embedding_dim << ' ' << cfg.positions << ' ' << cfg.classes << '\n';
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    out << "param " << names[t] << ' ' << params[t]->rows() << ' ' << params[t]->cols() << '\n';
    const auto data = params[t]->data();
    for (std::size_t i = 0; i < data.size(); ++i) out << (i ? "," : "") << format_double(data[i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kCheckpointMagic) {
    throw ParseError(line_no, "not a multimix checkpoint (bad magic line)");
  }
  ++line_no;
  if (!std::getline(in, line)) throw ParseError(line_no, "missing encoder line");
  std::istringstream header(line);
  std::string tag, kind;
  ModelConfig cfg;
  if (!(header >> tag >> kind >> cfg.input_dim >> cfg.hidden >> cfg.embedding_dim >>
        cfg.positions >> cfg.classes) ||
      tag != "encoder") {
    throw ParseError(line_no, "malformed encoder line");
  }
  cfg.kind = parse_encoder_kind(kind);

  Model model{Encoder::zeros(cfg.kind, cfg.input_dim, cfg.hidden, cfg.embedding_dim, cfg.positions),
              Classifier(cfg.embedding_dim, cfg.classes)};
  const auto names = model.parameter_names();
  auto params = model.mutable_parameters();
  for (std::size_t t = 0; t < params.size(); ++t) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing parameter " + names[t]);
    std::istringstream ph(line);
    std::string ptag, name;
    std::size_t rows = 0, cols = 0;
    if (!(ph >> ptag >> name >> rows >> cols) || ptag != "param" || name != names[t] ||
        rows != params[t]->rows() || cols != params[t]->cols()) {
      throw ParseError(line_no, "expected parameter header for " + names[t]);
    }
    ++line_no;
    if (!std::getline(in, line)) throw ParseError(line_no, "missing values for " + names[t]);
    const auto fields = split_fields(line);
    if (fields.size() != rows * cols) throw ParseError(line_no, "wrong value count for " + names[t]);
    auto data = params[t]->data();
    for (std::size_t i = 0; i < fields.size(); ++i) data[i] = parse_double(fields[i], line_no);
  }
  return model;
}

}  // namespace multimix
