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

#ifndef MULTIMIX_MODEL_HPP
#define MULTIMIX_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "multimix/classifier.hpp"
#include "multimix/dense_mixing.hpp"
#include "multimix/numerics.hpp"
#include "multimix/rng.hpp"

namespace multimix {

enum class EncoderKind { Pooled, Dense };

EncoderKind parse_encoder_kind(std::string_view text);
std::string_view to_string(EncoderKind kind);

struct NamedMatrix {
  std::string name;
  Matrix value;
};

/*
 * Small ReLU encoder with hand-written backward pass.
 *
 * Pooled: x -> relu(W2 relu(W1 x + b1) + b2), D -> hidden -> d, one position.
 * Dense:  the D inputs are cut into r contiguous chunks of D/r; chunk j maps
 *         to relu(W x_j + b + p_j), sharing W and b across chunks. p_j is a
 *         learned per-position offset so the r positions are distinguishable.
 */
class Encoder {
 public:
  static Encoder pooled(std::size_t input_dim, std::size_t hidden, std::size_t embedding_dim,
                        Rng& rng);
  static Encoder dense(std::size_t input_dim, std::size_t positions, std::size_t embedding_dim,
                       Rng& rng);
  /// All-zero parameters of the given shape; used when loading checkpoints.
  static Encoder zeros(EncoderKind kind, std::size_t input_dim, std::size_t hidden,
                       std::size_t embedding_dim, std::size_t positions);

  EncoderKind kind() const noexcept { return kind_; }
  std::size_t input_dim() const noexcept { return input_dim_; }
  std::size_t hidden() const noexcept { return hidden_; }
  std::size_t embedding_dim() const noexcept { return embedding_dim_; }
  std::size_t positions() const noexcept { return positions_; }

  const std::vector<NamedMatrix>& parameters() const noexcept { return params_; }
  /// Mutable access invalidates outstanding forward caches.
  std::vector<NamedMatrix>& mutable_parameters() noexcept;

  struct Cache {
    const Encoder* owner = nullptr;
    std::uint64_t generation = 0;
    Matrix input;
    std::vector<Matrix> pre_activations;  // pooled: {hidden, output}; dense: one per position
    std::vector<Matrix> activations;      // matching post-ReLU values
  };

  DenseEmbedding forward(const Matrix& x, Cache* cache = nullptr) const;

  struct Gradients {
    std::vector<Matrix> parameters;  // aligned with parameters()
    Matrix input;                    // D x b
  };

  /// Throws ContractError when the cache did not come from this encoder's
  /// current parameters.
  Gradients backward(const Cache& cache, const DenseEmbedding& grad_embedding) const;

 private:
  Encoder(EncoderKind kind, std::size_t input_dim, std::size_t hidden, std::size_t embedding_dim,
          std::size_t positions);

  EncoderKind kind_;
  std::size_t input_dim_;
  std::size_t hidden_;
  std::size_t embedding_dim_;
  std::size_t positions_;
  std::uint64_t generation_ = 0;
  std::vector<NamedMatrix> params_;
};

struct ModelConfig {
  EncoderKind kind = EncoderKind::Pooled;
  std::size_t input_dim = 2;
  std::size_t hidden = 32;
  std::size_t embedding_dim = 16;
  std::size_t positions = 1;
  std::size_t classes = 3;
};

struct Model {
  Encoder encoder;
  Classifier classifier;

  static Model create(const ModelConfig& config, Rng& rng);

  ModelConfig config() const;
  std::size_t parameter_count() const noexcept { return encoder.parameters().size() + 2; }
  /// Encoder parameters followed by classifier weights and bias.
  std::vector<const Matrix*> parameters() const;
  std::vector<Matrix*> mutable_parameters();
  std::vector<std::string> parameter_names() const;
};

/// Zero matrices shaped like every model parameter.
std::vector<Matrix> zero_gradients(const Model& model);

/*
 * SGD with classical momentum and coupled weight decay:
 *   v <- momentum * v + g + weight_decay * w
 *   w <- w - learning_rate * v
 * Weight decay applies to every parameter, biases included.
 */
class Sgd {
 public:
  Sgd(double learning_rate, double momentum, double weight_decay);

  void step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads);

  const std::vector<Matrix>& velocity() const noexcept { return velocity_; }

 private:
  double learning_rate_;
  double momentum_;
  double weight_decay_;
  std::vector<Matrix> velocity_;
};

/*
 * Checkpoint text format (LF line endings):
 *   multimix-checkpoint 1
 *   encoder <pooled|dense> <input_dim> <hidden> <embedding_dim> <positions> <classes>
 *   param <name> <rows> <cols>
 *   <rows*cols comma-separated values, row-major, 17 significant digits>
 *   ... one param/value pair per parameter, in Model::parameters() order
 */
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace multimix

#endif  // MULTIMIX_MODEL_HPP
