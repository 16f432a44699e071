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

#ifndef MULTIMIX_TRAIN_HPP
#define MULTIMIX_TRAIN_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "multimix/analysis.hpp"
#include "multimix/data.hpp"
#include "multimix/dense_mixing.hpp"
#include "multimix/losses.hpp"
#include "multimix/model.hpp"
#include "multimix/rng.hpp"
#include "multimix/sampling.hpp"

namespace multimix {

enum class MixMode { None, InputMixup, Manifold, MultiMix, DenseMultiMix, DensePairwise };

MixMode parse_mix_mode(std::string_view text);
std::string_view to_string(MixMode mode);

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t generated = 128;   ///< n, mixed columns per mini-batch
  std::size_t interpolated = 0;  ///< m, nonzeros per column; 0 means the batch size
  AlphaMode alpha_mode = AlphaMode::uniform_range(0.5, 2.0);
  double mixup_alpha = 1.0;      ///< Beta(alpha, alpha) for pairwise and input mixup
  double mix_probability = 0.5;
  MixMode mix_mode = MixMode::MultiMix;
  AttentionConfig attention;
  /// Backpropagate through the attention maps of dense MultiMix. Off by
  /// default: attention is a constant of the step.
  bool attention_gradient = false;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  std::size_t support() const noexcept { return interpolated == 0 ? batch_size : interpolated; }
  void validate() const;
};

/*
 * The randomness of one training step, drawn up front so the loss can be
 * re-evaluated at perturbed parameters (finite differences) with everything
 * else held fixed.
 *
 * None and InputMixup run every step as configured. The embedding-space
 * modes run with probability mix_probability; otherwise the step falls back
 * to input mixup.
 */
struct MixPlan {
  MixMode path = MixMode::None;
  PairwiseMixSpec pairwise;                  // InputMixup, Manifold, DensePairwise
  std::vector<InterpolationMatrix> lambdas;  // MultiMix: one; DenseMultiMix: one per position
};

MixPlan draw_mix_plan(const TrainConfig& cfg, std::size_t batch, std::size_t positions, Rng& rng);

struct LossAndGradients {
  LossValue loss;
  std::vector<Matrix> gradients;  // aligned with Model::parameters()
};

/// Loss of `plan` on the batch (x, y) and its exact gradient. For dense
/// MultiMix, `fixed_attention` (b x r) replaces the attention computed from
/// the clean embeddings.
LossAndGradients loss_and_gradients(const Model& model, const Matrix& x, const Matrix& y,
                                    const MixPlan& plan, const TrainConfig& cfg,
                                    const Matrix* fixed_attention = nullptr);

/// Forward only; same value as loss_and_gradients(...).loss.
LossValue plan_loss(const Model& model, const Matrix& x, const Matrix& y, const MixPlan& plan,
                    const TrainConfig& cfg, const Matrix* fixed_attention = nullptr);

struct TrainState {
  Model model;
  Sgd optimizer;

  TrainState(Model m, const TrainConfig& cfg);
};

struct StepResult {
  LossValue loss;
  MixMode path = MixMode::None;
};

/// One SGD step. Throws NumericError if the loss is not finite.
StepResult train_step(TrainState& state, const Batch& batch, const TrainConfig& cfg, Rng& rng);

struct Evaluation {
  double accuracy = 0.0;
  double mean_cross_entropy = 0.0;
  Matrix probabilities;  // c x N
  Matrix embeddings;     // d x N, pooled over positions
};

/// Clean forward pass; argmax of the position-averaged logits.
Evaluation evaluate(const Model& model, const Dataset& dataset);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochMetrics> epochs;
  LabeledEmbeddings test_embeddings;
  Matrix test_probabilities;
  std::size_t steps = 0;
  std::size_t embedding_steps = 0;  ///< steps that took the embedding-space path
};

struct TrainResult {
  Model model;
  TrainReport report;
};

/// Model initialization stream for a seed, matching what train_model uses.
Model init_model(const ModelConfig& config, std::uint64_t seed);

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Trains from `model` for cfg.epochs epochs. Streams for shuffling and
/// mixing are derived from cfg.seed.
TrainResult train_model(Model model, const Dataset& train, const Dataset& test,
                        const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace multimix

#endif  // MULTIMIX_TRAIN_HPP
