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

#include "multimix/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "multimix/errors.hpp"
#include "multimix/mixing.hpp"

namespace multimix {
namespace {

// Stream indices under Rng(seed).
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kStepStream = 2;

bool is_dense_path(MixMode mode) {
  return mode == MixMode::DenseMultiMix || mode == MixMode::DensePairwise;
}

std::size_t hot_index(const Matrix& y, std::size_t column) {
  for (std::size_t c = 0; c < y.rows(); ++c)
    if (y(c, column) == 1.0) return c;
  throw ContractError("CAM attention needs one-hot targets");
}

// -log(max(p, floor)), the derivative of the cross-entropy w.r.t. the targets.
Matrix negative_log(const Matrix& p) {
  Matrix out(p.rows(), p.cols());
  for (std::size_t i = 0; i < p.size(); ++i)
    out.data()[i] = -std::log(std::max(p.data()[i], kProbabilityFloor));
  return out;
}

std::vector<double> per_column_ce(const Matrix& y, const Matrix& neg_log_p) {
  std::vector<double> out(y.cols(), 0.0);
  for (std::size_t c = 0; c < y.rows(); ++c)
    for (std::size_t k = 0; k < y.cols(); ++k) out[k] += y(c, k) * neg_log_p(c, k);
  return out;
}

/*
 * Gradient of the dense loss w.r.t. the attention maps, then through the
 * attention nonlinearity and reference vector into the embeddings (and into
 * the classifier weights for CAM).
 *
 * Per position, with M = diag(a) Lambda, s = 1^T M and Mhat = M diag(s)^-1:
 *   dL/da_i = sum_k Lambda_ik [ (G_ik - sum_i' G_i'k Mhat_i'k) / s_k + dL/ds_k ]
 * where G = dL/dMhat at fixed s and dL/ds_k = (l_k - L) / sum(s) comes from
 * the weighted average itself.
 */
void attention_backward(const DenseEmbedding& z, const Matrix& y, const DenseMixOutcome& outcome,
                        const std::vector<InterpolationMatrix>& lambdas,
                        const std::vector<Matrix>& grad_mixed, const std::vector<Matrix>& probs,
                        const AttentionConfig& cfg, const Classifier& classifier,
                        DenseEmbedding& grad_z, Matrix& grad_classifier_w) {
  const std::size_t b = z.batch();
  const std::size_t r = z.positions();
  const double inv_r = 1.0 / static_cast<double>(r);
  Matrix grad_attention(b, r);

  for (std::size_t j = 0; j < r; ++j) {
    const auto& s = outcome.weights[j];
    const Matrix& mhat = outcome.coefficients[j];
    const Matrix& lam = lambdas[j].lambda();
    const std::size_t n = s.size();
    double total_s = 0.0;
    for (double v : s) total_s += v;

    const Matrix neg_log_p = negative_log(probs[j]);
    const auto losses = per_column_ce(outcome.mixed_targets[j], neg_log_p);
    double position_loss = 0.0;
    for (std::size_t k = 0; k < n; ++k) position_loss += s[k] * losses[k];
    position_loss /= total_s;

    // dL/dYtilde, including the s_k / sum(s) / r column weights.
    Matrix grad_targets = neg_log_p;
    for (std::size_t c = 0; c < grad_targets.rows(); ++c)
      for (std::size_t k = 0; k < n; ++k) grad_targets(c, k) *= s[k] / total_s * inv_r;

    Matrix grad_mhat = transposed_matmul(z.position(j), grad_mixed[j]);
    axpy(grad_mhat, 1.0, transposed_matmul(y, grad_targets));

    for (std::size_t k = 0; k < n; ++k) {
      double raw = 0.0;
      for (std::size_t i = 0; i < b; ++i) raw += outcome.attention(i, j) * lam(i, k);
      if (!(raw > 0.0)) continue;  // floor fallback, locally constant
      double centered = 0.0;
      for (std::size_t i = 0; i < b; ++i) centered += grad_mhat(i, k) * mhat(i, k);
      const double grad_s = (losses[k] - position_loss) / total_s * inv_r;
      for (std::size_t i = 0; i < b; ++i) {
        if (lam(i, k) == 0.0) continue;
        grad_attention(i, j) += lam(i, k) * ((grad_mhat(i, k) - centered) / s[k] + grad_s);
      }
    }
  }

  for (std::size_t i = 0; i < b; ++i) {
    const Matrix block = z.block(i);
    std::vector<double> u;
    if (cfg.source == AttentionSource::Gap) {
      u = gap_vector(block);
    } else {
      u = classifier.weights.column(hot_index(y, i));
    }
    std::vector<double> scores(r, 0.0);
    for (std::size_t j = 0; j < r; ++j)
      for (std::size_t ch = 0; ch < z.channels(); ++ch) scores[j] += block(ch, j) * u[ch];

    double dot = 0.0;
    for (std::size_t j = 0; j < r; ++j) dot += outcome.attention(i, j) * grad_attention(i, j);
    std::vector<double> grad_scores(r, 0.0);
    if (cfg.nonlinearity == Nonlinearity::Softmax) {
      for (std::size_t j = 0; j < r; ++j)
        grad_scores[j] = outcome.attention(i, j) * (grad_attention(i, j) - dot);
    } else {
      double total = 0.0;
      for (double sc : scores) total += std::max(sc, 0.0);
      if (!(total > 0.0)) continue;  // uniform fallback, locally constant
      for (std::size_t j = 0; j < r; ++j)
        if (scores[j] > 0.0) grad_scores[j] = (grad_attention(i, j) - dot) / total;
    }

    std::vector<double> grad_u(z.channels(), 0.0);
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t ch = 0; ch < z.channels(); ++ch) {
        grad_z.position(j)(ch, i) += grad_scores[j] * u[ch];
        grad_u[ch] += grad_scores[j] * block(ch, j);
      }
    }
    if (cfg.source == AttentionSource::Gap) {
      for (std::size_t j = 0; j < r; ++j)
        for (std::size_t ch = 0; ch < z.channels(); ++ch)
          grad_z.position(j)(ch, i) += grad_u[ch] * inv_r;
    } else {
      const std::size_t label = hot_index(y, i);
      for (std::size_t ch = 0; ch < z.channels(); ++ch) grad_classifier_w(ch, label) += grad_u[ch];
    }
  }
}

LossAndGradients run(const Model& model, const Matrix& x, const Matrix& y, const MixPlan& plan,
                     const TrainConfig& cfg, const Matrix* fixed_attention, bool want_gradients) {
  require(x.cols() == y.cols(), "loss: inputs and targets differ in batch size");
  require(y.rows() == model.classifier.classes(), "loss: target rows != class count");
  const std::size_t b = x.cols();
  const Classifier& classifier = model.classifier;

  Matrix x_in = x;
  Matrix y_in = y;
  if (plan.path == MixMode::InputMixup) {
    const Matrix op = pairwise_operator(plan.pairwise);
    x_in = matmul(x, op);
    y_in = matmul(y, op);
  }

  Encoder::Cache cache;
  const DenseEmbedding z = model.encoder.forward(x_in, want_gradients ? &cache : nullptr);
  const std::size_t r = z.positions();
  LossAndGradients out;
  DenseEmbedding grad_z(z.channels(), r, b);
  if (want_gradients) out.gradients = zero_gradients(model);
  const std::size_t w_index = model.encoder.parameters().size();

  if (!is_dense_path(plan.path)) {
    const Matrix pooled = z.pooled();
    Matrix mixed;
    Matrix targets;
    std::optional<InterpolationMatrix> mixing;
    switch (plan.path) {
      case MixMode::None:
      case MixMode::InputMixup:
        mixed = pooled;
        targets = y_in;
        break;
      case MixMode::Manifold: {
        mixing.emplace(pairwise_operator(plan.pairwise), std::min<std::size_t>(2, b));
        auto mo = multimix(pooled, y, *mixing);
        mixed = std::move(mo.mixed_embeddings);
        targets = std::move(mo.mixed_targets);
        break;
      }
      case MixMode::MultiMix: {
        require(plan.lambdas.size() == 1, "loss: MultiMix plan needs one interpolation matrix");
        mixing.emplace(plan.lambdas.front());
        auto mo = multimix(pooled, y, *mixing);
        mixed = std::move(mo.mixed_embeddings);
        targets = std::move(mo.mixed_targets);
        break;
      }
      default: break;
    }
    const Matrix logits = classifier.logits(mixed);
    out.loss = cross_entropy(targets, softmax_columns(logits));
    if (!want_gradients) return out;

    const Matrix grad_logits = ce_gradient_wrt_logits(targets, logits);
    auto cg = classifier.backward(mixed, grad_logits);
    out.gradients[w_index] = std::move(cg.weights);
    out.gradients[w_index + 1] = std::move(cg.bias);
    Matrix grad_pooled = mixing ? multimix_backward(cg.embeddings, *mixing) : std::move(cg.embeddings);
    const double inv_r = 1.0 / static_cast<double>(r);
    for (std::size_t j = 0; j < r; ++j) grad_z.position(j) = scale(grad_pooled, inv_r);
  } else {
    DenseMixOutcome outcome;
    if (plan.path == MixMode::DensePairwise) {
      outcome = dense_pairwise_mix(z, y, plan.pairwise);
    } else {
      const Matrix attention = fixed_attention != nullptr
                                   ? *fixed_attention
                                   : batch_attention(z, y, cfg.attention, &classifier.weights);
      outcome = dense_multimix_with(z, y, attention, plan.lambdas);
    }

    const double inv_r = 1.0 / static_cast<double>(r);
    std::vector<Matrix> logits(r);
    std::vector<Matrix> probs(r);
    double total = 0.0;
    std::size_t terms = 0;
    for (std::size_t j = 0; j < r; ++j) {
      logits[j] = classifier.logits(outcome.mixed_embeddings[j]);
      probs[j] = softmax_columns(logits[j]);
      const auto loss = weighted_cross_entropy(outcome.mixed_targets[j], probs[j], outcome.weights[j]);
      total += loss.value;
      terms += loss.terms;
    }
    out.loss = {total * inv_r, terms};
    if (!want_gradients) return out;

    Matrix& grad_w = out.gradients[w_index];
    Matrix& grad_b = out.gradients[w_index + 1];
    std::vector<Matrix> grad_mixed(r);
    for (std::size_t j = 0; j < r; ++j) {
      const Matrix grad_logits = scale(
          ce_gradient_wrt_logits(outcome.mixed_targets[j], logits[j], outcome.weights[j]), inv_r);
      auto cg = classifier.backward(outcome.mixed_embeddings[j], grad_logits);
      axpy(grad_w, 1.0, cg.weights);
      axpy(grad_b, 1.0, cg.bias);
      grad_z.position(j) = matmul_transposed(cg.embeddings, outcome.coefficients[j]);
      grad_mixed[j] = std::move(cg.embeddings);
    }
    if (plan.path == MixMode::DenseMultiMix && cfg.attention_gradient && fixed_attention == nullptr &&
        cfg.attention.source != AttentionSource::None) {
      attention_backward(z, y, outcome, plan.lambdas, grad_mixed, probs, cfg.attention, classifier,
                         grad_z, grad_w);
    }
  }

  auto eg = model.encoder.backward(cache, grad_z);
  for (std::size_t t = 0; t < eg.parameters.size(); ++t) out.gradients[t] = std::move(eg.parameters[t]);
  return out;
}

std::size_t argmax_column(const Matrix& m, std::size_t column) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.rows(); ++c)
    if (m(c, column) > m(best, column)) best = c;
  return best;
}

}  // namespace

MixMode parse_mix_mode(std::string_view text) {
  if (text == "none") return MixMode::None;
  if (text == "input") return MixMode::InputMixup;
  if (text == "manifold") return MixMode::Manifold;
  if (text == "multimix") return MixMode::MultiMix;
  if (text == "dense-multimix") return MixMode::DenseMultiMix;
  if (text == "dense-pairwise") return MixMode::DensePairwise;
  throw ContractError("unknown mix mode '" + std::string(text) + "'");
}

std::string_view to_string(MixMode mode) {
  switch (mode) {
    case MixMode::None: return "none";
    case MixMode::InputMixup: return "input";
    case MixMode::Manifold: return "manifold";
    case MixMode::MultiMix: return "multimix";
    case MixMode::DenseMultiMix: return "dense-multimix";
    case MixMode::DensePairwise: return "dense-pairwise";
  }
  return "?";
}

void TrainConfig::validate() const {
  require(batch_size >= 1, "TrainConfig: batch size must be positive");
  require(generated >= 1, "TrainConfig: n must be positive");
  require(support() <= batch_size, "TrainConfig: need m <= b");
  require(support() >= 2 || (mix_mode != MixMode::MultiMix && mix_mode != MixMode::DenseMultiMix),
          "TrainConfig: MultiMix needs m >= 2");
  require(mix_probability >= 0.0 && mix_probability <= 1.0,
          "TrainConfig: mix probability must be in [0, 1]");
  require(mixup_alpha > 0.0, "TrainConfig: mixup alpha must be positive");
  require(learning_rate > 0.0, "TrainConfig: learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "TrainConfig: momentum must be in [0, 1)");
  require(weight_decay >= 0.0, "TrainConfig: weight decay must be nonnegative");
}

MixPlan draw_mix_plan(const TrainConfig& cfg, std::size_t batch, std::size_t positions, Rng& rng) {
  MixPlan plan;
  switch (cfg.mix_mode) {
    case MixMode::None: plan.path = MixMode::None; break;
    case MixMode::InputMixup: plan.path = MixMode::InputMixup; break;
    default: plan.path = rng.bernoulli(cfg.mix_probability) ? cfg.mix_mode : MixMode::InputMixup;
  }
  switch (plan.path) {
    case MixMode::InputMixup:
    case MixMode::Manifold:
    case MixMode::DensePairwise:
      plan.pairwise = sample_pairwise_spec(batch, cfg.mixup_alpha, rng);
      break;
    case MixMode::MultiMix:
      plan.lambdas.push_back(
          build_interpolation_matrix(batch, cfg.generated, cfg.support(), cfg.alpha_mode, rng));
      break;
    case MixMode::DenseMultiMix:
      plan.lambdas = draw_position_lambdas(batch, cfg.generated, cfg.support(), cfg.alpha_mode,
                                           positions, rng);
      break;
    case MixMode::None: break;
  }
  return plan;
}

LossAndGradients loss_and_gradients(const Model& model, const Matrix& x, const Matrix& y,
                                    const MixPlan& plan, const TrainConfig& cfg,
                                    const Matrix* fixed_attention) {
  return run(model, x, y, plan, cfg, fixed_attention, true);
}

LossValue plan_loss(const Model& model, const Matrix& x, const Matrix& y, const MixPlan& plan,
                    const TrainConfig& cfg, const Matrix* fixed_attention) {
  return run(model, x, y, plan, cfg, fixed_attention, false).loss;
}

TrainState::TrainState(Model m, const TrainConfig& cfg)
    : model(std::move(m)), optimizer(cfg.learning_rate, cfg.momentum, cfg.weight_decay) {}

StepResult train_step(TrainState& state, const Batch& batch, const TrainConfig& cfg, Rng& rng) {
  const MixPlan plan =
      draw_mix_plan(cfg, batch.inputs.cols(), state.model.encoder.positions(), rng);
  auto result = loss_and_gradients(state.model, batch.inputs, batch.targets, plan, cfg);
  if (!std::isfinite(result.loss.value)) throw NumericError("train_step: non-finite loss");
  for (const auto& g : result.gradients) check_finite(g, "train_step gradient");
  state.optimizer.step(state.model.mutable_parameters(), result.gradients);
  return {result.loss, plan.path};
}

Evaluation evaluate(const Model& model, const Dataset& dataset) {
  require(dataset.size() >= 1, "evaluate: empty dataset");
  require(dataset.classes() == model.classifier.classes(), "evaluate: class count mismatch");
  Evaluation out;
  out.embeddings = model.encoder.forward(dataset.inputs()).pooled();
  out.probabilities = softmax_columns(model.classifier.logits(out.embeddings));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i)
    correct += argmax_column(out.probabilities, i) == dataset.labels()[i] ? 1 : 0;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(dataset.size());
  out.mean_cross_entropy = cross_entropy(dataset.targets(), out.probabilities).value;
  return out;
}

Model init_model(const ModelConfig& config, std::uint64_t seed) {
  Rng rng = Rng(seed).fork(kInitStream);
  return Model::create(config, rng);
}

TrainResult train_model(Model model, const Dataset& train, const Dataset& test,
                        const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  require(train.classes() == model.classifier.classes(), "train_model: class count mismatch");
  const Rng root(cfg.seed);
  Rng shuffle_seed_rng = root.fork(kShuffleStream);
  Rng step_rng = root.fork(kStepStream);
  BatchIterator batches(train, cfg.batch_size, shuffle_seed_rng.next_u64(), true);

  TrainState state(std::move(model), cfg);
  TrainReport report;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    batches.start_epoch(epoch);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    while (auto batch = batches.next()) {
      const auto step = train_step(state, *batch, cfg, step_rng);
      loss_sum += step.loss.value;
      ++steps;
      report.embedding_steps += step.path == MixMode::InputMixup || step.path == MixMode::None ? 0 : 1;
    }
    report.steps += steps;
    EpochMetrics metrics;
    metrics.epoch = epoch + 1;
    metrics.train_loss = steps ? loss_sum / static_cast<double>(steps) : 0.0;
    metrics.train_accuracy = evaluate(state.model, train).accuracy;
    metrics.test_accuracy = evaluate(state.model, test).accuracy;
    report.epochs.push_back(metrics);
    if (on_epoch) on_epoch(metrics);
  }
  const Evaluation final_eval = evaluate(state.model, test);
  report.test_embeddings = {final_eval.embeddings, test.labels(), test.classes()};
  report.test_probabilities = final_eval.probabilities;
  return {std::move(state.model), std::move(report)};
}

}  // namespace multimix
