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

#include "multimix/commands.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <ostream>

#include "multimix/dense_mixing.hpp"
#include "multimix/errors.hpp"
#include "multimix/io.hpp"
#include "multimix/mixing.hpp"
#include "multimix/sampling.hpp"

namespace multimix {
namespace {

// Stream indices under Rng(seed), disjoint from those the trainer uses.
constexpr std::uint64_t kDataStream = 100;
constexpr std::uint64_t kMixStream = 101;
constexpr std::uint64_t kHullStream = 102;
constexpr std::uint64_t kIntrusionStream = 103;

constexpr double kSimplexTolerance = 1e-9;

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create '" + dir.string() + "': " + ec.message());
}

void check_column_sums(const Matrix& m, const std::string& what) {
  const auto sums = column_sums(m);
  for (std::size_t k = 0; k < sums.size(); ++k) {
    if (std::abs(sums[k] - 1.0) > kSimplexTolerance) {
      throw NumericError(what + ": column " + std::to_string(k) + " sums to " +
                         format_double(sums[k]));
    }
  }
}

void check_simplex_columns(const Matrix& m, const std::string& what) {
  for (double v : m.data()) {
    if (v < 0.0) throw NumericError(what + ": negative coefficient");
  }
  check_column_sums(m, what);
}

Dataset synthetic_split(const RunConfig& cfg, bool test) {
  Rng rng = Rng(cfg.train.seed).fork(kDataStream);
  const auto& o = cfg.blobs;
  const Matrix centers = blob_centers(o.classes, o.dim, o.center_spread, rng);
  Dataset train = sample_blobs(centers, o.train_per_class, o.noise_sigma, rng, Split::Train);
  if (!test) return train;
  return sample_blobs(centers, o.test_per_class, o.noise_sigma, rng, Split::Test);
}

Model model_for(const RunConfig& cfg, const Dataset& data) {
  if (!cfg.checkpoint.empty()) {
    Model model = load_checkpoint(cfg.checkpoint);
    require(model.encoder.input_dim() == data.dim(), "checkpoint input dimension != dataset");
    require(model.classifier.classes() == data.classes(), "checkpoint class count != dataset");
    return model;
  }
  return init_model(cfg.model_config(data.dim(), data.classes()), cfg.train.seed);
}

Batch first_batch(const Dataset& data, std::size_t b, std::uint64_t seed) {
  require(b <= data.size(), "batch size exceeds dataset size");
  BatchIterator it(data, b, seed, true);
  return *it.next();
}

double mean_intrusion_distance(const Matrix& embeddings, const std::vector<std::size_t>& labels,
                               std::size_t classes, std::size_t per_class, Rng& rng) {
  if (classes < 3) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::vector<std::size_t>> members(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < classes; ++a) {
    for (std::size_t c = a + 1; c < classes; ++c) {
      const std::size_t count = std::min({per_class, members[a].size(), members[c].size()});
      std::size_t others = 0;
      for (std::size_t o = 0; o < classes; ++o)
        if (o != a && o != c) others += members[o].size();
      if (count == 0 || others == 0) continue;

      Matrix mixed(embeddings.rows(), count);
      for (std::size_t t = 0; t < count; ++t) {
        const double lambda = sample_beta(1.0, rng);
        for (std::size_t r = 0; r < embeddings.rows(); ++r) {
          mixed(r, t) = lambda * embeddings(r, members[a][t]) +
                        (1.0 - lambda) * embeddings(r, members[c][t]);
        }
      }
      Matrix clean(embeddings.rows(), others);
      std::size_t col = 0;
      for (std::size_t o = 0; o < classes; ++o) {
        if (o == a || o == c) continue;
        for (std::size_t i : members[o]) {
          for (std::size_t r = 0; r < embeddings.rows(); ++r) clean(r, col) = embeddings(r, i);
          ++col;
        }
      }
      total += intrusion_distance(mixed, clean);
      ++pairs;
    }
  }
  return pairs ? total / static_cast<double>(pairs) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

ModelConfig RunConfig::model_config(std::size_t input_dim, std::size_t classes) const {
  ModelConfig mc;
  if (encoder == "auto") {
    mc.kind = positions > 1 ? EncoderKind::Dense : EncoderKind::Pooled;
  } else {
    mc.kind = parse_encoder_kind(encoder);
  }
  mc.input_dim = input_dim;
  mc.hidden = hidden;
  mc.embedding_dim = embedding_dim;
  mc.positions = mc.kind == EncoderKind::Dense ? positions : 1;
  require(mc.kind == EncoderKind::Dense || positions == 1,
          "the pooled encoder has a single position; use --encoder dense for --positions > 1");
  mc.classes = classes;
  return mc;
}

std::pair<Dataset, Dataset> resolve_datasets(const RunConfig& cfg) {
  if (cfg.data.empty()) return {synthetic_split(cfg, false), synthetic_split(cfg, true)};
  Dataset train = load_csv(cfg.data);
  if (cfg.test_data.empty()) return {train, train};
  Dataset test = load_csv(cfg.test_data, train.classes(), Split::Test);
  return {std::move(train), std::move(test)};
}

AnalysisRow analyze_model(const Model& model, const Dataset& dataset, const RunConfig& cfg) {
  const Evaluation eval = evaluate(model, dataset);
  const LabeledEmbeddings e{eval.embeddings, dataset.labels(), dataset.classes()};
  AnalysisRow row;
  row.alignment = alignment(e);
  row.uniformity = uniformity(e, cfg.kernel_t);
  row.modified_alignment = modified_alignment(e);
  Rng rng = Rng(cfg.train.seed).fork(kIntrusionStream);
  row.intrusion_distance = mean_intrusion_distance(eval.embeddings, dataset.labels(),
                                                   dataset.classes(), cfg.intrusion_per_class, rng);
  const auto cal = calibration(eval.probabilities, dataset.labels(), cfg.bins);
  row.ece = cal.ece;
  row.oe = cal.oe;
  row.accuracy = eval.accuracy;
  return row;
}

void write_analysis_csv(const std::filesystem::path& path, const AnalysisRow& row,
                        const RunConfig& cfg, std::size_t samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "alignment,uniformity,modified_alignment,intrusion_distance,ece,oe,accuracy,"
         "samples,mix,seed,kernel_t,bins\n";
  const auto num = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
  out << num(row.alignment) << ',' << num(row.uniformity) << ',' << num(row.modified_alignment)
      << ',' << num(row.intrusion_distance) << ',' << num(row.ece) << ',' << num(row.oe) << ','
      << num(row.accuracy) << ',' << samples << ',' << to_string(cfg.train.mix_mode) << ','
      << cfg.train.seed << ',' << format_double(cfg.kernel_t) << ',' << cfg.bins << '\n';
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.train.validate();
  auto [train, test] = resolve_datasets(cfg);
  Model model = init_model(cfg.model_config(train.dim(), train.classes()), cfg.train.seed);
  ensure_directory(cfg.out);

  auto result = train_model(std::move(model), train, test, cfg.train, [&](const EpochMetrics& m) {
    log << "epoch " << m.epoch << " loss " << m.train_loss << " train_acc " << m.train_accuracy
        << " test_acc " << m.test_accuracy << '\n';
  });

  Matrix metrics(result.report.epochs.size(), 4);
  for (std::size_t e = 0; e < result.report.epochs.size(); ++e) {
    const auto& m = result.report.epochs[e];
    metrics(e, 0) = static_cast<double>(m.epoch);
    metrics(e, 1) = m.train_loss;
    metrics(e, 2) = m.train_accuracy;
    metrics(e, 3) = m.test_accuracy;
  }
  write_matrix_csv(cfg.out / "metrics.csv", metrics,
                   {"epoch", "train_loss", "train_accuracy", "test_accuracy"});
  save_checkpoint(result.model, cfg.out / "checkpoint.txt");
  write_analysis_csv(cfg.out / "analysis.csv", analyze_model(result.model, test, cfg), cfg,
                     test.size());
}

void cmd_mix(const RunConfig& cfg, std::ostream& log) {
  const auto [train, test] = resolve_datasets(cfg);
  const Model model = model_for(cfg, train);
  const std::size_t b = cfg.train.batch_size;
  const std::size_t n = cfg.train.generated;
  const std::size_t m = cfg.train.support();
  const Batch batch = first_batch(train, b, cfg.train.seed);
  Rng rng = Rng(cfg.train.seed).fork(kMixStream);

  if (!cfg.dense) {
    const Matrix z = model.encoder.forward(batch.inputs).pooled();
    const auto lam = build_interpolation_matrix(b, n, m, cfg.train.alpha_mode, rng);
    const auto mixed = multimix(z, batch.targets, lam);
    check_simplex_columns(lam.lambda(), "lambda");
    check_column_sums(mixed.mixed_targets, "mixed targets");
    check_finite(mixed.mixed_embeddings, "mixed embeddings");
    ensure_directory(cfg.out);
    const auto cols = numbered_header("k", n);
    write_matrix_csv(cfg.out / "lambda.csv", lam.lambda(), cols);
    write_matrix_csv(cfg.out / "mixed_embeddings.csv", mixed.mixed_embeddings, cols);
    write_matrix_csv(cfg.out / "mixed_targets.csv", mixed.mixed_targets, cols);
    log << "wrote lambda (" << b << "x" << n << "), mixed embeddings and targets to "
        << cfg.out.string() << '\n';
    return;
  }

  const DenseEmbedding z = model.encoder.forward(batch.inputs);
  const std::size_t r = z.positions();
  const Matrix attention =
      batch_attention(z, batch.targets, cfg.train.attention, &model.classifier.weights);
  const auto lambdas = draw_position_lambdas(b, n, m, cfg.train.alpha_mode, r, rng);
  const auto outcome = dense_multimix_with(z, batch.targets, attention, lambdas);

  check_column_sums(transpose(outcome.attention), "attention");
  Matrix weights(r, n);
  for (std::size_t j = 0; j < r; ++j) {
    check_simplex_columns(lambdas[j].lambda(), "lambda");
    check_simplex_columns(outcome.coefficients[j], "coefficients");
    check_column_sums(outcome.mixed_targets[j], "mixed targets");
    for (std::size_t k = 0; k < n; ++k) {
      if (!(outcome.weights[j][k] > 0.0)) throw NumericError("dense weights must be positive");
      weights(j, k) = outcome.weights[j][k];
    }
  }
  ensure_directory(cfg.out);
  const auto cols = numbered_header("k", n);
  write_matrix_csv(cfg.out / "attention.csv", outcome.attention, numbered_header("p", r));
  write_matrix_csv(cfg.out / "weights.csv", weights, cols);
  for (std::size_t j = 0; j < r; ++j) {
    const std::string suffix = "_p" + std::to_string(j) + ".csv";
    write_matrix_csv(cfg.out / ("lambda" + suffix), lambdas[j].lambda(), cols);
    write_matrix_csv(cfg.out / ("coefficients" + suffix), outcome.coefficients[j], cols);
    write_matrix_csv(cfg.out / ("mixed_embeddings" + suffix), outcome.mixed_embeddings[j], cols);
    write_matrix_csv(cfg.out / ("mixed_targets" + suffix), outcome.mixed_targets[j], cols);
  }
  log << "wrote dense mix for " << r << " positions (" << outcome.terms() << " loss terms) to "
      << cfg.out.string() << '\n';
}

void cmd_hull(const RunConfig& cfg, std::ostream& log) {
  const Dataset data = cfg.data.empty() ? synthetic_split(cfg, false) : load_csv(cfg.data);
  require(data.dim() == 2, "hull: dataset must be two-dimensional");
  const std::size_t b = cfg.train.batch_size;
  const std::size_t n = cfg.train.generated;
  const Batch batch = first_batch(data, b, cfg.train.seed);
  Rng rng = Rng(cfg.train.seed).fork(kHullStream);

  const auto lam = build_interpolation_matrix(b, n, b, cfg.train.alpha_mode, rng);
  const Matrix hull = matmul(batch.inputs, lam.lambda());
  check_simplex_columns(lam.lambda(), "hull coefficients");

  std::vector<PairwiseMixSpec> specs;
  std::vector<Matrix> segments;
  for (std::size_t t = 0; t < cfg.segment_draws; ++t) {
    specs.push_back(sample_pairwise_spec(b, cfg.train.mixup_alpha, rng));
    segments.push_back(input_mixup(batch.inputs, specs.back()));
  }

  ensure_directory(cfg.out);
  Matrix points(b, 3);
  for (std::size_t i = 0; i < b; ++i) {
    points(i, 0) = batch.inputs(0, i);
    points(i, 1) = batch.inputs(1, i);
    points(i, 2) = static_cast<double>(batch.labels[i]);
  }
  write_matrix_csv(cfg.out / "points.csv", points, {"x0", "x1", "label"});

  Matrix hull_rows(n, 2 + b);
  for (std::size_t k = 0; k < n; ++k) {
    hull_rows(k, 0) = hull(0, k);
    hull_rows(k, 1) = hull(1, k);
    for (std::size_t i = 0; i < b; ++i) hull_rows(k, 2 + i) = lam.lambda()(i, k);
  }
  auto header = std::vector<std::string>{"x0", "x1"};
  for (auto& name : numbered_header("c", b)) header.push_back(name);
  write_matrix_csv(cfg.out / "hull_samples.csv", hull_rows, header);

  Matrix segment_rows(cfg.segment_draws * b, 5);
  for (std::size_t t = 0; t < cfg.segment_draws; ++t) {
    for (std::size_t i = 0; i < b; ++i) {
      const std::size_t row = t * b + i;
      segment_rows(row, 0) = segments[t](0, i);
      segment_rows(row, 1) = segments[t](1, i);
      segment_rows(row, 2) = static_cast<double>(i);
      segment_rows(row, 3) = static_cast<double>(specs[t].permutation[i]);
      segment_rows(row, 4) = specs[t].lambda;
    }
  }
  write_matrix_csv(cfg.out / "segment_samples.csv", segment_rows, {"x0", "x1", "i", "j", "lambda"});
  log << "wrote " << n << " hull samples and " << cfg.segment_draws * b << " segment samples to "
      << cfg.out.string() << '\n';
}

void cmd_analyze(const RunConfig& cfg, std::ostream& log) {
  require(!cfg.checkpoint.empty(), "analyze: --checkpoint is required");
  if (!std::filesystem::exists(cfg.checkpoint)) {
    throw std::runtime_error("checkpoint '" + cfg.checkpoint.string() + "' does not exist");
  }
  const Dataset data = cfg.data.empty() ? synthetic_split(cfg, true) : load_csv(cfg.data);
  const Model model = model_for(cfg, data);
  const AnalysisRow row = analyze_model(model, data, cfg);
  ensure_directory(cfg.out);
  write_analysis_csv(cfg.out / "analysis.csv", row, cfg, data.size());
  log << "alignment " << row.alignment << " uniformity " << row.uniformity << " accuracy "
      << row.accuracy << '\n';
}

void cmd_blobs(const RunConfig& cfg, std::ostream& log) {
  ensure_directory(cfg.out);
  save_csv(synthetic_split(cfg, false), cfg.out / "train.csv");
  save_csv(synthetic_split(cfg, true), cfg.out / "test.csv");
  log << "wrote train.csv and test.csv to " << cfg.out.string() << '\n';
}

namespace {

struct StringOptions {
  std::string mix;
  std::string alpha_mode;
  std::string attention;
  std::string nonlinearity;
};

// Reads `key = value` lines (`#` comments) into `--key=value` arguments.
std::vector<std::string> config_arguments(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file '" + path.string() + "'");
  std::vector<std::string> args;
  std::string line;
  std::size_t line_no = 0;
  const auto trim = [](std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return std::string();
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") throw ParseError(line_no, "invalid key '" + key + "'");
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

void add_shared_options(CLI::App& app, RunConfig& cfg, StringOptions& s) {
  auto& t = cfg.train;
  app.add_option("--config", "key = value file; command-line flags take precedence");
  app.add_option("--seed", t.seed, "seed for every random stream");
  app.add_option("--data", cfg.data, "dataset CSV (label,f0,...); synthetic blobs when empty");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--batch-size,-b", t.batch_size, "mini-batch size b");
  app.add_option("--n", t.generated, "mixed examples generated per mini-batch");
  app.add_option("--m", t.interpolated, "examples interpolated per mixed example (0 = b)");
  app.add_option("--alpha-mode", s.alpha_mode, "Dirichlet alpha: fixed:A or uniform:LO,HI");
  app.add_option("--mixup-alpha", t.mixup_alpha, "Beta(alpha, alpha) for pairwise mixup");
  app.add_option("--mix", s.mix, "none|input|manifold|multimix|dense-multimix|dense-pairwise");
  app.add_option("--attention", s.attention, "dense attention reference: uniform|gap|cam");
  app.add_option("--nonlinearity", s.nonlinearity, "dense attention nonlinearity: softmax|relul1");
  app.add_option("--positions", cfg.positions, "spatial positions r of the dense encoder");
  app.add_option("--mix-prob", t.mix_probability,
                 "probability of the embedding-space mix (input mixup otherwise)");
  app.add_option("--encoder", cfg.encoder, "pooled|dense|auto");
  app.add_option("--hidden", cfg.hidden, "hidden width of the pooled encoder");
  app.add_option("--embed-dim", cfg.embedding_dim, "embedding channels d");
  app.add_flag("--paper-defaults", cfg.paper_defaults,
               "b=128, n=1000, m=b, lr=0.1, momentum=0.9, weight decay=1e-4 unless given");
  app.add_option("--classes", cfg.blobs.classes, "synthetic classes");
  app.add_option("--train-per-class", cfg.blobs.train_per_class, "synthetic train samples per class");
  app.add_option("--test-per-class", cfg.blobs.test_per_class, "synthetic test samples per class");
  app.add_option("--dim", cfg.blobs.dim, "synthetic input dimension");
  app.add_option("--center-spread", cfg.blobs.center_spread, "synthetic center radius");
  app.add_option("--noise", cfg.blobs.noise_sigma, "synthetic noise sigma");
}

void finalize(CLI::App& app, RunConfig& cfg, const StringOptions& s) {
  auto& t = cfg.train;
  t.mix_mode = parse_mix_mode(s.mix);
  t.alpha_mode = AlphaMode::parse(s.alpha_mode);
  t.attention.source = parse_attention_source(s.attention);
  t.attention.nonlinearity = parse_nonlinearity(s.nonlinearity);
  if (cfg.paper_defaults) {
    const auto unset = [&](const char* name) { return app.count(name) == 0; };
    if (unset("--batch-size")) t.batch_size = 128;
    if (unset("--n")) t.generated = 1000;
    if (unset("--m")) t.interpolated = 0;
    if (app.get_option_no_throw("--lr") != nullptr) {
      if (unset("--lr")) t.learning_rate = 0.1;
      if (unset("--momentum")) t.momentum = 0.9;
      if (unset("--weight-decay")) t.weight_decay = 1e-4;
    }
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);

  // Splice config-file entries in right after the subcommand so explicit
  // flags, which come later, win.
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      continue;
    }
    try {
      const auto extra = config_arguments(path);
      std::size_t sub = 0;
      while (sub < args.size() && !args[sub].empty() && args[sub][0] == '-') ++sub;
      const auto at = sub < args.size() ? sub + 1 : 0;
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 2;
    }
    break;
  }

  CLI::App app{"MultiMix: many-sample interpolation augmentation in embedding space"};
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  struct Command {
    RunConfig cfg;
    StringOptions strings;
    CLI::App* app = nullptr;
    void (*run)(const RunConfig&, std::ostream&) = nullptr;
  };
  std::map<std::string, std::unique_ptr<Command>> commands;
  const auto make = [&](const std::string& name, const std::string& help,
                        void (*run)(const RunConfig&, std::ostream&)) -> Command& {
    auto cmd = std::make_unique<Command>();
    cmd->strings = {std::string(to_string(cmd->cfg.train.mix_mode)),
                    cmd->cfg.train.alpha_mode.to_string(),
                    std::string(to_string(cmd->cfg.train.attention.source)),
                    std::string(to_string(cmd->cfg.train.attention.nonlinearity))};
    cmd->run = run;
    cmd->app = app.add_subcommand(name, help);
    auto& ref = *cmd;
    commands[name] = std::move(cmd);
    return ref;
  };

  auto& train = make("train", "train an encoder and classifier; writes metrics, checkpoint, analysis",
                     cmd_train);
  add_shared_options(*train.app, train.cfg, train.strings);
  train.app->add_option("--test-data", train.cfg.test_data, "held-out CSV");
  train.app->add_option("--epochs", train.cfg.train.epochs, "training epochs");
  train.app->add_option("--lr", train.cfg.train.learning_rate, "SGD learning rate");
  train.app->add_option("--momentum", train.cfg.train.momentum, "SGD momentum");
  train.app->add_option("--weight-decay", train.cfg.train.weight_decay, "SGD weight decay");
  train.app->add_flag("--attention-gradient", train.cfg.train.attention_gradient,
                      "backpropagate through dense attention maps");
  train.app->add_option("--kernel-t", train.cfg.kernel_t, "uniformity kernel temperature");
  train.app->add_option("--bins", train.cfg.bins, "calibration bins");

  auto& mix = make("mix", "dump interpolation matrices and mixed embeddings/targets as CSV", cmd_mix);
  add_shared_options(*mix.app, mix.cfg, mix.strings);
  mix.app->add_option("--checkpoint", mix.cfg.checkpoint, "model checkpoint (random init if empty)");
  mix.app->add_flag("--dense", mix.cfg.dense, "dense MultiMix: per-position dumps");

  auto& hull = make("hull", "sample pairwise segments and the convex hull of a 2-D mini-batch",
                    cmd_hull);
  hull.cfg.train.batch_size = 10;
  hull.cfg.train.generated = 300;
  add_shared_options(*hull.app, hull.cfg, hull.strings);
  hull.app->add_option("--segment-draws", hull.cfg.segment_draws,
                       "pairwise mini-batches, b segment samples each");

  auto& analyze = make("analyze", "embedding and calibration metrics of a checkpoint", cmd_analyze);
  add_shared_options(*analyze.app, analyze.cfg, analyze.strings);
  analyze.app->add_option("--checkpoint", analyze.cfg.checkpoint, "model checkpoint")->required();
  analyze.app->add_option("--kernel-t", analyze.cfg.kernel_t, "uniformity kernel temperature");
  analyze.app->add_option("--bins", analyze.cfg.bins, "calibration bins");
  analyze.app->add_option("--intrusion-per-class", analyze.cfg.intrusion_per_class,
                          "mixed embeddings per class pair for intrusion distance");

  auto& blobs = make("blobs", "write the synthetic train/test datasets as CSV", cmd_blobs);
  add_shared_options(*blobs.app, blobs.cfg, blobs.strings);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  for (auto& [name, cmd] : commands) {
    if (!cmd->app->parsed()) continue;
    try {
      finalize(*cmd->app, cmd->cfg, cmd->strings);
      cmd->run(cmd->cfg, out);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }
  return 1;
}

}  // namespace multimix
