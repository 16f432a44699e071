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

#ifndef MULTIMIX_COMMANDS_HPP
#define MULTIMIX_COMMANDS_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "multimix/analysis.hpp"
#include "multimix/data.hpp"
#include "multimix/model.hpp"
#include "multimix/train.hpp"

namespace multimix {

/// Synthetic Gaussian-blob dataset used when no --data file is given.
struct BlobOptions {
  std::size_t classes = 3;
  std::size_t train_per_class = 600;
  std::size_t test_per_class = 200;
  std::size_t dim = 2;
  double center_spread = 3.0;
  double noise_sigma = 0.5;
};

struct RunConfig {
  TrainConfig train;
  std::string encoder = "auto";  ///< pooled, dense, or auto (dense iff positions > 1)
  std::size_t hidden = 32;
  std::size_t embedding_dim = 16;
  std::size_t positions = 1;
  bool paper_defaults = false;

  std::filesystem::path data;       ///< training (or analysed) dataset CSV; empty = synthetic
  std::filesystem::path test_data;  ///< held-out CSV; empty = synthetic
  std::filesystem::path checkpoint; ///< mix/analyze input
  std::filesystem::path out = "out";
  BlobOptions blobs;

  bool dense = false;         ///< mix: dump dense MultiMix artifacts
  double kernel_t = 2.0;      ///< uniformity temperature
  std::size_t bins = 15;      ///< calibration bins
  std::size_t intrusion_per_class = 32;
  std::size_t segment_draws = 1;  ///< hull: pairwise mini-batches, b points each

  ModelConfig model_config(std::size_t input_dim, std::size_t classes) const;
};

/// Synthetic train/test split, or the CSV files when configured.
std::pair<Dataset, Dataset> resolve_datasets(const RunConfig& cfg);

struct AnalysisRow {
  double alignment = 0.0;
  double uniformity = 0.0;
  double modified_alignment = 0.0;
  double intrusion_distance = 0.0;  ///< NaN when fewer than three classes
  double ece = 0.0;
  double oe = 0.0;
  double accuracy = 0.0;
};

/// Metrics of a model on a dataset, on its pooled clean embeddings.
AnalysisRow analyze_model(const Model& model, const Dataset& dataset, const RunConfig& cfg);

/// Header and one row of analysis CSV, including the config echo.
void write_analysis_csv(const std::filesystem::path& path, const AnalysisRow& row,
                        const RunConfig& cfg, std::size_t samples);

void cmd_train(const RunConfig& cfg, std::ostream& log);
void cmd_mix(const RunConfig& cfg, std::ostream& log);
void cmd_hull(const RunConfig& cfg, std::ostream& log);
void cmd_analyze(const RunConfig& cfg, std::ostream& log);
void cmd_blobs(const RunConfig& cfg, std::ostream& log);

/// Parses arguments (argv[0] is the program name) and runs the selected
/// subcommand. Returns the process exit code; errors go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace multimix

#endif  // MULTIMIX_COMMANDS_HPP
