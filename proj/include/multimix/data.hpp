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

#ifndef MULTIMIX_DATA_HPP
#define MULTIMIX_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "multimix/numerics.hpp"
#include "multimix/rng.hpp"

namespace multimix {

enum class Split { Train, Test };

/// Labelled examples, one per column: inputs D x N and one-hot targets c x N.
class Dataset {
 public:
  Dataset(Matrix inputs, std::vector<std::size_t> labels, std::size_t classes,
          Split split = Split::Train);

  const Matrix& inputs() const noexcept { return inputs_; }
  const Matrix& targets() const noexcept { return targets_; }
  const std::vector<std::size_t>& labels() const noexcept { return labels_; }
  std::size_t classes() const noexcept { return classes_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return inputs_.rows(); }
  Split split() const noexcept { return split_; }

  /// Columns `indices`, in that order.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Matrix inputs_;
  Matrix targets_;
  std::vector<std::size_t> labels_;
  std::size_t classes_;
  Split split_;
};

/// One-hot c x N matrix for `labels`.
Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes);

/// `classes` centers on the sphere of radius `spread` in `dim` dimensions, as
/// columns of a dim x classes matrix. Directions are uniform; a candidate is
/// redrawn (up to a fixed budget) while it lies closer than `spread` to an
/// accepted center, so small class counts stay well separated.
Matrix blob_centers(std::size_t classes, std::size_t dim, double spread, Rng& rng);

/// per_class isotropic Gaussian samples around each center column, grouped by
/// class.
Dataset sample_blobs(const Matrix& centers, std::size_t per_class, double noise_sigma, Rng& rng,
                     Split split = Split::Train);

Dataset make_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                   double center_spread, double noise_sigma, Rng& rng);

/// CSV with header `label,f0,...,f{D-1}`. Features are written with 17
/// significant digits so a save/load round trip is exact.
void save_csv(const Dataset& dataset, const std::filesystem::path& path);

/// Throws ParseError (with line number) on malformed input. When `classes`
/// is not given it is one more than the largest label.
Dataset load_csv(const std::filesystem::path& path,
                 std::optional<std::size_t> classes = std::nullopt, Split split = Split::Train);

struct Batch {
  Matrix inputs;   // D x b
  Matrix targets;  // c x b
  std::vector<std::size_t> labels;
  std::vector<std::size_t> indices;  // positions in the source dataset
};

/*
 * Shuffled mini-batches. Epoch e visits the samples in the order of a
 * permutation drawn from Rng(seed).fork(e). With drop_last the trailing
 * partial batch is skipped so every batch has exactly `batch_size` columns.
 * The dataset must outlive the iterator.
 */
class BatchIterator {
 public:
  BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                bool drop_last = true);

  void start_epoch(std::size_t epoch);
  /// The next batch, or nullopt at the end of the epoch.
  std::optional<Batch> next();

  std::size_t batches_per_epoch() const noexcept;
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  const Dataset* dataset_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  bool drop_last_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

}  // namespace multimix

#endif  // MULTIMIX_DATA_HPP
