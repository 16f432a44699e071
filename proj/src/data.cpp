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

#include "multimix/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <string>

#include "multimix/errors.hpp"
#include "multimix/io.hpp"
#include "multimix/sampling.hpp"

namespace multimix {
namespace {

constexpr int kCenterAttempts = 1000;

std::size_t parse_label(std::string_view field, std::size_t line) {
  std::size_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line, "label is not a nonnegative integer: '" + std::string(field) + "'");
  }
  return value;
}

}  // namespace

Matrix one_hot(std::span<const std::size_t> labels, std::size_t classes) {
  Matrix y(classes, labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(labels[i] < classes, "one_hot: label out of range");
    y(labels[i], i) = 1.0;
  }
  return y;
}

Dataset::Dataset(Matrix inputs, std::vector<std::size_t> labels, std::size_t classes, Split split)
    : inputs_(std::move(inputs)),
      targets_(one_hot(labels, classes)),
      labels_(std::move(labels)),
      classes_(classes),
      split_(split) {
  require(!labels_.empty(), "Dataset: need at least one sample");
  require(inputs_.cols() == labels_.size(), "Dataset: inputs and labels differ in length");
  check_finite(inputs_, "Dataset");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Matrix x(dim(), indices.size());
  std::vector<std::size_t> labels(indices.size());
  for (std::size_t t = 0; t < indices.size(); ++t) {
    require(indices[t] < size(), "Dataset::subset: index out of range");
    for (std::size_t r = 0; r < dim(); ++r) x(r, t) = inputs_(r, indices[t]);
    labels[t] = labels_[indices[t]];
  }
  return Dataset(std::move(x), std::move(labels), classes_, split_);
}

Matrix blob_centers(std::size_t classes, std::size_t dim, double spread, Rng& rng) {
  require(classes >= 2, "blob_centers: need at least two classes");
  require(dim >= 1, "blob_centers: need dim >= 1");
  Matrix centers(dim, classes);
  std::vector<double> candidate(dim);
  std::vector<double> best(dim);
  for (std::size_t c = 0; c < classes; ++c) {
    double best_gap = -1.0;
    for (int attempt = 0; attempt < kCenterAttempts; ++attempt) {
      double norm = 0.0;
      do {
        norm = 0.0;
        for (double& v : candidate) {
          v = rng.normal();
          norm += v * v;
        }
      } while (norm == 0.0);
      norm = std::sqrt(norm);
      for (double& v : candidate) v *= spread / norm;

      double gap = std::numeric_limits<double>::infinity();
      for (std::size_t prev = 0; prev < c; ++prev) {
        gap = std::min(gap, std::sqrt(squared_distance(candidate, centers.column(prev))));
      }
      if (gap > best_gap) {
        best_gap = gap;
        best = candidate;
      }
      if (gap >= spread) break;
    }
    centers.set_column(c, best);
  }
  return centers;
}

Dataset sample_blobs(const Matrix& centers, std::size_t per_class, double noise_sigma, Rng& rng,
                     Split split) {
  require(centers.cols() >= 2, "sample_blobs: need at least two classes");
  require(noise_sigma >= 0.0, "sample_blobs: noise must be nonnegative");
  const std::size_t dim = centers.rows();
  const std::size_t classes = centers.cols();
  Matrix x(dim, classes * per_class);
  std::vector<std::size_t> labels(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t t = 0; t < per_class; ++t) {
      const std::size_t col = c * per_class + t;
      labels[col] = c;
      for (std::size_t r = 0; r < dim; ++r) {
        const double noise = noise_sigma > 0.0 ? noise_sigma * rng.normal() : 0.0;
        x(r, col) = centers(r, c) + noise;
      }
    }
  }
  return Dataset(std::move(x), std::move(labels), classes, split);
}

Dataset make_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                   double center_spread, double noise_sigma, Rng& rng) {
  const Matrix centers = blob_centers(classes, dim, center_spread, rng);
  return sample_blobs(centers, per_class, noise_sigma, rng);
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << "label";
  for (std::size_t f = 0; f < dataset.dim(); ++f) out << ",f" << f;
  out << '\n';
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out << dataset.labels()[i];
    for (std::size_t f = 0; f < dataset.dim(); ++f)
      out << ',' << format_double(dataset.inputs()(f, i));
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

Dataset load_csv(const std::filesystem::path& path, std::optional<std::size_t> classes,
                 Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError(1, "empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_fields(line);
  if (header.empty() || header[0] != "label") throw ParseError(1, "header must start with 'label'");
  const std::size_t dim = header.size() - 1;
  if (dim == 0) throw ParseError(1, "header names no feature columns");
  for (std::size_t f = 0; f < dim; ++f) {
    if (header[f + 1] != "f" + std::to_string(f)) {
      throw ParseError(1, "expected header field 'f" + std::to_string(f) + "'");
    }
  }

  std::vector<double> values;
  std::vector<std::size_t> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != dim + 1) {
      throw ParseError(line_no, "expected " + std::to_string(dim + 1) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    const std::size_t label = parse_label(fields[0], line_no);
    if (classes && label >= *classes) {
      throw ParseError(line_no, "label " + std::to_string(label) + " >= class count " +
                                    std::to_string(*classes));
    }
    labels.push_back(label);
    for (std::size_t f = 0; f < dim; ++f) values.push_back(parse_double(fields[f + 1], line_no));
  }
  if (labels.empty()) throw ParseError(line_no, "no data rows");

  const std::size_t n = labels.size();
  Matrix x(dim, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t f = 0; f < dim; ++f) x(f, i) = values[i * dim + f];
  const std::size_t c =
      classes ? *classes : *std::max_element(labels.begin(), labels.end()) + 1;
  return Dataset(std::move(x), std::move(labels), c, split);
}

BatchIterator::BatchIterator(const Dataset& dataset, std::size_t batch_size, std::uint64_t seed,
                             bool drop_last)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed), drop_last_(drop_last) {
  require(batch_size >= 1, "BatchIterator: batch size must be positive");
  require(!drop_last || batch_size <= dataset.size(),
          "BatchIterator: batch size exceeds dataset size");
  start_epoch(0);
}

void BatchIterator::start_epoch(std::size_t epoch) {
  epoch_ = epoch;
  cursor_ = 0;
  Rng rng = Rng(seed_).fork(epoch);
  order_ = sample_permutation(dataset_->size(), rng);
}

std::optional<Batch> BatchIterator::next() {
  const std::size_t remaining = order_.size() - cursor_;
  if (remaining == 0 || (drop_last_ && remaining < batch_size_)) return std::nullopt;
  const std::size_t count = std::min(batch_size_, remaining);
  const std::span<const std::size_t> idx(order_.data() + cursor_, count);
  cursor_ += count;
  Dataset picked = dataset_->subset(idx);
  return Batch{picked.inputs(), picked.targets(), picked.labels(),
               std::vector<std::size_t>(idx.begin(), idx.end())};
}

std::size_t BatchIterator::batches_per_epoch() const noexcept {
  const std::size_t n = dataset_->size();
  return drop_last_ ? n / batch_size_ : (n + batch_size_ - 1) / batch_size_;
}

}  // namespace multimix
