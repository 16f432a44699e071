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

#include "multimix/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "multimix/errors.hpp"

namespace multimix {
namespace {

// Embeddings transposed so each example is a contiguous row.
Matrix by_example(const Matrix& embeddings) { return transpose(embeddings); }

}  // namespace

void LabeledEmbeddings::validate() const {
  require(embeddings.cols() == labels.size(), "LabeledEmbeddings: labels length != columns");
  for (std::size_t l : labels) require(l < classes, "LabeledEmbeddings: label out of range");
}

double alignment(const LabeledEmbeddings& e, DistanceKind kind) {
  e.validate();
  std::vector<std::size_t> counts(e.classes, 0);
  for (std::size_t l : e.labels) ++counts[l];
  for (std::size_t c : counts) require(c != 1, "alignment: a class has a single member");
  const Matrix rows = by_example(e.embeddings);
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < e.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < e.labels.size(); ++j) {
      if (e.labels[i] != e.labels[j]) continue;
      const double d2 = squared_distance(rows.row(i), rows.row(j));
      total += kind == DistanceKind::Squared ? d2 : std::sqrt(d2);
      ++pairs;
    }
  }
  require(pairs > 0, "alignment: no same-class pairs");
  return total / static_cast<double>(pairs);
}

double uniformity(const LabeledEmbeddings& e, double t) {
  require(t > 0.0, "uniformity: temperature must be positive");
  const std::size_t n = e.embeddings.cols();
  require(n >= 2, "uniformity: need at least two embeddings");
  const Matrix rows = by_example(e.embeddings);
  // log-mean-exp of -t * d2 with the max factored out, so widely spread
  // points do not underflow to log(0).
  std::vector<double> exponents;
  exponents.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      exponents.push_back(-t * squared_distance(rows.row(i), rows.row(j)));
  const double top = *std::max_element(exponents.begin(), exponents.end());
  double acc = 0.0;
  for (double x : exponents) acc += std::exp(x - top);
  return top + std::log(acc / static_cast<double>(exponents.size()));
}

double modified_alignment(const LabeledEmbeddings& e) {
  e.validate();
  const Matrix rows = by_example(e.embeddings);
  double positive = 0.0;
  double negative = 0.0;
  std::size_t positive_pairs = 0;
  std::size_t negative_pairs = 0;
  for (std::size_t i = 0; i < e.labels.size(); ++i) {
    for (std::size_t j = i + 1; j < e.labels.size(); ++j) {
      const double d2 = squared_distance(rows.row(i), rows.row(j));
      if (e.labels[i] == e.labels[j]) {
        positive += d2;
        ++positive_pairs;
      } else {
        negative += d2;
        ++negative_pairs;
      }
    }
  }
  require(positive_pairs > 0 && negative_pairs > 0,
          "modified_alignment: need both same-class and different-class pairs");
  if (!(negative > 0.0)) throw DegenerateError("modified_alignment: all negative pairs coincide");
  return positive / negative;
}

double intrusion_distance(const Matrix& mixed, const Matrix& clean_other) {
  require(mixed.cols() >= 1, "intrusion_distance: no mixed embeddings");
  require(clean_other.cols() >= 1, "intrusion_distance: empty clean set");
  require(mixed.rows() == clean_other.rows(), "intrusion_distance: dimension mismatch");
  const Matrix mixed_rows = by_example(mixed);
  const Matrix clean_rows = by_example(clean_other);
  double total = 0.0;
  for (std::size_t k = 0; k < mixed_rows.rows(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < clean_rows.rows(); ++i)
      best = std::min(best, squared_distance(mixed_rows.row(k), clean_rows.row(i)));
    total += best;
  }
  return total / static_cast<double>(mixed_rows.rows());
}

CalibrationResult calibration(const Matrix& probs, std::span<const std::size_t> labels,
                              std::size_t bins) {
  require(bins >= 1, "calibration: need at least one bin");
  require(probs.cols() == labels.size(), "calibration: labels length != columns");
  require(!labels.empty(), "calibration: no samples");
  std::vector<double> confidence_sum(bins, 0.0);
  std::vector<double> correct(bins, 0.0);
  std::vector<std::size_t> count(bins, 0);
  for (std::size_t k = 0; k < probs.cols(); ++k) {
    require(labels[k] < probs.rows(), "calibration: label out of range");
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.rows(); ++c)
      if (probs(c, k) > probs(best, k)) best = c;
    const double conf = probs(best, k);
    auto bin = static_cast<std::ptrdiff_t>(std::ceil(conf * static_cast<double>(bins))) - 1;
    bin = std::clamp<std::ptrdiff_t>(bin, 0, static_cast<std::ptrdiff_t>(bins) - 1);
    confidence_sum[bin] += conf;
    correct[bin] += best == labels[k] ? 1.0 : 0.0;
    ++count[bin];
  }
  CalibrationResult out;
  const double n = static_cast<double>(labels.size());
  for (std::size_t b = 0; b < bins; ++b) {
    if (count[b] == 0) continue;
    const double size = static_cast<double>(count[b]);
    const double acc = correct[b] / size;
    const double conf = confidence_sum[b] / size;
    out.ece += (size / n) * std::abs(acc - conf);
    out.oe += (size / n) * conf * std::max(conf - acc, 0.0);
  }
  return out;
}

}  // namespace multimix
