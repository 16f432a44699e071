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

#ifndef MULTIMIX_ANALYSIS_HPP
#define MULTIMIX_ANALYSIS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "multimix/numerics.hpp"

namespace multimix {

// All pairwise metrics use unordered pairs {i, j} with i != j.

struct LabeledEmbeddings {
  Matrix embeddings;                // d x N
  std::vector<std::size_t> labels;  // length N
  std::size_t classes = 0;

  /// Throws ContractError on length mismatch or a label >= classes.
  void validate() const;
};

enum class DistanceKind { Squared, Euclidean };

/// Mean distance over same-class pairs. Every class present must have at
/// least two members.
double alignment(const LabeledEmbeddings& e, DistanceKind kind = DistanceKind::Squared);

/// log of the mean Gaussian-kernel similarity exp(-t ||e_i - e_j||^2) over
/// all pairs.
double uniformity(const LabeledEmbeddings& e, double t = 2.0);

/// Sum of squared same-class pair distances over the sum for different-class
/// pairs.
double modified_alignment(const LabeledEmbeddings& e);

/// Mean over mixed columns of the minimum squared distance to any column of
/// clean_other.
double intrusion_distance(const Matrix& mixed, const Matrix& clean_other);

struct CalibrationResult {
  double ece = 0.0;
  double oe = 0.0;
};

/// Equal-width binning of max-probability confidence on [0, 1]; confidence
/// p lands in bin ceil(p * bins) - 1 (bin 0 also takes p == 0).
CalibrationResult calibration(const Matrix& probs, std::span<const std::size_t> labels,
                              std::size_t bins = 15);

}  // namespace multimix

#endif  // MULTIMIX_ANALYSIS_HPP
