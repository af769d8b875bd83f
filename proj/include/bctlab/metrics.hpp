// Copyright 2026 The bctlab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "bctlab/matrix.hpp"

namespace bctlab {

/// Cosine similarity; distance-phrased comparisons use 1 - similarity.
/// Throws degenerate-input for a zero vector.
double similarity(std::span<const double> a, std::span<const double> b);

/// Unit-normalizes each member, averages, renormalizes.
std::vector<double> make_template(std::span<const std::span<const double>> members);
/// Template over rows `rows` of `features`.
std::vector<double> make_template(const Matrix& features, std::span<const std::size_t> rows);

/// Accept rule is `score >= threshold`. The threshold is the smallest value
/// in the pooled score set (or the next double above the largest negative
/// when none qualifies) whose negative acceptance rate is <= `rate`.
struct ThresholdPick {
  double threshold = 0.0;
  std::size_t negatives_accepted = 0;
};
ThresholdPick pick_threshold(std::span<const double> positives, std::span<const double> negatives,
                             double rate);

struct TarResult {
  double tar = 0.0;
  double threshold = 0.0;
  double achieved_far = 0.0;
};

TarResult tar_at_far(std::span<const double> genuine, std::span<const double> impostor, double far);

/// Top-1 search outcome for every query.
struct IdentificationScores {
  std::vector<double> top_score;
  std::vector<bool> correct;  // top-1 identity equals the query's label
  std::vector<bool> mated;
};

struct Gallery {
  Matrix templates;  // unit rows
  std::vector<std::uint32_t> labels;
};

struct QuerySet {
  Matrix templates;  // unit rows
  std::vector<std::uint32_t> labels;
  std::vector<bool> mated;
};

IdentificationScores identify(const Gallery& gallery, const QuerySet& queries);

struct TpirResult {
  double tpir = 0.0;
  double threshold = 0.0;
  double achieved_fpir = 0.0;
};

/// Threshold is set on the top-1 scores of out-of-gallery queries; a mated
/// query counts when its top-1 identity is right and its score clears it.
TpirResult tpir_at_fpir(const IdentificationScores& scores, double fpir);
TpirResult tpir_at_fpir(const Gallery& gallery, const QuerySet& queries, double fpir);

}  // namespace bctlab
