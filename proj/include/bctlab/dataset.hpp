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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bctlab/matrix.hpp"

namespace bctlab {

/// Input vectors with class labels. Sample i is row i of `features`; indices
/// are the join key for feature caches and splits.
struct LabeledDataset {
  std::uint32_t dim = 0;
  std::uint32_t num_classes = 0;
  Matrix features;                    // num_samples x dim
  std::vector<std::uint32_t> labels;  // num_samples

  std::size_t size() const { return labels.size(); }
  bool operator==(const LabeledDataset&) const = default;

  /// Throws invalid-argument when labels or shapes are inconsistent.
  void validate() const;
  /// FNV-1a over the serialized bytes; identifies a parent dataset.
  std::uint64_t fingerprint() const;
};

struct SyntheticSpec {
  int num_classes = 50;
  int per_class = 40;
  int dim = 16;
  double center_radius = 1.0;
  double within_std = 0.25;
  std::uint64_t seed = 1;
};

/// Gaussian blobs around centers drawn uniformly on a sphere. Samples are
/// class-major: class c owns indices [c * per_class, (c + 1) * per_class).
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

/// Rows of `ds` at `indices`, in order, as a standalone dataset.
LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> indices);

// ---------------------------------------------------------------------------
// Upgrade scenarios

enum class Scenario { kExtendedData, kExtendedClass, kOpenData, kOpenClass };

const char* to_string(Scenario s);
Scenario parse_scenario(const std::string& s);

struct ScenarioSplit {
  Scenario scenario = Scenario::kOpenClass;
  double fraction = 0.3;
  std::vector<std::size_t> old_train;
  std::vector<std::size_t> new_train;
  std::uint64_t parent_fingerprint = 0;
  std::size_t parent_size = 0;
};

/// "Top fraction" means lowest class ids (class scenarios) or lowest
/// within-class sample indices (data scenarios); counts round up.
ScenarioSplit split_scenario(const LabeledDataset& ds, Scenario scenario, double fraction);

/// ceil/floor of `fraction * n` that ignore representation error such as
/// 0.3 * 10 == 3.0000000000000004.
std::size_t ceil_count(double fraction, std::size_t n);
std::size_t floor_count(double fraction, std::size_t n);

/// Sorted distinct labels referenced by `indices`.
std::vector<std::uint32_t> classes_of(const LabeledDataset& ds,
                                      std::span<const std::size_t> indices);

/// Maps an arbitrary label subset onto contiguous classifier rows.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::uint32_t> classes);

  std::size_t num_classes() const { return classes_.size(); }
  bool contains(std::uint32_t label) const;
  std::uint32_t row_of(std::uint32_t label) const;  // invalid-argument if absent
  std::uint32_t label_of(std::size_t row) const { return classes_[row]; }
  const std::vector<std::uint32_t>& classes() const { return classes_; }

 private:
  std::vector<std::uint32_t> classes_;  // sorted
};

// ---------------------------------------------------------------------------
// Evaluation protocol

struct VerificationPair {
  std::size_t a = 0;
  std::size_t b = 0;
  bool genuine = false;
  bool operator==(const VerificationPair&) const = default;
};

struct GalleryEntry {
  std::uint32_t label = 0;
  std::vector<std::size_t> members;  // samples pooled into the template
  bool operator==(const GalleryEntry&) const = default;
};

struct Query {
  std::size_t index = 0;
  bool mated = false;  // true when the query's class has a gallery template
  bool operator==(const Query&) const = default;
};

struct EvalProtocol {
  std::vector<VerificationPair> pairs;
  std::vector<GalleryEntry> gallery;
  std::vector<Query> queries;

  std::vector<std::uint32_t> gallery_classes() const;
  bool operator==(const EvalProtocol&) const = default;
};

struct ProtocolSpec {
  double holdout_fraction = 1.0;     // share of each class used at all
  double distractor_fraction = 0.2;  // classes whose queries have no mate
  int pairs_per_class = 50;          // genuine pairs; impostors match
  int gallery_size = 3;              // samples pooled per gallery template
  std::uint64_t seed = 1;
};

/// Verification pairs plus an open-set identification split over `ds`,
/// which must be disjoint from any training data.
EvalProtocol build_eval_protocol(const LabeledDataset& ds, const ProtocolSpec& spec);

// ---------------------------------------------------------------------------
// Persistence

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset load_dataset(const std::filesystem::path& path);

/// Reads `label,f0,...,f{dim-1}` CSV (header required).
LabeledDataset import_csv(const std::filesystem::path& path);

}  // namespace bctlab
