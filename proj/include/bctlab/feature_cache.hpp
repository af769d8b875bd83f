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
#include <optional>
#include <span>
#include <vector>

#include "bctlab/backbone.hpp"
#include "bctlab/dataset.hpp"
#include "bctlab/matrix.hpp"

namespace bctlab {

/// Old-model embeddings of the new training set, keyed by dataset index,
/// with a credibility flag per row. Features are stored exactly as the old
/// backbone produced them (not normalized).
struct OldFeatureCache {
  std::uint32_t embed_dim = 0;
  std::vector<std::uint64_t> indices;  // ascending, unique
  Matrix features;
  std::vector<std::uint32_t> labels;
  std::vector<std::uint8_t> credible;

  std::size_t size() const { return indices.size(); }
  std::size_t credible_count() const;
  /// Row holding dataset index `index`, if cached.
  std::optional<std::size_t> find(std::uint64_t index) const;
  void validate() const;

  bool operator==(const OldFeatureCache&) const = default;
};

/// Runs the old backbone over `indices` of `ds`; every row starts credible.
OldFeatureCache build_cache(const Backbone& old_backbone, const LabeledDataset& ds,
                            std::span<const std::size_t> indices);

/// Marks, per class, the floor(fraction * n_c) rows farthest from the class
/// center as non-credible. Distances are taken between unit-normalized
/// features and the mean of the class's unit features; ties exclude the
/// lower dataset index first. Flags are recomputed from scratch.
OldFeatureCache denoise(OldFeatureCache cache, double exclusion_fraction);

/// Replaces the feature of floor(fraction * n) random rows with the feature
/// of a random row from another class, simulating a noisy old model.
OldFeatureCache inject_feature_noise(OldFeatureCache cache, double fraction, std::uint64_t seed);

/// Unit class centers of old features.
struct PrototypeSet {
  Matrix centers;                       // one unit row per class
  std::vector<std::uint32_t> class_ids; // ascending, parallel to centers
  std::vector<std::uint32_t> excluded;  // classes dropped for a degenerate mean

  std::optional<std::size_t> row_of(std::uint32_t label) const;
  std::size_t size() const { return class_ids.size(); }
};

/// Per-class mean of unit-normalized features, renormalized. Classes with no
/// included rows or a (near) zero mean are skipped and listed in `excluded`.
PrototypeSet compute_prototypes(const OldFeatureCache& cache, bool credible_only);

void save_cache(const OldFeatureCache& cache, const std::filesystem::path& path);
OldFeatureCache load_cache(const std::filesystem::path& path);

}  // namespace bctlab
