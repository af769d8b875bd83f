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

#include "bctlab/feature_cache.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "binary_io.hpp"
#include "bctlab/error.hpp"
#include "bctlab/rng.hpp"
#include "bctlab/training.hpp"

namespace bctlab {
namespace {

constexpr std::uint32_t kCacheVersion = 1;
// A class mean shorter than this is treated as having no direction.
constexpr double kDegenerateMean = 1e-12;

std::vector<double> unit(std::span<const double> v) {
  std::vector<double> u(v.begin(), v.end());
  const double n = norm2(v);
  if (n > 0.0) {
    for (double& x : u) x /= n;
  }
  return u;
}

// Cache rows grouped by label, each group in ascending dataset-index order.
std::map<std::uint32_t, std::vector<std::size_t>> rows_by_class(const OldFeatureCache& cache) {
  std::map<std::uint32_t, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < cache.size(); ++r) groups[cache.labels[r]].push_back(r);
  return groups;
}

}  // namespace

std::size_t OldFeatureCache::credible_count() const {
  return static_cast<std::size_t>(std::ranges::count(credible, std::uint8_t{1}));
}

std::optional<std::size_t> OldFeatureCache::find(std::uint64_t index) const {
  auto it = std::ranges::lower_bound(indices, index);
  if (it == indices.end() || *it != index) return std::nullopt;
  return static_cast<std::size_t>(it - indices.begin());
}

void OldFeatureCache::validate() const {
  require(features.rows() == indices.size() && labels.size() == indices.size() &&
              credible.size() == indices.size(),
          ErrorCode::kInvalidArgument, "feature cache: column lengths differ");
  require(indices.empty() || features.cols() == embed_dim, ErrorCode::kInvalidArgument,
          "feature cache: feature width != embed_dim");
  for (std::size_t r = 1; r < indices.size(); ++r) {
    require(indices[r - 1] < indices[r], ErrorCode::kInvalidArgument,
            "feature cache: indices must be ascending and unique");
  }
}

OldFeatureCache build_cache(const Backbone& old_backbone, const LabeledDataset& ds,
                            std::span<const std::size_t> indices) {
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::ranges::sort(sorted);
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          ErrorCode::kInvalidArgument, "build_cache: duplicate indices");
  OldFeatureCache cache;
  cache.embed_dim = static_cast<std::uint32_t>(old_backbone.embed_dim());
  cache.features = extract_features(old_backbone, ds, sorted);
  cache.indices.assign(sorted.begin(), sorted.end());
  cache.labels.reserve(sorted.size());
  for (auto i : sorted) cache.labels.push_back(ds.labels[i]);
  cache.credible.assign(sorted.size(), 1);
  return cache;
}

OldFeatureCache denoise(OldFeatureCache cache, double exclusion_fraction) {
  require(exclusion_fraction >= 0.0 && exclusion_fraction < 1.0, ErrorCode::kInvalidArgument,
          "denoise: exclusion fraction must be in [0,1)");
  cache.validate();
  std::ranges::fill(cache.credible, std::uint8_t{1});

  // Classes are independent, so this loop could be split across workers.
  for (const auto& [label, rows] : rows_by_class(cache)) {
    const std::size_t drop = floor_count(exclusion_fraction, rows.size());
    if (drop == 0) continue;

    std::vector<std::vector<double>> units;
    std::vector<double> center(cache.embed_dim, 0.0);
    for (auto r : rows) {
      units.push_back(unit(cache.features.row(r)));
      for (std::size_t d = 0; d < center.size(); ++d) center[d] += units.back()[d];
    }
    for (double& c : center) c /= static_cast<double>(rows.size());

    std::vector<std::pair<double, std::size_t>> dist;  // (distance, row)
    for (std::size_t k = 0; k < rows.size(); ++k) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < center.size(); ++d) {
        const double diff = units[k][d] - center[d];
        d2 += diff * diff;
      }
      dist.emplace_back(std::sqrt(d2), rows[k]);
    }
    // Farthest first; equal distances drop the lower dataset index first.
    std::ranges::sort(dist, [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    for (std::size_t k = 0; k < drop; ++k) cache.credible[dist[k].second] = 0;
  }
  return cache;
}

OldFeatureCache inject_feature_noise(OldFeatureCache cache, double fraction, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::kInvalidArgument,
          "inject_feature_noise: fraction must be in [0,1]");
  cache.validate();
  const std::size_t n = cache.size();
  const std::size_t count = floor_count(fraction, n);
  if (count == 0) return cache;
  const Matrix original = cache.features;
  Rng rng(seed);
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  rng.shuffle(rows);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t r = rows[k];
    // Rejection-sample a donor row of another class.
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const std::size_t donor = rng.below(n);
      if (cache.labels[donor] != cache.labels[r]) {
        std::ranges::copy(original.row(donor), cache.features.row(r).begin());
        break;
      }
    }
  }
  return cache;
}

std::optional<std::size_t> PrototypeSet::row_of(std::uint32_t label) const {
  auto it = std::ranges::lower_bound(class_ids, label);
  if (it == class_ids.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - class_ids.begin());
}

PrototypeSet compute_prototypes(const OldFeatureCache& cache, bool credible_only) {
  cache.validate();
  PrototypeSet protos;
  std::vector<std::vector<double>> centers;
  for (const auto& [label, rows] : rows_by_class(cache)) {
    std::vector<double> mean(cache.embed_dim, 0.0);
    std::size_t included = 0;
    for (auto r : rows) {
      if (credible_only && !cache.credible[r]) continue;
      const auto u = unit(cache.features.row(r));
      for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += u[d];
      ++included;
    }
    if (included == 0) {
      protos.excluded.push_back(label);
      continue;
    }
    for (double& m : mean) m /= static_cast<double>(included);
    const double n = norm2(mean);
    if (n < kDegenerateMean) {
      protos.excluded.push_back(label);
      continue;
    }
    for (double& m : mean) m /= n;
    protos.class_ids.push_back(label);
    centers.push_back(std::move(mean));
  }
  protos.centers = Matrix(centers.size(), cache.embed_dim);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    std::ranges::copy(centers[c], protos.centers.row(c).begin());
  }
  return protos;
}

void save_cache(const OldFeatureCache& cache, const std::filesystem::path& path) {
  cache.validate();
  io::Writer w;
  w.magic("BCTF");
  w.put<std::uint32_t>(kCacheVersion);
  w.put<std::uint64_t>(cache.size());
  w.put<std::uint32_t>(cache.embed_dim);
  for (std::size_t r = 0; r < cache.size(); ++r) {
    w.put<std::uint64_t>(cache.indices[r]);
    w.put<std::uint32_t>(cache.labels[r]);
    w.put<std::uint8_t>(cache.credible[r]);
    w.put_f64s(cache.features.row(r));
  }
  w.write_to(path);
}

OldFeatureCache load_cache(const std::filesystem::path& path) {
  auto r = io::Reader::from_file(path);
  r.expect_magic("BCTF");
  const auto version = r.get<std::uint32_t>();
  if (version != kCacheVersion) r.corrupt("unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>();
  OldFeatureCache cache;
  cache.embed_dim = r.get<std::uint32_t>();
  if (cache.embed_dim == 0) r.corrupt("zero embed_dim");
  const std::uint64_t record = 8 + 4 + 1 + 8ULL * cache.embed_dim;
  if (count > r.remaining() / record) r.corrupt("truncated payload");
  cache.features = Matrix(count, cache.embed_dim);
  cache.indices.resize(count);
  cache.labels.resize(count);
  cache.credible.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    cache.indices[i] = r.get<std::uint64_t>();
    cache.labels[i] = r.get<std::uint32_t>();
    cache.credible[i] = r.get<std::uint8_t>();
    if (cache.credible[i] > 1) r.corrupt("credible flag must be 0 or 1");
    r.get_f64s(cache.features.row(i));
  }
  r.expect_end();
  try {
    cache.validate();
  } catch (const Error& e) {
    r.corrupt(e.what());
  }
  return cache;
}

}  // namespace bctlab
