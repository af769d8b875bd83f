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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bctlab/backbone.hpp"
#include "bctlab/classifier.hpp"
#include "bctlab/config.hpp"
#include "bctlab/dataset.hpp"
#include "bctlab/evaluation.hpp"
#include "bctlab/feature_cache.hpp"
#include "bctlab/matrix.hpp"
#include "bctlab/training.hpp"

namespace bctlab {

/// Datasets, split and protocol shared by every stage of a run.
struct Workspace {
  LabeledDataset train;
  LabeledDataset eval;
  EvalProtocol protocol;
  ScenarioSplit split;
};

struct TrainedModel {
  Backbone backbone;
  Classifier head;
  LabelMap labels;
  TrainLog log;
};

struct MethodRun {
  TrainedModel model;
  OldFeatureCache cache;
  EvalReport report;  // cross/self test plus constraint audit
};

struct ScenarioResult {
  EvalReport lower;
  EvalReport upper;
  std::optional<EvalReport> upper_prime;  // Open-* scenarios only
  EvalReport method;
  double chance_tar = 0.0;
  TrainLog method_log;
};

Workspace prepare_workspace(const RunConfig& cfg);

/// Plain classification training of `block` on `indices` (no compatibility term).
TrainedModel train_plain(const ModelBlock& block, const LabeledDataset& ds,
                         std::span<const std::size_t> indices, std::uint64_t init_seed,
                         std::uint64_t head_seed, std::uint64_t train_seed);

TrainedModel train_old(const RunConfig& cfg, const Workspace& ws);

/// Trains the new model with `method` against `old` and evaluates it.
/// `cache_noise` > 0 corrupts that share of cached features before denoising.
MethodRun run_method(const RunConfig& cfg, const Workspace& ws, const Backbone& old,
                     const MethodConfig& method, double cache_noise = 0.0);

/// Full scenario: lower bound, upper bound(s), method row; writes the run
/// directory when `write` is set.
ScenarioResult run_scenario(const RunConfig& cfg, bool write = true);

struct AblationPoint {
  std::string label;
  MethodConfig method;
  double cache_noise = 0.0;
  bool ok = false;
  std::string error;
  EvalReport report;
  std::uint64_t old_model_hash = 0;
};

/// One MixBCT run per alpha in `cfg.alpha_grid`, sharing one old model.
std::vector<AblationPoint> run_alpha_ablation(const RunConfig& cfg, bool write = true);

/// Denoising on and off with `cfg.cache_noise` injected into the cache.
std::vector<AblationPoint> run_denoise_ablation(const RunConfig& cfg, bool write = true);

std::string ablation_csv(const std::vector<AblationPoint>& points, double headline);

struct SequentialResult {
  // cell(q, g): query features from model q against gallery features from model g
  Matrix verification;
  Matrix identification;
  std::vector<ProtocolResults> pair_results;  // row-major over (q, g)
};

/// Three-model chain on growing class prefixes; each successor is trained
/// with MixBCT against its predecessor only.
/// Every ordered (query, gallery) pairing of the models in `chain`.
SequentialResult cross_matrix(std::span<const Backbone> chain, const Workspace& ws,
                              const EvalSettings& settings);

SequentialResult run_sequential(const RunConfig& cfg, bool write = true);

/// Re-evaluates stored models against the configured evaluation set.
EvalReport evaluate_models(const RunConfig& cfg, const Backbone& old, const Backbone& updated);

/// FNV-1a over a file's bytes.
std::uint64_t file_hash(const std::filesystem::path& path);

}  // namespace bctlab
