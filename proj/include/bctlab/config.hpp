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
#include <map>
#include <string>
#include <vector>

#include "bctlab/classifier.hpp"
#include "bctlab/compatible.hpp"
#include "bctlab/dataset.hpp"
#include "bctlab/evaluation.hpp"
#include "bctlab/training.hpp"

namespace bctlab {

struct DatasetBlock {
  std::string path;       // training set file; empty means generate
  std::string eval_path;  // evaluation set file; empty means generate
  int num_classes = 50;
  int per_class = 40;
  int dim = 16;
  double center_radius = 1.0;
  double within_std = 0.1;
  int eval_per_class = 20;
};

struct ModelBlock {
  std::vector<std::size_t> widths;  // input dim first, embed dim last
  LossKind loss = LossKind::kPlainSoftmax;
  double scale = 30.0;
  double margin = 0.3;
  TrainConfig train;

  std::size_t embed_dim() const { return widths.empty() ? 0 : widths.back(); }
};

struct EvalBlock {
  int pairs_per_class = 100;
  int gallery_size = 3;
  double distractor_fraction = 0.2;
  double holdout_fraction = 1.0;
  std::vector<double> far_list{1e-4, 1e-2, 1e-1};
  std::vector<double> fpir_list{1e-2, 1e-1};
  double headline = 1e-2;
  std::size_t audit_trials = 10000;

  EvalSettings settings() const { return {far_list, fpir_list, headline}; }
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  std::string run_id;  // empty means "run-<seed>"
  DatasetBlock dataset;
  Scenario scenario = Scenario::kOpenClass;
  double fraction = 0.3;
  ModelBlock old_model;
  ModelBlock new_model;
  MethodConfig method;
  EvalBlock eval;
  std::vector<double> alpha_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  double cache_noise = 0.2;  // feature noise injected for the denoise ablation
  std::vector<double> chain_fractions{0.3, 0.7, 1.0};

  RunConfig();

  /// Throws config errors for inconsistent blocks.
  void validate() const;
  std::string resolved_run_id() const;
  std::filesystem::path run_dir() const;
};

/// Stream seeds derived from the master seed, one per stochastic stage.
enum class SeedTag : std::uint64_t {
  kTrainData = 1,
  kEvalData,
  kProtocol,
  kOldInit,
  kOldHead,
  kOldTrain,
  kNewInit,
  kNewHead,
  kNewTrain,
  kAudit = 11,
  kChance,
  kCacheNoise,
  kChain,
};

std::uint64_t stage_seed(const RunConfig& cfg, SeedTag tag);

/// Sets one dotted key. Unknown keys and malformed values raise config errors.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Applies `key = value` lines; '#' starts a comment.
void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin = "<text>");
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Parses "key=value" as given to --set.
void apply_override(RunConfig& cfg, const std::string& assignment);

/// Every key in a fixed order; feeding it back reproduces `cfg`.
std::string resolved_text(const RunConfig& cfg);

}  // namespace bctlab
