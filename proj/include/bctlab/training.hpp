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

#include "bctlab/backbone.hpp"
#include "bctlab/classifier.hpp"
#include "bctlab/dataset.hpp"
#include "bctlab/matrix.hpp"

namespace bctlab {

struct TrainConfig {
  double lr0 = 0.1;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int batch_size = 128;
  int epochs = 30;
  std::uint64_t seed = 1;

  void validate() const;
};

/// One mini-batch as seen by an objective.
struct Batch {
  std::size_t epoch = 0;
  std::size_t index = 0;
  std::span<const std::size_t> samples;  // dataset indices
  std::span<const std::uint32_t> targets;  // classifier rows
};

struct BatchOutcome {
  LossGrad loss;
  std::size_t replaced = 0;
  std::size_t credible_pool = 0;
};

/// The per-batch loss used by `run_training`. Implementations see the new
/// embeddings of the batch and return the loss with gradients.
class BatchObjective {
 public:
  virtual ~BatchObjective() = default;
  virtual BatchOutcome evaluate(const Classifier& cls, const Matrix& emb, const Batch& batch) = 0;
};

/// Plain classification loss of the classifier.
class ClassificationObjective final : public BatchObjective {
 public:
  BatchOutcome evaluate(const Classifier& cls, const Matrix& emb, const Batch& batch) override;
};

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t size = 0;
  double loss = 0.0;
  std::size_t replaced = 0;
  std::size_t credible_pool = 0;
  bool operator==(const BatchRecord&) const = default;
};

struct TrainLog {
  std::vector<double> epoch_loss;  // sample-weighted mean per epoch
  std::vector<BatchRecord> batches;
  bool operator==(const TrainLog&) const = default;
};

/// Epochs of shuffled mini-batches (last partial batch kept) with momentum
/// SGD and linear LR decay over all steps. Deterministic in `cfg.seed`.
TrainLog run_training(const LabeledDataset& ds, std::span<const std::size_t> indices,
                      const LabelMap& labels, Backbone& backbone, Classifier& cls,
                      const TrainConfig& cfg, BatchObjective& objective);

TrainLog train_classifier(const LabeledDataset& ds, std::span<const std::size_t> indices,
                          const LabelMap& labels, Backbone& backbone, Classifier& cls,
                          const TrainConfig& cfg);

/// Row r is the embedding of sample indices[r].
Matrix extract_features(const Backbone& backbone, const LabeledDataset& ds,
                        std::span<const std::size_t> indices);

/// Top-1 accuracy of backbone + classifier on `indices`.
double classification_accuracy(const LabeledDataset& ds, std::span<const std::size_t> indices,
                               const LabelMap& labels, const Backbone& backbone,
                               const Classifier& cls);

}  // namespace bctlab
