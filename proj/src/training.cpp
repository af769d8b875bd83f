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

#include "bctlab/training.hpp"

#include <algorithm>

#include "bctlab/error.hpp"
#include "bctlab/kernels.hpp"
#include "bctlab/optimizer.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646;  // "SHUFF"

Matrix gather(const LabeledDataset& ds, std::span<const std::size_t> indices) {
  Matrix x(indices.size(), ds.dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::ranges::copy(ds.features.row(indices[r]), x.row(r).begin());
  }
  return x;
}

}  // namespace

void TrainConfig::validate() const {
  require(lr0 > 0.0, ErrorCode::kInvalidArgument, "train config: lr0 must be positive");
  require(momentum >= 0.0 && momentum < 1.0, ErrorCode::kInvalidArgument,
          "train config: momentum must be in [0,1)");
  require(weight_decay >= 0.0, ErrorCode::kInvalidArgument, "train config: weight_decay < 0");
  require(batch_size >= 2, ErrorCode::kInvalidArgument, "train config: batch_size must be >= 2");
  require(epochs >= 0, ErrorCode::kInvalidArgument, "train config: epochs must be >= 0");
}

BatchOutcome ClassificationObjective::evaluate(const Classifier& cls, const Matrix& emb,
                                               const Batch& batch) {
  return {classification_loss(cls, emb, batch.targets), 0, 0};
}

TrainLog run_training(const LabeledDataset& ds, std::span<const std::size_t> indices,
                      const LabelMap& labels, Backbone& backbone, Classifier& cls,
                      const TrainConfig& cfg, BatchObjective& objective) {
  cfg.validate();
  require(backbone.input_dim() == ds.dim, ErrorCode::kInvalidArgument,
          "train: backbone input width does not match dataset");
  require(backbone.embed_dim() == cls.weights.cols(), ErrorCode::kInvalidArgument,
          "train: classifier width does not match embedding");
  require(cls.num_classes() == labels.num_classes(), ErrorCode::kInvalidArgument,
          "train: classifier rows do not match the split's classes");

  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::vector<std::uint32_t> targets_all(ds.size(), 0);
  for (auto i : order) {
    require(i < ds.size(), ErrorCode::kInvalidArgument, "train: index out of range");
    targets_all[i] = labels.row_of(ds.labels[i]);
  }

  TrainLog log;
  if (order.empty() || cfg.epochs == 0) return log;

  const auto bsz = static_cast<std::size_t>(cfg.batch_size);
  const std::size_t per_epoch = (order.size() + bsz - 1) / bsz;
  const std::size_t total_steps = per_epoch * static_cast<std::size_t>(cfg.epochs);
  SgdState sgd;
  std::size_t step = 0;
  std::vector<std::uint32_t> targets;

  for (std::size_t epoch = 0; epoch < static_cast<std::size_t>(cfg.epochs); ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, {kShuffleStream, epoch}));
    shuffle_rng.shuffle(order);
    double epoch_sum = 0.0;
    for (std::size_t b = 0; b < per_epoch; ++b) {
      const std::size_t begin = b * bsz;
      const std::size_t end = std::min(order.size(), begin + bsz);
      std::span<const std::size_t> samples(order.data() + begin, end - begin);
      targets.clear();
      for (auto i : samples) targets.push_back(targets_all[i]);

      ForwardTape tape;
      const Matrix emb = backbone.forward(gather(ds, samples), tape);
      BatchOutcome outcome = objective.evaluate(cls, emb, {epoch, b, samples, targets});
      BackboneGradients grads = backbone.backward(tape, outcome.loss.grad_emb);

      auto params = backbone.parameters();
      params.push_back(cls.weights.values());
      auto grad_spans = grads.spans();
      grad_spans.push_back(outcome.loss.grad_weights.values());
      sgd_step(params, grad_spans, lr_at(step, total_steps, cfg.lr0), cfg.momentum,
               cfg.weight_decay, sgd);
      ++step;

      epoch_sum += outcome.loss.loss * static_cast<double>(samples.size());
      log.batches.push_back({epoch, b, samples.size(), outcome.loss.loss, outcome.replaced,
                             outcome.credible_pool});
    }
    log.epoch_loss.push_back(epoch_sum / static_cast<double>(order.size()));
  }
  return log;
}

TrainLog train_classifier(const LabeledDataset& ds, std::span<const std::size_t> indices,
                          const LabelMap& labels, Backbone& backbone, Classifier& cls,
                          const TrainConfig& cfg) {
  ClassificationObjective objective;
  return run_training(ds, indices, labels, backbone, cls, cfg, objective);
}

Matrix extract_features(const Backbone& backbone, const LabeledDataset& ds,
                        std::span<const std::size_t> indices) {
  require(backbone.input_dim() == ds.dim, ErrorCode::kInvalidArgument,
          "extract_features: backbone input width does not match dataset");
  if (indices.empty()) return Matrix(0, backbone.embed_dim());
  for (auto i : indices) {
    require(i < ds.size(), ErrorCode::kInvalidArgument, "extract_features: index out of range");
  }
  return backbone.forward(gather(ds, indices));
}

double classification_accuracy(const LabeledDataset& ds, std::span<const std::size_t> indices,
                               const LabelMap& labels, const Backbone& backbone,
                               const Classifier& cls) {
  if (indices.empty()) return 0.0;
  Matrix emb = extract_features(backbone, ds, indices);
  Matrix w = cls.weights;
  if (cls.kind == LossKind::kAngularMargin) {
    kernels::normalize_rows(emb);
    kernels::normalize_rows(w);
  }
  std::size_t correct = 0;
  for (std::size_t r = 0; r < indices.size(); ++r) {
    std::size_t best = 0;
    double best_score = dot(emb.row(r), w.row(0));
    for (std::size_t j = 1; j < w.rows(); ++j) {
      const double s = dot(emb.row(r), w.row(j));
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    if (labels.contains(ds.labels[indices[r]]) && labels.row_of(ds.labels[indices[r]]) == best) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

}  // namespace bctlab
