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

#include "bctlab/compatible.hpp"

#include <algorithm>

#include "bctlab/compat_losses.hpp"
#include "bctlab/error.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {
namespace {

constexpr std::uint64_t kMixStream = 0x4D4958;  // "MIX"

class MixObjective final : public BatchObjective {
 public:
  MixObjective(const OldFeatureCache& cache, double alpha, std::uint64_t seed)
      : cache_(cache), alpha_(alpha), seed_(seed) {}

  BatchOutcome evaluate(const Classifier& cls, const Matrix& emb, const Batch& batch) override {
    Rng stream(derive_seed(seed_, {kMixStream, batch.epoch, batch.index}));
    MixResult mix = mix_batch(emb, batch.samples, cache_, alpha_, stream);
    return {mixbct_loss(cls, mix.mixed, batch.targets, mix.replaced), mix.replaced.size(),
            mix.candidates};
  }

 private:
  const OldFeatureCache& cache_;
  double alpha_;
  std::uint64_t seed_;
};

class L2Objective final : public BatchObjective {
 public:
  L2Objective(const OldFeatureCache& cache, double lambda) : cache_(cache), lambda_(lambda) {}

  BatchOutcome evaluate(const Classifier& cls, const Matrix& emb, const Batch& batch) override {
    Matrix old(emb.rows(), emb.cols());
    for (std::size_t p = 0; p < batch.samples.size(); ++p) {
      const auto row = cache_.find(batch.samples[p]);
      require(row.has_value(), ErrorCode::kInvalidArgument,
              "l2bct: sample " + std::to_string(batch.samples[p]) + " has no cached old feature");
      std::ranges::copy(cache_.features.row(*row), old.row(p).begin());
    }
    return {l2bct_loss(cls, emb, old, batch.targets, lambda_), 0, 0};
  }

 private:
  const OldFeatureCache& cache_;
  double lambda_;
};

class ProtoObjective final : public BatchObjective {
 public:
  ProtoObjective(const OldFeatureCache& cache, double weight)
      : cache_(cache), protos_(compute_prototypes(cache, true)), weight_(weight) {}

  BatchOutcome evaluate(const Classifier& cls, const Matrix& emb, const Batch& batch) override {
    labels_.clear();
    for (auto i : batch.samples) {
      const auto row = cache_.find(i);
      require(row.has_value(), ErrorCode::kInvalidArgument,
              "protobct: sample " + std::to_string(i) + " has no cached old feature");
      labels_.push_back(cache_.labels[*row]);
    }
    return {proto_bct_loss(cls, emb, labels_, batch.targets, protos_, weight_), 0, 0};
  }

 private:
  const OldFeatureCache& cache_;
  PrototypeSet protos_;
  double weight_;
  std::vector<std::uint32_t> labels_;
};

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::kNoCompat: return "none";
    case Method::kMixBct: return "mixbct";
    case Method::kL2Bct: return "l2bct";
    case Method::kProtoBct: return "protobct";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  for (auto m : {Method::kNoCompat, Method::kMixBct, Method::kL2Bct, Method::kProtoBct}) {
    if (s == to_string(m)) return m;
  }
  fail(ErrorCode::kInvalidArgument, "unknown method: " + s);
}

void MethodConfig::validate() const {
  require(alpha >= 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument, "method: alpha must be in [0,1)");
  require(exclusion_fraction >= 0.0 && exclusion_fraction < 1.0, ErrorCode::kInvalidArgument,
          "method: exclusion fraction must be in [0,1)");
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "method: lambda must be >= 0");
  require(proto_weight >= 0.0, ErrorCode::kInvalidArgument, "method: proto weight must be >= 0");
}

OldFeatureCache prepare_cache(const Backbone& old_backbone, const LabeledDataset& ds,
                              std::span<const std::size_t> new_train, const MethodConfig& method) {
  method.validate();
  OldFeatureCache cache = build_cache(old_backbone, ds, new_train);
  if (method.method == Method::kMixBct && method.denoise) {
    cache = denoise(std::move(cache), method.exclusion_fraction);
  }
  return cache;
}

TrainLog train_compatible(const LabeledDataset& ds, std::span<const std::size_t> new_train,
                          const LabelMap& labels, const OldFeatureCache& cache,
                          Backbone& new_backbone, Classifier& new_cls,
                          const MethodConfig& method, const TrainConfig& cfg) {
  method.validate();
  if (method.uses_cache()) {
    require(cache.embed_dim == new_backbone.embed_dim(), ErrorCode::kInvalidArgument,
            "train_compatible: old and new embedding widths differ");
    for (auto i : new_train) {
      require(cache.find(i).has_value(), ErrorCode::kInvalidArgument,
              "train_compatible: cache does not cover sample " + std::to_string(i));
    }
  }
  switch (method.method) {
    case Method::kNoCompat: {
      ClassificationObjective objective;
      return run_training(ds, new_train, labels, new_backbone, new_cls, cfg, objective);
    }
    case Method::kMixBct: {
      MixObjective objective(cache, method.alpha, cfg.seed);
      return run_training(ds, new_train, labels, new_backbone, new_cls, cfg, objective);
    }
    case Method::kL2Bct: {
      L2Objective objective(cache, method.lambda);
      return run_training(ds, new_train, labels, new_backbone, new_cls, cfg, objective);
    }
    case Method::kProtoBct: {
      ProtoObjective objective(cache, method.proto_weight);
      return run_training(ds, new_train, labels, new_backbone, new_cls, cfg, objective);
    }
  }
  fail(ErrorCode::kInvalidArgument, "train_compatible: unknown method");
}

}  // namespace bctlab
