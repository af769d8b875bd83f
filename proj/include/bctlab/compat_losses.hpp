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

#include "bctlab/classifier.hpp"
#include "bctlab/feature_cache.hpp"
#include "bctlab/matrix.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {

struct MixResult {
  Matrix mixed;
  std::vector<std::size_t> replaced;  // ascending batch positions
  std::size_t target = 0;             // floor(alpha * B)
  std::size_t candidates = 0;         // positions with a credible old feature
};

/// Substitutes min(floor(alpha * B), candidates) new embeddings, chosen
/// uniformly without replacement among positions whose sample has a credible
/// cached feature, with the cached old feature.
MixResult mix_batch(const Matrix& new_emb, std::span<const std::size_t> batch_indices,
                    const OldFeatureCache& cache, double alpha, Rng& stream);

/// Classification loss on the mixed batch. Replaced rows are constants: their
/// embedding gradient is zeroed, but they still train the classifier.
LossGrad mixbct_loss(const Classifier& cls, const Matrix& mixed,
                     std::span<const std::uint32_t> targets, std::span<const std::size_t> replaced);

/// Classification loss plus lambda times the batch mean of ||new_i - old_i||_2.
LossGrad l2bct_loss(const Classifier& cls, const Matrix& new_emb, const Matrix& old_emb,
                    std::span<const std::uint32_t> targets, double lambda);

/// Classification loss plus `weight` times the mean cross-entropy of each
/// new embedding against cosine logits to the old prototypes (scaled by the
/// classifier's s when it is angular). Rows whose class has no prototype are
/// skipped by the influence term. `labels` are dataset labels.
LossGrad proto_bct_loss(const Classifier& cls, const Matrix& new_emb,
                        std::span<const std::uint32_t> labels,
                        std::span<const std::uint32_t> targets, const PrototypeSet& protos,
                        double weight);

}  // namespace bctlab
