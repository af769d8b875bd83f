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
#include <string>

#include "bctlab/matrix.hpp"

namespace bctlab {

enum class LossKind { kPlainSoftmax, kAngularMargin };

const char* to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& s);

/// Cosine clamp applied before acos in the angular-margin loss.
inline constexpr double kCosineClamp = 1e-7;

struct Classifier {
  Matrix weights;  // num_classes x embed_dim, no bias
  LossKind kind = LossKind::kPlainSoftmax;
  double scale = 30.0;   // angular only
  double margin = 0.3;   // angular only

  static Classifier random(std::size_t num_classes, std::size_t embed_dim, LossKind kind,
                           std::uint64_t seed, double scale = 30.0, double margin = 0.3);

  std::size_t num_classes() const { return weights.rows(); }
  bool operator==(const Classifier&) const = default;
};

/// Mean loss over a batch with gradients for the embeddings and for the
/// classifier weights.
struct LossGrad {
  double loss = 0.0;
  Matrix grad_emb;
  Matrix grad_weights;
};

/// Mean softmax cross-entropy of `logits` against `targets`. When `grad` is
/// given it receives dLoss/dlogits (already divided by the batch size).
double softmax_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> targets,
                             Matrix* grad);

/// Plain softmax over emb * W^T. `targets` are classifier rows.
LossGrad loss_cross_entropy(const Classifier& cls, const Matrix& emb,
                            std::span<const std::uint32_t> targets);

/// Additive angular margin: the target logit is s*cos(theta_y + m), the others
/// s*cos(theta_j), with theta taken between unit embeddings and unit weight
/// rows. Cosines are clamped to [-1+1e-7, 1-1e-7] before acos.
LossGrad loss_arcface(const Classifier& cls, const Matrix& emb,
                      std::span<const std::uint32_t> targets);

/// Dispatches on `cls.kind`.
LossGrad classification_loss(const Classifier& cls, const Matrix& emb,
                             std::span<const std::uint32_t> targets);

/// Gradient of x/||x|| pulled back to x: (g - (g.u)u) / ||x||.
void normalize_backward(std::span<const double> unit, double norm, std::span<const double> grad_unit,
                        std::span<double> grad_out);

}  // namespace bctlab
