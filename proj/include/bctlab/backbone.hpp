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

#include "bctlab/matrix.hpp"

namespace bctlab {

struct DenseLayer {
  Matrix weight;             // out x in
  std::vector<double> bias;  // out
  bool operator==(const DenseLayer&) const = default;
};

/// Parameter gradients, laid out like `Backbone::parameters()`.
struct BackboneGradients {
  std::vector<Matrix> weight;
  std::vector<std::vector<double>> bias;

  std::vector<std::span<const double>> spans() const;
};

/// Activations kept by a training forward pass for backpropagation.
struct ForwardTape {
  std::vector<Matrix> inputs;  // input of every layer
  std::vector<Matrix> pre;     // pre-activation of every layer
};

/// MLP embedding network: affine layers with ReLU between them and a linear
/// last layer whose width is the embedding dimension.
class Backbone {
 public:
  Backbone() = default;
  explicit Backbone(std::vector<DenseLayer> layers);

  /// He-initialized network with the given widths [input, hidden..., embed].
  static Backbone random(std::span<const std::size_t> widths, std::uint64_t seed);

  std::size_t input_dim() const;
  std::size_t embed_dim() const;
  std::size_t num_layers() const { return layers_.size(); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<std::size_t> widths() const;

  Matrix forward(const Matrix& batch) const;
  Matrix forward(const Matrix& batch, ForwardTape& tape) const;
  BackboneGradients backward(const ForwardTape& tape, const Matrix& grad_out) const;

  /// Weight then bias of every layer, in layer order.
  std::vector<std::span<double>> parameters();
  bool all_finite() const;

  bool operator==(const Backbone&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace bctlab
