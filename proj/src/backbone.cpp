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

#include "bctlab/backbone.hpp"

#include <cmath>

#include "bctlab/error.hpp"
#include "bctlab/kernels.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {

std::vector<std::span<const double>> BackboneGradients::spans() const {
  std::vector<std::span<const double>> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    out.push_back(weight[l].values());
    out.push_back(bias[l]);
  }
  return out;
}

Backbone::Backbone(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  require(!layers_.empty(), ErrorCode::kInvalidArgument, "backbone: no layers");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    require(layer.weight.rows() > 0 && layer.weight.cols() > 0 &&
                layer.bias.size() == layer.weight.rows(),
            ErrorCode::kInvalidArgument, "backbone: malformed layer " + std::to_string(l));
    if (l > 0) {
      require(layer.weight.cols() == layers_[l - 1].weight.rows(), ErrorCode::kInvalidArgument,
              "backbone: layer shapes do not chain at layer " + std::to_string(l));
    }
  }
}

Backbone Backbone::random(std::span<const std::size_t> widths, std::uint64_t seed) {
  require(widths.size() >= 2, ErrorCode::kInvalidArgument, "backbone: need input and embed widths");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::size_t in = widths[l];
    const std::size_t out = widths[l + 1];
    require(in > 0 && out > 0, ErrorCode::kInvalidArgument, "backbone: zero width");
    const bool last = l + 2 == widths.size();
    const double std = std::sqrt((last ? 1.0 : 2.0) / static_cast<double>(in));
    DenseLayer layer{Matrix(out, in), std::vector<double>(out, 0.0)};
    for (double& w : layer.weight.values()) w = std * rng.normal();
    layers.push_back(std::move(layer));
  }
  return Backbone(std::move(layers));
}

std::size_t Backbone::input_dim() const { return layers_.empty() ? 0 : layers_.front().weight.cols(); }
std::size_t Backbone::embed_dim() const { return layers_.empty() ? 0 : layers_.back().weight.rows(); }

std::vector<std::size_t> Backbone::widths() const {
  std::vector<std::size_t> w;
  if (layers_.empty()) return w;
  w.push_back(input_dim());
  for (const auto& layer : layers_) w.push_back(layer.weight.rows());
  return w;
}

Matrix Backbone::forward(const Matrix& batch) const {
  ForwardTape tape;
  return forward(batch, tape);
}

Matrix Backbone::forward(const Matrix& batch, ForwardTape& tape) const {
  require(!layers_.empty(), ErrorCode::kInvalidArgument, "backbone: no layers");
  require(batch.cols() == input_dim(), ErrorCode::kInvalidArgument,
          "forward: batch width " + std::to_string(batch.cols()) + " != input dim " +
              std::to_string(input_dim()));
  tape.inputs.clear();
  tape.pre.clear();
  Matrix h = batch;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    Matrix z;
    kernels::gemm_abt(h, layer.weight, z);
    for (std::size_t i = 0; i < z.rows(); ++i) {
      auto r = z.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) r[j] += layer.bias[j];
    }
    tape.inputs.push_back(std::move(h));
    if (l + 1 == layers_.size()) {
      tape.pre.push_back(z);
      return z;
    }
    h = z;
    for (double& v : h.values()) v = v > 0.0 ? v : 0.0;
    tape.pre.push_back(std::move(z));
  }
  return h;  // unreachable
}

BackboneGradients Backbone::backward(const ForwardTape& tape, const Matrix& grad_out) const {
  require(tape.inputs.size() == layers_.size(), ErrorCode::kInvalidArgument,
          "backward: tape does not match network");
  require(grad_out.rows() == tape.inputs.front().rows() && grad_out.cols() == embed_dim(),
          ErrorCode::kInvalidArgument, "backward: gradient shape mismatch");
  BackboneGradients grads;
  grads.weight.resize(layers_.size());
  grads.bias.resize(layers_.size());
  Matrix g = grad_out;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    kernels::gemm_atb(g, tape.inputs[l], grads.weight[l]);
    auto& db = grads.bias[l];
    db.assign(layer.bias.size(), 0.0);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto r = g.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
    }
    if (l == 0) break;
    Matrix gh;
    kernels::gemm_ab(g, layer.weight, gh);
    const Matrix& pre = tape.pre[l - 1];
    auto gv = gh.values();
    auto pv = pre.values();
    for (std::size_t k = 0; k < gv.size(); ++k) {
      if (!(pv[k] > 0.0)) gv[k] = 0.0;
    }
    g = std::move(gh);
  }
  return grads;
}

std::vector<std::span<double>> Backbone::parameters() {
  std::vector<std::span<double>> out;
  for (auto& layer : layers_) {
    out.push_back(layer.weight.values());
    out.push_back(layer.bias);
  }
  return out;
}

bool Backbone::all_finite() const {
  for (const auto& layer : layers_) {
    for (double v : layer.weight.values()) {
      if (!std::isfinite(v)) return false;
    }
    for (double v : layer.bias) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace bctlab
