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

#include "bctlab/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "bctlab/error.hpp"
#include "bctlab/kernels.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {
namespace {

void check_batch(const Classifier& cls, const Matrix& emb, std::span<const std::uint32_t> targets) {
  require(emb.rows() > 0, ErrorCode::kInvalidArgument, "loss: empty batch");
  require(emb.rows() == targets.size(), ErrorCode::kInvalidArgument,
          "loss: embedding rows and targets differ");
  require(emb.cols() == cls.weights.cols(), ErrorCode::kInvalidArgument,
          "loss: embedding width does not match classifier");
  for (auto t : targets) {
    require(t < cls.num_classes(), ErrorCode::kInvalidArgument, "loss: target out of range");
  }
}

// Unit rows plus their norms; zero rows are a degenerate input.
Matrix unit_rows(const Matrix& m, std::vector<double>& norms, const char* what) {
  Matrix u = m;
  norms.resize(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    norms[i] = norm2(m.row(i));
    if (!(norms[i] > 0.0)) {
      fail(ErrorCode::kDegenerateInput, std::string(what) + " row " + std::to_string(i) + " has zero norm");
    }
    for (double& v : u.row(i)) v /= norms[i];
  }
  return u;
}

}  // namespace

const char* to_string(LossKind kind) {
  return kind == LossKind::kPlainSoftmax ? "softmax" : "arcface";
}

LossKind parse_loss_kind(const std::string& s) {
  if (s == "softmax" || s == "ce") return LossKind::kPlainSoftmax;
  if (s == "arcface" || s == "angular") return LossKind::kAngularMargin;
  fail(ErrorCode::kInvalidArgument, "unknown loss kind: " + s);
}

Classifier Classifier::random(std::size_t num_classes, std::size_t embed_dim, LossKind kind,
                              std::uint64_t seed, double scale, double margin) {
  require(num_classes > 0 && embed_dim > 0, ErrorCode::kInvalidArgument, "classifier: empty shape");
  require(scale > 0.0 && margin >= 0.0, ErrorCode::kInvalidArgument,
          "classifier: need scale > 0 and margin >= 0");
  Classifier cls;
  cls.weights = Matrix(num_classes, embed_dim);
  cls.kind = kind;
  if (kind == LossKind::kAngularMargin) {  // plain heads keep the defaults, as a reload would
    cls.scale = scale;
    cls.margin = margin;
  }
  Rng rng(seed);
  const double std = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (double& w : cls.weights.values()) w = std * rng.normal();
  return cls;
}

double softmax_cross_entropy(const Matrix& logits, std::span<const std::uint32_t> targets,
                             Matrix* grad) {
  require(logits.rows() > 0 && logits.rows() == targets.size(), ErrorCode::kInvalidArgument,
          "softmax_cross_entropy: empty batch or target mismatch");
  const double inv_b = 1.0 / static_cast<double>(logits.rows());
  if (grad) *grad = Matrix(logits.rows(), logits.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto z = logits.row(i);
    const double mx = *std::ranges::max_element(z);
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double log_z = mx + std::log(sum);
    total += log_z - z[targets[i]];
    if (grad) {
      auto g = grad->row(i);
      for (std::size_t j = 0; j < z.size(); ++j) g[j] = std::exp(z[j] - log_z) * inv_b;
      g[targets[i]] -= inv_b;
    }
  }
  return total * inv_b;
}

LossGrad loss_cross_entropy(const Classifier& cls, const Matrix& emb,
                            std::span<const std::uint32_t> targets) {
  check_batch(cls, emb, targets);
  Matrix logits;
  kernels::gemm_abt(emb, cls.weights, logits);
  Matrix g;
  LossGrad out;
  out.loss = softmax_cross_entropy(logits, targets, &g);
  kernels::gemm_ab(g, cls.weights, out.grad_emb);
  kernels::gemm_atb(g, emb, out.grad_weights);
  return out;
}

void normalize_backward(std::span<const double> unit, double norm, std::span<const double> grad_unit,
                        std::span<double> grad_out) {
  const double proj = dot(grad_unit, unit);
  for (std::size_t k = 0; k < unit.size(); ++k) grad_out[k] = (grad_unit[k] - proj * unit[k]) / norm;
}

LossGrad loss_arcface(const Classifier& cls, const Matrix& emb,
                      std::span<const std::uint32_t> targets) {
  check_batch(cls, emb, targets);
  std::vector<double> emb_norm;
  std::vector<double> w_norm;
  const Matrix u = unit_rows(emb, emb_norm, "embedding");
  const Matrix v = unit_rows(cls.weights, w_norm, "classifier weight");

  Matrix cosine;
  kernels::gemm_abt(u, v, cosine);

  const double lo = -1.0 + kCosineClamp;
  const double hi = 1.0 - kCosineClamp;
  const double s = cls.scale;
  const double m = cls.margin;

  Matrix logits(cosine.rows(), cosine.cols());
  // dlogit/dcosine for every entry.
  Matrix dlogit(cosine.rows(), cosine.cols());
  for (std::size_t i = 0; i < cosine.rows(); ++i) {
    for (std::size_t j = 0; j < cosine.cols(); ++j) {
      const double c = cosine(i, j);
      const bool clamped = c < lo || c > hi;
      const double cc = std::clamp(c, lo, hi);
      if (j == targets[i]) {
        const double theta = std::acos(cc);
        logits(i, j) = s * std::cos(theta + m);
        dlogit(i, j) = clamped ? 0.0 : s * std::sin(theta + m) / std::sin(theta);
      } else {
        logits(i, j) = s * cc;
        dlogit(i, j) = clamped ? 0.0 : s;
      }
    }
  }

  Matrix g;
  LossGrad out;
  out.loss = softmax_cross_entropy(logits, targets, &g);
  for (std::size_t k = 0; k < g.size(); ++k) g.values()[k] *= dlogit.values()[k];

  Matrix grad_u;
  Matrix grad_v;
  kernels::gemm_ab(g, v, grad_u);
  kernels::gemm_atb(g, u, grad_v);

  out.grad_emb = Matrix(emb.rows(), emb.cols());
  for (std::size_t i = 0; i < emb.rows(); ++i) {
    normalize_backward(u.row(i), emb_norm[i], grad_u.row(i), out.grad_emb.row(i));
  }
  out.grad_weights = Matrix(cls.weights.rows(), cls.weights.cols());
  for (std::size_t j = 0; j < cls.weights.rows(); ++j) {
    normalize_backward(v.row(j), w_norm[j], grad_v.row(j), out.grad_weights.row(j));
  }
  return out;
}

LossGrad classification_loss(const Classifier& cls, const Matrix& emb,
                             std::span<const std::uint32_t> targets) {
  return cls.kind == LossKind::kPlainSoftmax ? loss_cross_entropy(cls, emb, targets)
                                             : loss_arcface(cls, emb, targets);
}

}  // namespace bctlab
