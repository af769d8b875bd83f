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

#include "bctlab/compat_losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bctlab/dataset.hpp"
#include "bctlab/error.hpp"
#include "bctlab/kernels.hpp"

namespace bctlab {

MixResult mix_batch(const Matrix& new_emb, std::span<const std::size_t> batch_indices,
                    const OldFeatureCache& cache, double alpha, Rng& stream) {
  require(alpha >= 0.0 && alpha < 1.0, ErrorCode::kInvalidArgument,
          "mix_batch: alpha must be in [0,1)");
  require(new_emb.rows() == batch_indices.size(), ErrorCode::kInvalidArgument,
          "mix_batch: embedding rows and batch indices differ");

  MixResult out;
  out.mixed = new_emb;
  out.target = floor_count(alpha, batch_indices.size());

  std::vector<std::size_t> candidates;         // batch positions
  std::vector<std::size_t> cache_rows;         // matching cache rows
  for (std::size_t p = 0; p < batch_indices.size(); ++p) {
    const auto row = cache.find(batch_indices[p]);
    if (row && cache.credible[*row]) {
      candidates.push_back(p);
      cache_rows.push_back(*row);
    }
  }
  out.candidates = candidates.size();
  const std::size_t take = std::min(out.target, candidates.size());
  if (take == 0) return out;
  require(cache.embed_dim == new_emb.cols(), ErrorCode::kInvalidArgument,
          "mix_batch: old and new embedding widths differ");

  // Partial Fisher-Yates over candidate slots.
  std::vector<std::size_t> slots(candidates.size());
  std::iota(slots.begin(), slots.end(), std::size_t{0});
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t j = k + static_cast<std::size_t>(stream.below(slots.size() - k));
    std::swap(slots[k], slots[j]);
  }
  slots.resize(take);
  for (auto s : slots) {
    std::ranges::copy(cache.features.row(cache_rows[s]), out.mixed.row(candidates[s]).begin());
    out.replaced.push_back(candidates[s]);
  }
  std::ranges::sort(out.replaced);
  return out;
}

LossGrad mixbct_loss(const Classifier& cls, const Matrix& mixed,
                     std::span<const std::uint32_t> targets, std::span<const std::size_t> replaced) {
  LossGrad out = classification_loss(cls, mixed, targets);
  for (auto p : replaced) {
    require(p < mixed.rows(), ErrorCode::kInvalidArgument, "mixbct_loss: replaced position out of range");
    std::ranges::fill(out.grad_emb.row(p), 0.0);
  }
  return out;
}

LossGrad l2bct_loss(const Classifier& cls, const Matrix& new_emb, const Matrix& old_emb,
                    std::span<const std::uint32_t> targets, double lambda) {
  require(lambda >= 0.0, ErrorCode::kInvalidArgument, "l2bct_loss: lambda must be >= 0");
  require(old_emb.rows() == new_emb.rows() && old_emb.cols() == new_emb.cols(),
          ErrorCode::kInvalidArgument, "l2bct_loss: old features do not align with the batch");
  LossGrad out = classification_loss(cls, new_emb, targets);
  const double inv_b = 1.0 / static_cast<double>(new_emb.rows());
  double reg = 0.0;
  for (std::size_t i = 0; i < new_emb.rows(); ++i) {
    const auto n = new_emb.row(i);
    const auto o = old_emb.row(i);
    double d2 = 0.0;
    for (std::size_t k = 0; k < n.size(); ++k) d2 += (n[k] - o[k]) * (n[k] - o[k]);
    const double dist = std::sqrt(d2);
    reg += dist;
    if (dist > 0.0) {
      auto g = out.grad_emb.row(i);
      for (std::size_t k = 0; k < n.size(); ++k) g[k] += lambda * inv_b * (n[k] - o[k]) / dist;
    }
  }
  out.loss += lambda * reg * inv_b;
  return out;
}

LossGrad proto_bct_loss(const Classifier& cls, const Matrix& new_emb,
                        std::span<const std::uint32_t> labels,
                        std::span<const std::uint32_t> targets, const PrototypeSet& protos,
                        double weight) {
  require(weight >= 0.0, ErrorCode::kInvalidArgument, "proto_bct_loss: weight must be >= 0");
  require(protos.size() > 0, ErrorCode::kInvalidArgument, "proto_bct_loss: empty prototype set");
  require(labels.size() == new_emb.rows(), ErrorCode::kInvalidArgument,
          "proto_bct_loss: labels do not align with the batch");
  require(protos.centers.cols() == new_emb.cols(), ErrorCode::kInvalidArgument,
          "proto_bct_loss: prototype width differs from embedding");
  LossGrad out = classification_loss(cls, new_emb, targets);
  if (weight == 0.0) return out;

  std::vector<std::size_t> rows;
  std::vector<std::uint32_t> proto_targets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (auto p = protos.row_of(labels[i])) {
      rows.push_back(i);
      proto_targets.push_back(static_cast<std::uint32_t>(*p));
    }
  }
  if (rows.empty()) return out;

  const double s = cls.kind == LossKind::kAngularMargin ? cls.scale : 1.0;
  Matrix u(rows.size(), new_emb.cols());
  std::vector<double> norms(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto e = new_emb.row(rows[k]);
    norms[k] = norm2(e);
    if (!(norms[k] > 0.0)) {
      fail(ErrorCode::kDegenerateInput, "proto_bct_loss: zero-norm embedding row");
    }
    auto ur = u.row(k);
    for (std::size_t d = 0; d < e.size(); ++d) ur[d] = e[d] / norms[k];
  }
  Matrix logits;
  kernels::gemm_abt(u, protos.centers, logits);
  for (double& z : logits.values()) z *= s;
  Matrix g;
  const double influence = softmax_cross_entropy(logits, proto_targets, &g);
  out.loss += weight * influence;

  Matrix grad_u;
  kernels::gemm_ab(g, protos.centers, grad_u);
  std::vector<double> grad_e(new_emb.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto gu = grad_u.row(k);
    for (double& v : gu) v *= s;
    normalize_backward(u.row(k), norms[k], gu, grad_e);
    auto dst = out.grad_emb.row(rows[k]);
    for (std::size_t d = 0; d < dst.size(); ++d) dst[d] += weight * grad_e[d];
  }
  return out;
}

}  // namespace bctlab
