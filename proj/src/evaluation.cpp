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

#include "bctlab/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "bctlab/error.hpp"
#include "bctlab/kernels.hpp"
#include "bctlab/rng.hpp"
#include "bctlab/training.hpp"

namespace bctlab {
namespace {

constexpr std::size_t kAuditChunk = 1024;

bool resolvable(double rate, std::size_t negatives) {
  return rate * static_cast<double>(negatives) >= 1.0 - 1e-9;
}

std::vector<std::pair<std::size_t, std::size_t>> pair_list(const EvalProtocol& protocol) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(protocol.pairs.size());
  for (const auto& p : protocol.pairs) pairs.emplace_back(p.a, p.b);
  return pairs;
}

void split_scores(const EvalProtocol& protocol, std::span<const double> scores,
                  std::vector<double>& genuine, std::vector<double>& impostor) {
  for (std::size_t p = 0; p < scores.size(); ++p) {
    (protocol.pairs[p].genuine ? genuine : impostor).push_back(scores[p]);
  }
}

double headline_avg(const EvalReport& r, double point) {
  return (r.cross_test.at(EvalTask::kVerification, point).value +
          r.self_test.at(EvalTask::kVerification, point).value +
          r.cross_test.at(EvalTask::kIdentification, point).value +
          r.self_test.at(EvalTask::kIdentification, point).value) /
         4.0;
}

}  // namespace

const char* to_string(EvalTask task) {
  return task == EvalTask::kVerification ? "verification" : "identification";
}

const OperatingPoint& ProtocolResults::at(EvalTask task, double point) const {
  const auto& list = task == EvalTask::kVerification ? verification : identification;
  for (const auto& op : list) {
    if (op.requested == point) return op;
  }
  fail(ErrorCode::kInvalidArgument, std::string("no ") + to_string(task) + " result at " +
                                        std::to_string(point));
}

Matrix embed_eval_set(const Backbone& backbone, const LabeledDataset& eval_ds) {
  std::vector<std::size_t> all(eval_ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Matrix feats = extract_features(backbone, eval_ds, all);
  kernels::normalize_rows(feats);
  return feats;
}

ProtocolResults evaluate_pairing(const Matrix& gallery_feats, const Matrix& query_feats,
                                 const EvalProtocol& protocol, const LabeledDataset& eval_ds,
                                 const EvalSettings& settings) {
  require(gallery_feats.cols() == query_feats.cols(), ErrorCode::kInvalidArgument,
          "evaluate: embedding widths differ between the two sides");
  require(gallery_feats.rows() == eval_ds.size() && query_feats.rows() == eval_ds.size(),
          ErrorCode::kInvalidArgument, "evaluate: features do not cover the eval set");
  ProtocolResults out;

  const auto pairs = pair_list(protocol);
  std::vector<double> scores(pairs.size());
  kernels::pair_dots(gallery_feats, query_feats, pairs, scores);
  std::vector<double> genuine;
  std::vector<double> impostor;
  split_scores(protocol, scores, genuine, impostor);
  for (double far : settings.far_list) {
    const TarResult r = tar_at_far(genuine, impostor, far);
    out.verification.push_back({far, r.tar, r.achieved_far, r.threshold, resolvable(far, impostor.size())});
  }

  Gallery gallery;
  gallery.templates = Matrix(protocol.gallery.size(), gallery_feats.cols());
  for (std::size_t g = 0; g < protocol.gallery.size(); ++g) {
    const auto t = make_template(gallery_feats, protocol.gallery[g].members);
    std::ranges::copy(t, gallery.templates.row(g).begin());
    gallery.labels.push_back(protocol.gallery[g].label);
  }
  QuerySet queries;
  queries.templates = Matrix(protocol.queries.size(), query_feats.cols());
  std::size_t unmated = 0;
  for (std::size_t q = 0; q < protocol.queries.size(); ++q) {
    const auto& query = protocol.queries[q];
    std::ranges::copy(query_feats.row(query.index), queries.templates.row(q).begin());
    queries.labels.push_back(eval_ds.labels[query.index]);
    queries.mated.push_back(query.mated);
    if (!query.mated) ++unmated;
  }
  const IdentificationScores id = identify(gallery, queries);
  for (double fpir : settings.fpir_list) {
    const TpirResult r = tpir_at_fpir(id, fpir);
    out.identification.push_back({fpir, r.tpir, r.achieved_fpir, r.threshold, resolvable(fpir, unmated)});
  }
  return out;
}

EvalReport run_eval(const Backbone& old_backbone, const Backbone& new_backbone,
                    const EvalProtocol& protocol, const LabeledDataset& eval_ds,
                    const EvalSettings& settings) {
  require(old_backbone.embed_dim() == new_backbone.embed_dim(), ErrorCode::kInvalidArgument,
          "run_eval: old and new embedding widths differ");
  const Matrix old_feats = embed_eval_set(old_backbone, eval_ds);
  const Matrix new_feats = embed_eval_set(new_backbone, eval_ds);
  EvalReport report;
  report.self_test = evaluate_pairing(new_feats, new_feats, protocol, eval_ds, settings);
  report.cross_test = evaluate_pairing(old_feats, new_feats, protocol, eval_ds, settings);
  report.avg = headline_avg(report, settings.headline);
  return report;
}

EvalReport run_lower_bound(const Backbone& old_backbone, const EvalProtocol& protocol,
                           const LabeledDataset& eval_ds, const EvalSettings& settings) {
  const Matrix old_feats = embed_eval_set(old_backbone, eval_ds);
  EvalReport report;
  report.self_test = evaluate_pairing(old_feats, old_feats, protocol, eval_ds, settings);
  report.cross_test = report.self_test;
  report.avg = headline_avg(report, settings.headline);
  return report;
}

bool compatibility_holds(const ProtocolResults& cross, const ProtocolResults& old_self,
                         EvalTask task, double point) {
  return cross.at(task, point).value > old_self.at(task, point).value;
}

ConstraintRates audit_constraints(const Matrix& new_feats, const Matrix& old_feats,
                                  std::span<const std::uint32_t> labels, std::size_t trials,
                                  std::uint64_t seed) {
  require(trials > 0, ErrorCode::kInvalidArgument, "audit: trials must be positive");
  require(new_feats.rows() == labels.size() && old_feats.rows() == labels.size() &&
              new_feats.cols() == old_feats.cols(),
          ErrorCode::kInvalidArgument, "audit: feature sets are not aligned");

  std::map<std::uint32_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  require(by_class.size() >= 2, ErrorCode::kInvalidArgument, "audit: need at least 2 classes");
  std::vector<std::size_t> anchors;
  for (const auto& [label, members] : by_class) {
    if (members.size() >= 2) anchors.insert(anchors.end(), members.begin(), members.end());
  }
  require(!anchors.empty(), ErrorCode::kInvalidArgument, "audit: no class has 2 samples");

  Matrix nu = new_feats;
  Matrix ou = old_feats;
  kernels::normalize_rows(nu);
  kernels::normalize_rows(ou);

  const std::size_t chunks = (trials + kAuditChunk - 1) / kAuditChunk;
  std::vector<std::array<std::size_t, 4>> counts(chunks, {0, 0, 0, 0});
  const auto n_chunks = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    const auto chunk = static_cast<std::size_t>(c);
    Rng rng(derive_seed(seed, {chunk}));
    const std::size_t begin = chunk * kAuditChunk;
    const std::size_t end = std::min(trials, begin + kAuditChunk);
    auto& cnt = counts[chunk];
    for (std::size_t t = begin; t < end; ++t) {
      const std::size_t a = anchors[rng.below(anchors.size())];
      const auto& own = by_class.at(labels[a]);
      std::size_t p = a;
      while (p == a) p = own[rng.below(own.size())];
      std::size_t n = a;
      while (labels[n] == labels[a]) n = rng.below(labels.size());

      const auto anchor = nu.row(a);
      const double new_pos = dot(anchor, nu.row(p));
      const double old_pos = dot(anchor, ou.row(p));
      const double new_neg = dot(anchor, nu.row(n));
      const double old_neg = dot(anchor, ou.row(n));
      cnt[0] += new_pos > new_neg;
      cnt[1] += new_pos > old_neg;
      cnt[2] += old_pos > new_neg;
      cnt[3] += old_pos > old_neg;
    }
  }
  std::array<std::size_t, 4> total{0, 0, 0, 0};
  for (const auto& c : counts) {
    for (std::size_t k = 0; k < 4; ++k) total[k] += c[k];
  }
  const auto denom = static_cast<double>(trials);
  return {static_cast<double>(total[0]) / denom, static_cast<double>(total[1]) / denom,
          static_cast<double>(total[2]) / denom, static_cast<double>(total[3]) / denom, trials};
}

double permutation_chance_tar(const Matrix& gallery_feats, const Matrix& query_feats,
                              const EvalProtocol& protocol, double far, std::uint64_t seed) {
  const auto pairs = pair_list(protocol);
  std::vector<double> scores(pairs.size());
  kernels::pair_dots(gallery_feats, query_feats, pairs, scores);
  std::vector<bool> flags;
  for (const auto& p : protocol.pairs) flags.push_back(p.genuine);
  Rng rng(seed);
  for (std::size_t i = flags.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    const bool tmp = flags[i - 1];
    flags[i - 1] = flags[j];
    flags[j] = tmp;
  }
  std::vector<double> genuine;
  std::vector<double> impostor;
  for (std::size_t p = 0; p < scores.size(); ++p) (flags[p] ? genuine : impostor).push_back(scores[p]);
  return tar_at_far(genuine, impostor, far).tar;
}

}  // namespace bctlab
