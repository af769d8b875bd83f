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

#include "bctlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bctlab/dataset.hpp"
#include "bctlab/error.hpp"
#include "bctlab/kernels.hpp"

namespace bctlab {

double similarity(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::kInvalidArgument, "similarity: length mismatch");
  const double na = norm2(a);
  const double nb = norm2(b);
  require(na > 0.0 && nb > 0.0, ErrorCode::kDegenerateInput, "similarity: zero-norm vector");
  return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::vector<double> make_template(std::span<const std::span<const double>> members) {
  require(!members.empty(), ErrorCode::kInvalidArgument, "make_template: no members");
  const std::size_t dim = members.front().size();
  std::vector<double> t(dim, 0.0);
  for (auto m : members) {
    require(m.size() == dim, ErrorCode::kInvalidArgument, "make_template: length mismatch");
    const double n = norm2(m);
    require(n > 0.0, ErrorCode::kDegenerateInput, "make_template: zero-norm member");
    for (std::size_t d = 0; d < dim; ++d) t[d] += m[d] / n;
  }
  const double n = norm2(t);
  // Averaging unit vectors cannot shrink below this unless they cancel.
  if (!(n > 1e-12)) fail(ErrorCode::kDegenerateTemplate, "make_template: members average to zero");
  for (double& v : t) v /= n;
  return t;
}

std::vector<double> make_template(const Matrix& features, std::span<const std::size_t> rows) {
  std::vector<std::span<const double>> members;
  for (auto r : rows) {
    require(r < features.rows(), ErrorCode::kInvalidArgument, "make_template: row out of range");
    members.push_back(features.row(r));
  }
  return make_template(members);
}

ThresholdPick pick_threshold(std::span<const double> positives, std::span<const double> negatives,
                             double rate) {
  require(!negatives.empty(), ErrorCode::kInvalidArgument, "threshold: no negative scores");
  require(rate >= 0.0 && rate <= 1.0, ErrorCode::kInvalidArgument, "threshold: rate must be in [0,1]");
  std::vector<double> neg(negatives.begin(), negatives.end());
  std::ranges::sort(neg, std::greater<>());
  const std::size_t allowed = floor_count(rate, neg.size());

  ThresholdPick pick;
  if (allowed >= neg.size()) {
    double lo = neg.back();
    for (double p : positives) lo = std::min(lo, p);
    pick.threshold = lo;
  } else {
    // Any threshold <= neg[allowed] accepts allowed+1 negatives.
    const double bar = neg[allowed];
    double best = std::numeric_limits<double>::infinity();
    for (double s : positives) {
      if (s > bar) best = std::min(best, s);
    }
    for (double s : neg) {
      if (s > bar) best = std::min(best, s);
    }
    pick.threshold = std::isinf(best) ? std::nextafter(bar, std::numeric_limits<double>::infinity()) : best;
  }
  pick.negatives_accepted = static_cast<std::size_t>(
      std::ranges::count_if(neg, [&](double s) { return s >= pick.threshold; }));
  return pick;
}

TarResult tar_at_far(std::span<const double> genuine, std::span<const double> impostor, double far) {
  require(!genuine.empty() && !impostor.empty(), ErrorCode::kInvalidArgument,
          "tar_at_far: empty score list");
  const ThresholdPick pick = pick_threshold(genuine, impostor, far);
  const auto accepted = std::ranges::count_if(genuine, [&](double s) { return s >= pick.threshold; });
  return {static_cast<double>(accepted) / static_cast<double>(genuine.size()), pick.threshold,
          static_cast<double>(pick.negatives_accepted) / static_cast<double>(impostor.size())};
}

IdentificationScores identify(const Gallery& gallery, const QuerySet& queries) {
  require(gallery.templates.rows() > 0 && gallery.templates.rows() == gallery.labels.size(),
          ErrorCode::kInvalidArgument, "identify: empty or inconsistent gallery");
  require(queries.templates.rows() == queries.labels.size() &&
              queries.labels.size() == queries.mated.size(),
          ErrorCode::kInvalidArgument, "identify: inconsistent query set");
  require(queries.templates.cols() == gallery.templates.cols(), ErrorCode::kInvalidArgument,
          "identify: template widths differ");
  std::vector<kernels::Top1> best(queries.templates.rows());
  kernels::top1(queries.templates, gallery.templates, best);
  IdentificationScores out;
  for (std::size_t q = 0; q < best.size(); ++q) {
    out.top_score.push_back(best[q].score);
    out.correct.push_back(gallery.labels[best[q].index] == queries.labels[q]);
    out.mated.push_back(queries.mated[q]);
  }
  return out;
}

TpirResult tpir_at_fpir(const IdentificationScores& scores, double fpir) {
  std::vector<double> mated;
  std::vector<double> unmated;
  for (std::size_t q = 0; q < scores.top_score.size(); ++q) {
    (scores.mated[q] ? mated : unmated).push_back(scores.top_score[q]);
  }
  require(!unmated.empty(), ErrorCode::kInvalidProtocol,
          "tpir_at_fpir: no out-of-gallery queries, threshold undefined");
  require(!mated.empty(), ErrorCode::kInvalidProtocol, "tpir_at_fpir: no in-gallery queries");
  const ThresholdPick pick = pick_threshold(mated, unmated, fpir);
  std::size_t hits = 0;
  for (std::size_t q = 0; q < scores.top_score.size(); ++q) {
    if (scores.mated[q] && scores.correct[q] && scores.top_score[q] >= pick.threshold) ++hits;
  }
  return {static_cast<double>(hits) / static_cast<double>(mated.size()), pick.threshold,
          static_cast<double>(pick.negatives_accepted) / static_cast<double>(unmated.size())};
}

TpirResult tpir_at_fpir(const Gallery& gallery, const QuerySet& queries, double fpir) {
  return tpir_at_fpir(identify(gallery, queries), fpir);
}

}  // namespace bctlab
