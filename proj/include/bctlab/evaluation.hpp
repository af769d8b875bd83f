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
#include <vector>

#include "bctlab/backbone.hpp"
#include "bctlab/dataset.hpp"
#include "bctlab/matrix.hpp"
#include "bctlab/metrics.hpp"

namespace bctlab {

enum class EvalTask { kVerification, kIdentification };

const char* to_string(EvalTask task);

struct OperatingPoint {
  double requested = 0.0;
  double value = 0.0;     // TAR or TPIR
  double achieved = 0.0;  // FAR or FPIR actually realized
  double threshold = 0.0;
  bool supported = true;  // false when too few negatives to resolve `requested`
  bool operator==(const OperatingPoint&) const = default;
};

struct ProtocolResults {
  std::vector<OperatingPoint> verification;    // TAR@FAR, in request order
  std::vector<OperatingPoint> identification;  // TPIR@FPIR, in request order

  /// Throws invalid-argument when the point was not evaluated.
  const OperatingPoint& at(EvalTask task, double point) const;
  bool operator==(const ProtocolResults&) const = default;
};

/// Satisfaction rates of the four retrieval constraints, indexed 3..6:
///   eq3  new anchor, new positive vs new negative
///   eq4  new positive vs old negative
///   eq5  old positive vs new negative
///   eq6  old positive vs old negative
struct ConstraintRates {
  double eq3 = 0.0;
  double eq4 = 0.0;
  double eq5 = 0.0;
  double eq6 = 0.0;
  std::size_t trials = 0;
  bool operator==(const ConstraintRates&) const = default;
};

struct EvalReport {
  ProtocolResults self_test;
  ProtocolResults cross_test;
  double avg = 0.0;  // mean of CT/ST verification and identification at the headline point
  ConstraintRates constraints;
  bool has_constraints = false;
  bool operator==(const EvalReport&) const = default;
};

struct EvalSettings {
  std::vector<double> far_list{1e-4, 1e-2, 1e-1};
  std::vector<double> fpir_list{1e-2, 1e-1};
  double headline = 1e-2;
};

/// Embeddings of every eval sample under one model, rows unit-normalized.
Matrix embed_eval_set(const Backbone& backbone, const LabeledDataset& eval_ds);

/// Scores queries embedded by `query_feats` against a gallery/first side
/// embedded by `gallery_feats`. Verification pairs compare
/// gallery_feats[a] with query_feats[b].
ProtocolResults evaluate_pairing(const Matrix& gallery_feats, const Matrix& query_feats,
                                 const EvalProtocol& protocol, const LabeledDataset& eval_ds,
                                 const EvalSettings& settings);

/// Self-test uses the new backbone on both sides; cross-test builds the
/// first verification template and the gallery with the old backbone and the
/// rest with the new one.
EvalReport run_eval(const Backbone& old_backbone, const Backbone& new_backbone,
                    const EvalProtocol& protocol, const LabeledDataset& eval_ds,
                    const EvalSettings& settings);

/// Old model against itself (the lower bound); cross_test mirrors self_test.
EvalReport run_lower_bound(const Backbone& old_backbone, const EvalProtocol& protocol,
                           const LabeledDataset& eval_ds, const EvalSettings& settings);

/// cross > old self at (task, point), strictly.
bool compatibility_holds(const ProtocolResults& cross, const ProtocolResults& old_self,
                         EvalTask task, double point);

/// Monte-Carlo estimate of the constraint rates over random (anchor,
/// positive, negative) triplets. Trials are drawn in fixed-size chunks with
/// independent streams, so results do not depend on the thread count.
ConstraintRates audit_constraints(const Matrix& new_feats, const Matrix& old_feats,
                                  std::span<const std::uint32_t> labels, std::size_t trials,
                                  std::uint64_t seed);

/// TAR at `far` after randomly permuting the genuine/impostor flags of the
/// verification pairs: the chance level of the given pairing.
double permutation_chance_tar(const Matrix& gallery_feats, const Matrix& query_feats,
                              const EvalProtocol& protocol, double far, std::uint64_t seed);

}  // namespace bctlab
