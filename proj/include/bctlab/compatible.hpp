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

#include <span>
#include <string>

#include "bctlab/backbone.hpp"
#include "bctlab/classifier.hpp"
#include "bctlab/dataset.hpp"
#include "bctlab/feature_cache.hpp"
#include "bctlab/training.hpp"

namespace bctlab {

enum class Method { kNoCompat, kMixBct, kL2Bct, kProtoBct };

const char* to_string(Method m);
Method parse_method(const std::string& s);

struct MethodConfig {
  Method method = Method::kMixBct;
  double alpha = 0.3;
  bool denoise = true;
  double exclusion_fraction = 0.1;
  double lambda = 10.0;
  double proto_weight = 1.0;

  void validate() const;
  bool uses_cache() const { return method != Method::kNoCompat; }
};

/// Old features of `new_train`, denoised when the method asks for it.
OldFeatureCache prepare_cache(const Backbone& old_backbone, const LabeledDataset& ds,
                              std::span<const std::size_t> new_train, const MethodConfig& method);

/// Trains the new model on `new_train` with the method's loss. The cache
/// must cover `new_train` for every method except NoCompat.
TrainLog train_compatible(const LabeledDataset& ds, std::span<const std::size_t> new_train,
                          const LabelMap& labels, const OldFeatureCache& cache,
                          Backbone& new_backbone, Classifier& new_cls,
                          const MethodConfig& method, const TrainConfig& cfg);

}  // namespace bctlab
