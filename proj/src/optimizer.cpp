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

#include "bctlab/optimizer.hpp"

#include <cmath>
#include <string>

#include "bctlab/error.hpp"

namespace bctlab {

double lr_at(std::size_t step, std::size_t total_steps, double lr0) {
  require(total_steps >= 1, ErrorCode::kInvalidArgument, "lr_at: total_steps must be >= 1");
  require(step <= total_steps, ErrorCode::kInvalidArgument,
          "lr_at: step " + std::to_string(step) + " beyond " + std::to_string(total_steps));
  return lr0 * (1.0 - static_cast<double>(step) / static_cast<double>(total_steps));
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, double lr, double momentum,
              double weight_decay, SgdState& state) {
  require(params.size() == grads.size(), ErrorCode::kInvalidArgument,
          "sgd_step: parameter and gradient lists differ");
  for (std::size_t t = 0; t < params.size(); ++t) {
    require(params[t].size() == grads[t].size(), ErrorCode::kInvalidArgument,
            "sgd_step: tensor " + std::to_string(t) + " shape mismatch");
    for (double g : grads[t]) {
      if (!std::isfinite(g)) {
        fail(ErrorCode::kNumericFault, "sgd_step: non-finite gradient in tensor " + std::to_string(t));
      }
    }
  }
  if (state.velocity.empty()) {
    state.velocity.resize(params.size());
    for (std::size_t t = 0; t < params.size(); ++t) state.velocity[t].assign(params[t].size(), 0.0);
  }
  require(state.velocity.size() == params.size(), ErrorCode::kInvalidArgument,
          "sgd_step: velocity state does not match parameters");
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto p = params[t];
    auto g = grads[t];
    auto& v = state.velocity[t];
    require(v.size() == p.size(), ErrorCode::kInvalidArgument, "sgd_step: velocity shape mismatch");
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double gk = g[k] + weight_decay * p[k];
      v[k] = momentum * v[k] + gk;
      p[k] -= lr * v[k];
    }
  }
}

}  // namespace bctlab
