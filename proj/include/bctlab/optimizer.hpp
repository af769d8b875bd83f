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
#include <span>
#include <vector>

namespace bctlab {

/// Linear decay to zero: lr0 * (1 - step / total_steps).
double lr_at(std::size_t step, std::size_t total_steps, double lr0);

struct SgdState {
  std::vector<std::vector<double>> velocity;  // lazily sized on first step
};

/// Momentum SGD with coupled weight decay:
///   g' = g + weight_decay * p;  v = momentum * v + g';  p -= lr * v
/// Throws numeric-fault, leaving params and state untouched, if any gradient
/// is non-finite.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, double lr, double momentum,
              double weight_decay, SgdState& state);

}  // namespace bctlab
