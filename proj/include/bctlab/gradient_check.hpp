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
#include <functional>
#include <span>

namespace bctlab {

struct GradientCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares `analytic` with central differences (f(p+eps) - f(p-eps)) / 2eps
/// of `loss`, which must read `params` each time it is called. Relative
/// error is |a - n| / max(|a|, |n|, 1e-8). With max_coords > 0 only a seeded
/// random subset of coordinates is probed. `params` is restored on return.
GradientCheckResult gradient_check(const std::function<double()>& loss, std::span<double> params,
                                   std::span<const double> analytic, double eps,
                                   std::size_t max_coords = 0, std::uint64_t seed = 0);

}  // namespace bctlab
