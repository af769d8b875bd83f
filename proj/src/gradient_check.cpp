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

#include "bctlab/gradient_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "bctlab/error.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {

GradientCheckResult gradient_check(const std::function<double()>& loss, std::span<double> params,
                                   std::span<const double> analytic, double eps,
                                   std::size_t max_coords, std::uint64_t seed) {
  require(params.size() == analytic.size(), ErrorCode::kInvalidArgument,
          "gradient_check: parameter and gradient sizes differ");
  require(eps > 0.0, ErrorCode::kInvalidArgument, "gradient_check: eps must be positive");

  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (max_coords > 0 && max_coords < coords.size()) {
    Rng rng(seed);
    rng.shuffle(coords);
    coords.resize(max_coords);
    std::ranges::sort(coords);
  }

  GradientCheckResult result;
  for (auto k : coords) {
    const double saved = params[k];
    params[k] = saved + eps;
    const double up = loss();
    params[k] = saved - eps;
    const double down = loss();
    params[k] = saved;

    const double numeric = (up - down) / (2.0 * eps);
    const double a = analytic[k];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    const double rel = std::abs(a - numeric) / denom;
    if (result.checked == 0 || rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_index = k;
    }
    ++result.checked;
  }
  return result;
}

}  // namespace bctlab
