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

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "bctlab/matrix.hpp"

namespace bctlab {

struct Projection2D {
  Matrix points;  // n x 2
  double variance[2] = {0.0, 0.0};  // sample variance along each output axis
};

/// Inputs with more than two columns go through PCA onto the top two
/// principal axes; two-column input is kept as is, one column gets y = 0.
Projection2D project_2d(const Matrix& feats);

/// SVG scatter with one circle per row, colored by label, plus a legend.
std::string scatter_svg(const Matrix& points, std::span<const std::uint32_t> labels);

void export_scatter(const Matrix& feats, std::span<const std::uint32_t> labels,
                    const std::filesystem::path& path);

}  // namespace bctlab
