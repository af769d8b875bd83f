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


#include "bctlab/scatter.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "bctlab/error.hpp"

namespace bctlab {
namespace {

double sample_variance(const Matrix& m, std::size_t col) {
  const std::size_t n = m.rows();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += m(i, col);
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (m(i, col) - mean) * (m(i, col) - mean);
  return ss / static_cast<double>(n - 1);
}

std::string color_of(std::size_t rank, std::size_t count) {
  // Evenly spaced hues at fixed saturation and lightness.
  const double h = 360.0 * static_cast<double>(rank) / static_cast<double>(std::max<std::size_t>(count, 1));
  const double s = 0.65, l = 0.45;
  const double c = (1 - std::fabs(2 * l - 1)) * s;
  const double hp = h / 60.0;
  const double x = c * (1 - std::fabs(std::fmod(hp, 2.0) - 1));
  double r = 0, g = 0, b = 0;
  if (hp < 1) { r = c; g = x; }
  else if (hp < 2) { r = x; g = c; }
  else if (hp < 3) { g = c; b = x; }
  else if (hp < 4) { g = x; b = c; }
  else if (hp < 5) { r = x; b = c; }
  else { r = c; b = x; }
  const double m = l - c / 2;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround((r + m) * 255)),
                static_cast<int>(std::lround((g + m) * 255)), static_cast<int>(std::lround((b + m) * 255)));
  return buf;
}

}  // namespace

Projection2D project_2d(const Matrix& feats) {
  require(feats.rows() > 0 && feats.cols() > 0, ErrorCode::kInvalidArgument, "scatter: no samples");
  const std::size_t n = feats.rows(), d = feats.cols();
  Projection2D out;
  out.points = Matrix(n, 2);
  if (d <= 2) {
    for (std::size_t i = 0; i < n; ++i) {
      out.points(i, 0) = feats(i, 0);
      out.points(i, 1) = d == 2 ? feats(i, 1) : 0.0;
    }
  } else {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMat> x(feats.data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const RowMat centered = x.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / std::max<double>(1.0, static_cast<double>(n) - 1);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    require(eig.info() == Eigen::Success, ErrorCode::kNumericFault, "scatter: eigendecomposition failed");
    for (int k = 0; k < 2; ++k) {
      // Eigenvalues are ascending; fix the sign so the largest component is positive.
      Eigen::VectorXd axis = eig.eigenvectors().col(static_cast<Eigen::Index>(d) - 1 - k);
      Eigen::Index arg = 0;
      axis.cwiseAbs().maxCoeff(&arg);
      if (axis(arg) < 0) axis = -axis;
      const Eigen::VectorXd proj = centered * axis;
      for (std::size_t i = 0; i < n; ++i) out.points(i, k) = proj(static_cast<Eigen::Index>(i));
    }
  }
  out.variance[0] = sample_variance(out.points, 0);
  out.variance[1] = sample_variance(out.points, 1);
  return out;
}

std::string scatter_svg(const Matrix& points, std::span<const std::uint32_t> labels) {
  require(points.rows() > 0, ErrorCode::kInvalidArgument, "scatter: no samples");
  require(labels.size() == points.rows() && points.cols() == 2, ErrorCode::kInvalidArgument,
          "scatter: points and labels are not aligned");

  std::map<std::uint32_t, std::size_t> rank;
  for (auto l : labels) rank.emplace(l, 0);
  std::size_t r = 0;
  for (auto& [label, slot] : rank) slot = r++;

  double x0 = points(0, 0), x1 = x0, y0 = points(0, 1), y1 = y0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    x0 = std::min(x0, points(i, 0));
    x1 = std::max(x1, points(i, 0));
    y0 = std::min(y0, points(i, 1));
    y1 = std::max(y1, points(i, 1));
  }
  // Symmetric bounds keep mirrored inputs at mirrored pixel positions.
  const double xr = std::max({std::fabs(x0), std::fabs(x1), 1e-12});
  const double yr = std::max({std::fabs(y0), std::fabs(y1), 1e-12});
  const double plot = 480.0, pad = 20.0;
  const double legend_w = 140.0;
  const double height = std::max(plot + 2 * pad, 20.0 * static_cast<double>(rank.size()) + 2 * pad);
  auto px = [&](double x) { return pad + (x / xr + 1.0) * 0.5 * plot; };
  auto py = [&](double y) { return pad + (1.0 - (y / yr + 1.0) * 0.5) * plot; };

  std::string svg;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                plot + 2 * pad + legend_w, height, plot + 2 * pad + legend_w, height);
  svg += buf;
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<g id=\"points\">\n";
  for (std::size_t i = 0; i < points.rows(); ++i) {
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"%s\" data-label=\"%u\"/>\n",
                  px(points(i, 0)), py(points(i, 1)), color_of(rank[labels[i]], rank.size()).c_str(), labels[i]);
    svg += buf;
  }
  svg += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const auto& [label, slot] : rank) {
    const double y = pad + 20.0 * static_cast<double>(slot);
    std::snprintf(buf, sizeof buf,
                  "<rect x=\"%.0f\" y=\"%.0f\" width=\"10\" height=\"10\" fill=\"%s\"/>"
                  "<text x=\"%.0f\" y=\"%.0f\">class %u</text>\n",
                  plot + 2 * pad, y, color_of(slot, rank.size()).c_str(), plot + 2 * pad + 16, y + 10, label);
    svg += buf;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

void export_scatter(const Matrix& feats, std::span<const std::uint32_t> labels,
                    const std::filesystem::path& path) {
  require(!labels.empty(), ErrorCode::kInvalidArgument, "scatter: empty label set");
  const std::string svg = scatter_svg(project_2d(feats).points, labels);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << svg;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace bctlab
