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

#include "bctlab/kernels.hpp"

#include <cmath>
#include <limits>

#include "bctlab/error.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bctlab::kernels {
namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = std::size_t{1} << 15;

void check_abt(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.cols(), ErrorCode::kInvalidArgument, "gemm_abt: inner dims differ");
  if (c.rows() != a.rows() || c.cols() != b.rows()) c = Matrix(a.rows(), b.rows());
}

void check_ab(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.cols() == b.rows(), ErrorCode::kInvalidArgument, "gemm_ab: inner dims differ");
  if (c.rows() != a.rows() || c.cols() != b.cols()) c = Matrix(a.rows(), b.cols());
}

void check_atb(const Matrix& a, const Matrix& b, Matrix& c) {
  require(a.rows() == b.rows(), ErrorCode::kInvalidArgument, "gemm_atb: outer dims differ");
  if (c.rows() != a.cols() || c.cols() != b.cols()) c = Matrix(a.cols(), b.cols());
}

// Per-row routines. Serial and OpenMP paths share these so that the summation
// order of every output element is fixed.

void abt_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const double* ar = a.data() + i * a.cols();
  double* cr = c.data() + i * c.cols();
  for (std::size_t j = 0; j < b.rows(); ++j) {
    const double* br = b.data() + j * b.cols();
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += ar[k] * br[k];
    cr[j] = acc;
  }
}

void ab_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  const double* ar = a.data() + i * a.cols();
  double* cr = c.data() + i * c.cols();
  for (std::size_t j = 0; j < c.cols(); ++j) cr[j] = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = ar[k];
    const double* br = b.data() + k * b.cols();
    for (std::size_t j = 0; j < c.cols(); ++j) cr[j] += aik * br[j];
  }
}

void atb_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  double* cr = c.data() + i * c.cols();
  for (std::size_t j = 0; j < c.cols(); ++j) cr[j] = 0.0;
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const double ari = a(r, i);
    if (ari == 0.0) continue;
    const double* br = b.data() + r * b.cols();
    for (std::size_t j = 0; j < c.cols(); ++j) cr[j] += ari * br[j];
  }
}

Top1 top1_row(const Matrix& queries, const Matrix& gallery, std::size_t q) {
  Top1 best{0, -std::numeric_limits<double>::infinity()};
  const auto qr = queries.row(q);
  for (std::size_t g = 0; g < gallery.rows(); ++g) {
    const double s = dot(qr, gallery.row(g));
    if (s > best.score) best = {g, s};
  }
  return best;
}

void normalize_row(Matrix& m, std::size_t i) {
  auto r = m.row(i);
  const double n = norm2(r);
  if (n > 0.0) {
    for (double& v : r) v /= n;
  }
}

}  // namespace

namespace serial {

void gemm_abt(const Matrix& a, const Matrix& b, Matrix& c) {
  check_abt(a, b, c);
  for (std::size_t i = 0; i < a.rows(); ++i) abt_row(a, b, c, i);
}

void gemm_ab(const Matrix& a, const Matrix& b, Matrix& c) {
  check_ab(a, b, c);
  for (std::size_t i = 0; i < a.rows(); ++i) ab_row(a, b, c, i);
}

void gemm_atb(const Matrix& a, const Matrix& b, Matrix& c) {
  check_atb(a, b, c);
  for (std::size_t i = 0; i < a.cols(); ++i) atb_row(a, b, c, i);
}

void pair_dots(const Matrix& a, const Matrix& b,
               std::span<const std::pair<std::size_t, std::size_t>> pairs,
               std::span<double> out) {
  require(out.size() == pairs.size(), ErrorCode::kInvalidArgument, "pair_dots: output size");
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out[p] = dot(a.row(pairs[p].first), b.row(pairs[p].second));
  }
}

void top1(const Matrix& queries, const Matrix& gallery, std::span<Top1> out) {
  require(out.size() == queries.rows(), ErrorCode::kInvalidArgument, "top1: output size");
  for (std::size_t q = 0; q < queries.rows(); ++q) out[q] = top1_row(queries, gallery, q);
}

void normalize_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) normalize_row(m, i);
}

}  // namespace serial

namespace omp {

void gemm_abt(const Matrix& a, const Matrix& b, Matrix& c) {
  check_abt(a, b, c);
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const bool par = a.rows() * b.rows() * a.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < n; ++i) abt_row(a, b, c, static_cast<std::size_t>(i));
}

void gemm_ab(const Matrix& a, const Matrix& b, Matrix& c) {
  check_ab(a, b, c);
  const auto n = static_cast<std::ptrdiff_t>(a.rows());
  const bool par = a.rows() * b.cols() * a.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < n; ++i) ab_row(a, b, c, static_cast<std::size_t>(i));
}

void gemm_atb(const Matrix& a, const Matrix& b, Matrix& c) {
  check_atb(a, b, c);
  const auto n = static_cast<std::ptrdiff_t>(a.cols());
  const bool par = a.cols() * b.cols() * a.rows() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < n; ++i) atb_row(a, b, c, static_cast<std::size_t>(i));
}

void pair_dots(const Matrix& a, const Matrix& b,
               std::span<const std::pair<std::size_t, std::size_t>> pairs,
               std::span<double> out) {
  require(out.size() == pairs.size(), ErrorCode::kInvalidArgument, "pair_dots: output size");
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  const bool par = pairs.size() * a.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const auto& pr = pairs[static_cast<std::size_t>(p)];
    out[static_cast<std::size_t>(p)] = dot(a.row(pr.first), b.row(pr.second));
  }
}

void top1(const Matrix& queries, const Matrix& gallery, std::span<Top1> out) {
  require(out.size() == queries.rows(), ErrorCode::kInvalidArgument, "top1: output size");
  const auto n = static_cast<std::ptrdiff_t>(queries.rows());
  const bool par = queries.rows() * gallery.rows() * queries.cols() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t q = 0; q < n; ++q) {
    out[static_cast<std::size_t>(q)] = top1_row(queries, gallery, static_cast<std::size_t>(q));
  }
}

void normalize_rows(Matrix& m) {
  const auto n = static_cast<std::ptrdiff_t>(m.rows());
  const bool par = m.size() >= kParallelWork;
#pragma omp parallel for schedule(static) if (par)
  for (std::ptrdiff_t i = 0; i < n; ++i) normalize_row(m, static_cast<std::size_t>(i));
}

}  // namespace omp

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace bctlab::kernels
