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
#include <utility>
#include <vector>

#include "bctlab/matrix.hpp"

// Dense kernels behind the model and the evaluator.
//
// Every kernel has a serial reference in `kernels::serial` and an OpenMP
// version in `kernels::omp`. Both call the same per-row routine and only
// differ in how rows are distributed, so their outputs are bit-identical for
// any thread count. The unqualified `kernels::` entry points forward to the
// OpenMP versions.
namespace bctlab::kernels {

struct Top1 {
  std::size_t index = 0;
  double score = 0.0;
};

namespace serial {
/// C = A * B^T   (A: n x k, B: m x k, C: n x m)
void gemm_abt(const Matrix& a, const Matrix& b, Matrix& c);
/// C = A * B     (A: n x k, B: k x m, C: n x m)
void gemm_ab(const Matrix& a, const Matrix& b, Matrix& c);
/// C = A^T * B   (A: k x n, B: k x m, C: n x m)
void gemm_atb(const Matrix& a, const Matrix& b, Matrix& c);
/// Row-wise dot products for index pairs (rows of `a` against rows of `b`).
void pair_dots(const Matrix& a, const Matrix& b,
               std::span<const std::pair<std::size_t, std::size_t>> pairs,
               std::span<double> out);
/// Best gallery row by dot product for every query row. Ties keep the lower
/// gallery index.
void top1(const Matrix& queries, const Matrix& gallery, std::span<Top1> out);
/// Scales every nonzero row to unit L2 norm; zero rows stay zero.
void normalize_rows(Matrix& m);
}  // namespace serial

namespace omp {
void gemm_abt(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_ab(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_atb(const Matrix& a, const Matrix& b, Matrix& c);
void pair_dots(const Matrix& a, const Matrix& b,
               std::span<const std::pair<std::size_t, std::size_t>> pairs,
               std::span<double> out);
void top1(const Matrix& queries, const Matrix& gallery, std::span<Top1> out);
void normalize_rows(Matrix& m);
}  // namespace omp

using omp::gemm_ab;
using omp::gemm_abt;
using omp::gemm_atb;
using omp::normalize_rows;
using omp::pair_dots;
using omp::top1;

/// Number of threads the OpenMP kernels may use (1 when built without it).
int max_threads();

}  // namespace bctlab::kernels
