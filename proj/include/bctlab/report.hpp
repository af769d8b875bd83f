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

#include <optional>
#include <string>
#include <vector>

#include "bctlab/evaluation.hpp"
#include "bctlab/matrix.hpp"
#include "bctlab/training.hpp"

namespace bctlab {

/// One row of a results table. Rows without `cross` report only the
/// self-test of their model (bounds).
struct ReportRow {
  std::string name;
  EvalReport report;
  bool cross = true;
};

struct ReportTable {
  std::vector<ReportRow> rows;
  double headline = 1e-2;
  std::optional<double> chance_tar;  // permutation baseline for cross-test TAR
};

/// Columns: metric,protocol,mode,operating_point,value,achieved_operating_point.
/// Constraint-audit rows follow the metric rows of each row that carries one.
std::string report_csv(const ReportTable& table);

/// Headline table (CT/ST by protocol plus AVG) and per-point detail.
std::string report_markdown(const ReportTable& table, const std::string& title);

/// Columns: epoch,batch,loss,replaced,credible_pool.
std::string train_log_csv(const TrainLog& log);

/// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace bctlab
