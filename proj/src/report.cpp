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


#include "bctlab/report.hpp"

#include <charconv>
#include <cstdio>

namespace bctlab {
namespace {

std::string fixed4(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", x);
  return buf;
}

void emit_points(std::string& out, const char* metric, const char* protocol, const std::string& mode,
                 const std::vector<OperatingPoint>& points) {
  for (const auto& p : points) {
    out += metric;
    out += ",";
    out += protocol;
    out += "," + mode + "," + format_number(p.requested) + ",";
    if (p.supported) {
      out += format_number(p.value) + "," + format_number(p.achieved);
    } else {
      out += "unsupported,";
    }
    out += "\n";
  }
}

std::string cell(const ProtocolResults& r, EvalTask task, double point) {
  const auto& p = r.at(task, point);
  return p.supported ? fixed4(p.value) : "n/a";
}

}  // namespace

std::string format_number(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

std::string report_csv(const ReportTable& table) {
  std::string out = "metric,protocol,mode,operating_point,value,achieved_operating_point\n";
  for (const auto& row : table.rows) {
    const auto& r = row.report;
    emit_points(out, "TAR", "verification", row.name + ":self", r.self_test.verification);
    emit_points(out, "TPIR", "identification", row.name + ":self", r.self_test.identification);
    if (row.cross) {
      emit_points(out, "TAR", "verification", row.name + ":cross", r.cross_test.verification);
      emit_points(out, "TPIR", "identification", row.name + ":cross", r.cross_test.identification);
      out += "AVG,both," + row.name + "," + format_number(table.headline) + "," + format_number(r.avg) + ",\n";
    }
    if (r.has_constraints) {
      const std::string trials = std::to_string(r.constraints.trials);
      const std::pair<const char*, double> eqs[] = {{"constraint-eq3", r.constraints.eq3},
                                                    {"constraint-eq4", r.constraints.eq4},
                                                    {"constraint-eq5", r.constraints.eq5},
                                                    {"constraint-eq6", r.constraints.eq6}};
      for (const auto& [name, rate] : eqs) {
        out += std::string(name) + ",audit," + row.name + "," + trials + "," + format_number(rate) + ",\n";
      }
    }
  }
  if (table.chance_tar) {
    out += "TAR-chance,verification,permutation," + format_number(table.headline) + "," +
           format_number(*table.chance_tar) + ",\n";
  }
  return out;
}

std::string report_markdown(const ReportTable& table, const std::string& title) {
  const double h = table.headline;
  std::string out = "# " + title + "\n\n";
  out += "Operating point: FAR = FPIR = " + format_number(h) + "\n\n";
  out += "| Model | Verification CT | Verification ST | Identification CT | Identification ST | AVG |\n";
  out += "|---|---|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    const auto& r = row.report;
    out += "| " + row.name + " | ";
    out += (row.cross ? cell(r.cross_test, EvalTask::kVerification, h) : "-") + " | ";
    out += cell(r.self_test, EvalTask::kVerification, h) + " | ";
    out += (row.cross ? cell(r.cross_test, EvalTask::kIdentification, h) : "-") + " | ";
    out += cell(r.self_test, EvalTask::kIdentification, h) + " | ";
    out += (row.cross ? fixed4(r.avg) : "-") + " |\n";
  }

  out += "\n## All operating points\n\n| Model | Test | Protocol | Point | Value | Achieved |\n|---|---|---|---|---|---|\n";
  for (const auto& row : table.rows) {
    auto detail = [&](const char* test, const ProtocolResults& res) {
      auto lines = [&](const char* proto, const std::vector<OperatingPoint>& pts) {
        for (const auto& p : pts) {
          out += "| " + row.name + " | " + test + " | " + proto + " | " + format_number(p.requested) + " | ";
          out += p.supported ? fixed4(p.value) + " | " + format_number(p.achieved) : std::string("unsupported | -");
          out += " |\n";
        }
      };
      lines("TAR@FAR", res.verification);
      lines("TPIR@FPIR", res.identification);
    };
    detail("self", row.report.self_test);
    if (row.cross) detail("cross", row.report.cross_test);
  }

  bool any_audit = false;
  for (const auto& row : table.rows) any_audit |= row.report.has_constraints;
  if (any_audit) {
    out += "\n## Constraint audit\n\n| Model | Trials | new/new | new pos, old neg | old pos, new neg | old/old |\n";
    out += "|---|---|---|---|---|---|\n";
    for (const auto& row : table.rows) {
      if (!row.report.has_constraints) continue;
      const auto& c = row.report.constraints;
      out += "| " + row.name + " | " + std::to_string(c.trials) + " | " + fixed4(c.eq3) + " | " + fixed4(c.eq4) +
             " | " + fixed4(c.eq5) + " | " + fixed4(c.eq6) + " |\n";
    }
  }
  if (table.chance_tar) {
    out += "\nPermutation chance TAR@FAR=" + format_number(h) + ": " + fixed4(*table.chance_tar) + "\n";
  }
  return out;
}

std::string train_log_csv(const TrainLog& log) {
  std::string out = "epoch,batch,loss,replaced,credible_pool\n";
  for (const auto& b : log.batches) {
    out += std::to_string(b.epoch) + "," + std::to_string(b.batch) + "," + format_number(b.loss) + "," +
           std::to_string(b.replaced) + "," + std::to_string(b.credible_pool) + "\n";
  }
  return out;
}

}  // namespace bctlab
