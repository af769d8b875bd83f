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

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "bctlab/config.hpp"
#include "bctlab/error.hpp"
#include "bctlab/pipeline.hpp"
#include "bctlab/report.hpp"
#include "bctlab/scatter.hpp"
#include "test_util.hpp"

namespace bctlab {
namespace {

using testing::TempDir;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small enough for a few seconds per full scenario.
const char* kTinyConfig = R"(# quick scenario
seed = 3
dataset.num_classes = 10
dataset.per_class = 16
dataset.dim = 6
dataset.eval_per_class = 10
old.widths = 6, 8, 4
old.epochs = 2
old.batch_size = 32
new.widths = 6, 12, 4
new.epochs = 3
new.batch_size = 32
eval.pairs_per_class = 20
eval.audit_trials = 500
ablation.alphas = 0, 0.3
)";

RunConfig tiny_config(const std::filesystem::path& out) {
  RunConfig cfg;
  apply_config_text(cfg, kTinyConfig, "tiny");
  cfg.out_dir = out.string();
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// configuration

TEST(Config, TextSetsKeysAndIgnoresComments) {
  RunConfig cfg;
  apply_config_text(cfg, kTinyConfig);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.dataset.num_classes, 10);
  EXPECT_EQ(cfg.old_model.widths, (std::vector<std::size_t>{6, 8, 4}));
  EXPECT_EQ(cfg.alpha_grid, (std::vector<double>{0.0, 0.3}));
  EXPECT_EQ(cfg.new_model.loss, LossKind::kAngularMargin);  // default kept
}

TEST(Config, ResolvedTextRoundTrips) {
  RunConfig cfg;
  apply_config_text(cfg, kTinyConfig);
  apply_override(cfg, "method.lambda=0.1");
  apply_override(cfg, "eval.far=0.001, 0.01");
  RunConfig again;
  apply_config_text(again, resolved_text(cfg));
  EXPECT_EQ(resolved_text(again), resolved_text(cfg));
  EXPECT_EQ(again.method.lambda, 0.1);
}

TEST(Config, OverridesBeatTheFile) {
  TempDir dir("config");
  std::ofstream(dir / "run.cfg") << "new.epochs = 7\nmethod.alpha = 0.2\n";
  RunConfig cfg;
  apply_config_file(cfg, dir / "run.cfg");
  apply_override(cfg, "new.epochs = 9");
  EXPECT_EQ(cfg.new_model.train.epochs, 9);
  EXPECT_EQ(cfg.method.alpha, 0.2);
}

TEST(Config, Errors) {
  RunConfig cfg;
  EXPECT_EQ(code_of([&] { apply_config_text(cfg, "bogus.key = 1\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { apply_config_text(cfg, "seed 4\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { apply_config_text(cfg, "new.epochs = many\n"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { apply_override(cfg, "no-equals-sign"); }), ErrorCode::kConfig);
  EXPECT_EQ(code_of([&] { apply_config_file(cfg, "/nonexistent/run.cfg"); }), ErrorCode::kIo);

  RunConfig dims;
  apply_override(dims, "new.widths=16,64,16");
  EXPECT_EQ(code_of([&] { dims.validate(); }), ErrorCode::kConfig);
  RunConfig head;
  apply_override(head, "eval.headline=0.05");
  EXPECT_EQ(code_of([&] { head.validate(); }), ErrorCode::kConfig);
}

TEST(Config, RunDirectoryDefaultsToSeed) {
  RunConfig cfg;
  cfg.seed = 12;
  cfg.out_dir = "results";
  EXPECT_EQ(cfg.run_dir(), std::filesystem::path("results") / "run-12");
  cfg.run_id = "trial";
  EXPECT_EQ(cfg.run_dir(), std::filesystem::path("results") / "trial");
}

// ---------------------------------------------------------------------------
// reports

TEST(Report, CsvSchemaAndUnsupportedPoints) {
  EvalReport r;
  r.self_test.verification = {{1e-4, 0.0, 0.0, 1.0, false}, {1e-2, 0.5, 0.01, 0.3, true}};
  r.self_test.identification = {{1e-2, 0.25, 0.0, 0.4, true}};
  r.cross_test = r.self_test;
  r.avg = 0.375;
  r.has_constraints = true;
  r.constraints = {0.9, 0.8, 0.7, 0.6, 100};
  ReportTable t;
  t.rows.push_back({"mixbct", r, true});
  t.rows.push_back({"upper", r, false});
  t.chance_tar = 0.0125;
  const std::string csv = report_csv(t);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "metric,protocol,mode,operating_point,value,achieved_operating_point");
  std::vector<std::string> lines;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 5) << line;
    lines.push_back(line);
  }
  EXPECT_EQ(lines[0], "TAR,verification,mixbct:self,1e-04,unsupported,");
  EXPECT_EQ(lines[1], "TAR,verification,mixbct:self,0.01,0.5,0.01");
  EXPECT_NE(csv.find("AVG,both,mixbct,0.01,0.375,\n"), std::string::npos);
  EXPECT_NE(csv.find("constraint-eq4,audit,mixbct,100,0.8,\n"), std::string::npos);
  EXPECT_EQ(csv.find("upper:cross"), std::string::npos);
  EXPECT_EQ(lines.back(), "TAR-chance,verification,permutation,0.01,0.0125,");
  const std::string md = report_markdown(t, "Demo");
  EXPECT_EQ(md.rfind("# Demo", 0), 0u);
  EXPECT_NE(md.find("| mixbct |"), std::string::npos);
}

TEST(Report, TrainLogColumns) {
  TrainLog log;
  log.batches.push_back({0, 0, 32, 1.5, 9, 30});
  EXPECT_EQ(train_log_csv(log), "epoch,batch,loss,replaced,credible_pool\n0,0,1.5,9,30\n");
}

// ---------------------------------------------------------------------------
// scenario pipeline

std::set<std::string> schema_of(const std::string& csv, const std::string& method) {
  std::set<std::string> keys;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    std::string key = line.substr(0, line.find(',', line.find(',', line.find(',') + 1) + 1));
    if (auto p = key.find(method); p != std::string::npos) key.replace(p, method.size(), "METHOD");
    keys.insert(key);
  }
  return keys;
}

TEST(Scenario, DeterministicArtifactsAndFixedSchema) {
  TempDir dir("scenario");
  const RunConfig a = tiny_config(dir / "a");
  const std::vector<std::string> files{"config.resolved", "old.model", "cache.bctf", "new.model",
                                       "train.csv",       "report.csv", "report.md"};
  run_scenario(a);
  std::vector<std::string> first;
  for (const auto& f : files) {
    ASSERT_TRUE(std::filesystem::exists(a.run_dir() / f)) << f;
    first.push_back(slurp(a.run_dir() / f));
  }
  std::filesystem::remove_all(a.run_dir());
  run_scenario(a);
  for (std::size_t k = 0; k < files.size(); ++k) EXPECT_EQ(slurp(a.run_dir() / files[k]), first[k]) << files[k];
  const std::string csv = slurp(a.run_dir() / "report.csv");
  for (const char* mode : {"lower:self", "upper:self", "upper-prime:self", "mixbct:cross", "TAR-chance"}) {
    EXPECT_NE(csv.find(mode), std::string::npos) << mode;
  }

  RunConfig none = tiny_config(dir / "c");
  apply_override(none, "method.name=none");
  run_scenario(none);
  EXPECT_EQ(schema_of(slurp(none.run_dir() / "report.csv"), "none"), schema_of(csv, "mixbct"));
}

TEST(Scenario, OpenClassSplitSizesTheHeads) {
  TempDir dir("split");
  RunConfig cfg;
  cfg.out_dir = dir.path().string();
  apply_override(cfg, "old.epochs=1");
  apply_override(cfg, "new.epochs=1");
  apply_override(cfg, "eval.audit_trials=100");
  const Workspace ws = prepare_workspace(cfg);
  const TrainedModel old = train_old(cfg, ws);
  EXPECT_EQ(old.head.num_classes(), 15u);
  MethodConfig none;
  none.method = Method::kNoCompat;
  EXPECT_EQ(run_method(cfg, ws, old.backbone, none).model.head.num_classes(), 35u);
}

TEST(Scenario, StageTaggedErrors) {
  TempDir dir("stage");
  RunConfig cfg = tiny_config(dir.path());
  cfg.dataset.path = (dir / "missing.bctd").string();
  try {
    run_scenario(cfg, false);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("prepare"), std::string::npos) << e.what();
  }
}

TEST(Ablation, SharedOldModelAndAlphaZeroMatchesNone) {
  TempDir dir("ablation");
  const RunConfig cfg = tiny_config(dir.path());
  const auto points = run_alpha_ablation(cfg);
  ASSERT_EQ(points.size(), 3u);
  EXPECT_EQ(points[0].label, "none");
  EXPECT_EQ(points[1].label, "alpha-0");
  for (const auto& p : points) {
    EXPECT_TRUE(p.ok) << p.error;
    EXPECT_EQ(p.old_model_hash, points[0].old_model_hash);
  }
  EXPECT_EQ(points[0].old_model_hash, file_hash(cfg.run_dir() / "old.model"));
  const auto& none = points[0].report;
  const auto& zero = points[1].report;
  for (std::size_t k = 0; k < none.cross_test.verification.size(); ++k) {
    EXPECT_NEAR(zero.cross_test.verification[k].value, none.cross_test.verification[k].value, 1e-12);
    EXPECT_NEAR(zero.self_test.verification[k].value, none.self_test.verification[k].value, 1e-12);
  }
  EXPECT_NEAR(zero.avg, none.avg, 1e-12);
  const std::string csv = slurp(cfg.run_dir() / "ablation-alpha.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Ablation, DenoiseToggleRuns) {
  TempDir dir("denoise");
  const auto points = run_denoise_ablation(tiny_config(dir.path()), false);
  ASSERT_EQ(points.size(), 2u);
  EXPECT_TRUE(points[0].ok && points[1].ok);
  EXPECT_TRUE(points[0].method.denoise);
  EXPECT_FALSE(points[1].method.denoise);
  EXPECT_EQ(points[0].cache_noise, 0.2);
}

TEST(Sequential, IdenticalModelsGiveEqualCells) {
  TempDir dir("chain");
  const RunConfig cfg = tiny_config(dir.path());
  const Workspace ws = prepare_workspace(cfg);
  const Backbone b = Backbone::random(cfg.old_model.widths, 5);
  const std::vector<Backbone> chain{b, b, b};
  const auto res = cross_matrix(chain, ws, cfg.eval.settings());
  for (std::size_t q = 0; q < 3; ++q) {
    for (std::size_t g = 0; g < 3; ++g) {
      EXPECT_EQ(res.verification(q, g), res.verification(0, 0));
      EXPECT_EQ(res.identification(q, g), res.identification(0, 0));
    }
  }
}

TEST(Sequential, Deterministic) {
  TempDir dir("chain-run");
  const RunConfig cfg = tiny_config(dir.path());
  const auto a = run_sequential(cfg);
  const auto b = run_sequential(cfg, false);
  EXPECT_EQ(a.verification, b.verification);
  EXPECT_EQ(a.identification, b.identification);
  for (const char* f : {"phi1.model", "phi2.model", "phi3.model", "sequential.csv", "sequential.md"}) {
    EXPECT_TRUE(std::filesystem::exists(cfg.run_dir() / f)) << f;
  }
}

// ---------------------------------------------------------------------------
// scatter export

TEST(Scatter, MirroredClustersLandAtMirroredPixels) {
  Matrix pts(4, 2);
  pts(0, 0) = 1.0;
  pts(1, 0) = 1.0;
  pts(1, 1) = 0.1;
  pts(2, 0) = -1.0;
  pts(3, 0) = -1.0;
  pts(3, 1) = 0.1;
  const std::vector<std::uint32_t> labels{0, 0, 1, 1};
  const Projection2D p = project_2d(pts);
  EXPECT_EQ(p.points, pts);  // two columns pass straight through
  const std::string svg = scatter_svg(p.points, labels);
  std::vector<double> cx;
  for (auto pos = svg.find("cx=\""); pos != std::string::npos; pos = svg.find("cx=\"", pos + 1)) {
    cx.push_back(std::stod(svg.substr(pos + 4)));
  }
  ASSERT_EQ(cx.size(), 4u);
  EXPECT_NEAR(cx[0] + cx[2], cx[1] + cx[3], 1e-9);
  EXPECT_GT(cx[0], cx[2]);
  EXPECT_NE(svg.find("class 0"), std::string::npos);
  EXPECT_NE(svg.find("class 1"), std::string::npos);
}

// Leading eigenvalues of a symmetric matrix by power iteration with deflation.
std::vector<double> top_eigenvalues(std::vector<std::vector<double>> a, int count) {
  const std::size_t n = a.size();
  std::vector<double> out;
  for (int k = 0; k < count; ++k) {
    std::vector<double> v(n, 1.0);
    v[k % n] += 0.5;
    double lambda = 0.0;
    for (int it = 0; it < 5000; ++it) {
      std::vector<double> w(n, 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w[i] += a[i][j] * v[j];
      double norm = 0.0;
      for (double x : w) norm += x * x;
      norm = std::sqrt(norm);
      for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
      lambda = norm;
    }
    out.push_back(lambda);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] -= lambda * v[i] * v[j];
  }
  return out;
}

TEST(Scatter, ProjectionKeepsTheTwoLargestVariances) {
  Rng rng(6);
  Matrix x = testing::random_matrix(200, 8, rng);
  for (std::size_t i = 0; i < 200; ++i) {
    x(i, 0) *= 3.0;
    x(i, 3) *= 2.0;
    x(i, 5) += 0.5 * x(i, 0);
  }
  const Projection2D p = project_2d(x);
  std::vector<double> mean(8, 0.0);
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t k = 0; k < 8; ++k) mean[k] += x(i, k) / 200.0;
  std::vector<std::vector<double>> cov(8, std::vector<double>(8, 0.0));
  for (std::size_t i = 0; i < 200; ++i)
    for (std::size_t a = 0; a < 8; ++a)
      for (std::size_t b = 0; b < 8; ++b) cov[a][b] += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / 199.0;
  const auto eig = top_eigenvalues(cov, 2);
  EXPECT_GE(p.variance[0], p.variance[1]);
  EXPECT_NEAR(p.variance[0], eig[0], 1e-8 * eig[0]);
  EXPECT_NEAR(p.variance[1], eig[1], 1e-8 * eig[0]);
  // The reported variances describe the projected points themselves.
  for (int axis = 0; axis < 2; ++axis) {
    double m = 0.0, v = 0.0;
    for (std::size_t i = 0; i < 200; ++i) m += p.points(i, axis) / 200.0;
    for (std::size_t i = 0; i < 200; ++i) v += std::pow(p.points(i, axis) - m, 2) / 199.0;
    EXPECT_NEAR(v, p.variance[axis], 1e-9 * eig[0]);
  }
}

TEST(Scatter, Errors) {
  TempDir dir("scatter");
  Matrix pts(2, 2);
  EXPECT_EQ(code_of([&] { export_scatter(pts, {}, dir / "a.svg"); }), ErrorCode::kInvalidArgument);
  const std::vector<std::uint32_t> labels{0, 1};
  EXPECT_EQ(code_of([&] { export_scatter(pts, labels, dir / "no" / "such" / "dir" / "a.svg"); }), ErrorCode::kIo);
  export_scatter(pts, labels, dir / "ok.svg");
  EXPECT_EQ(slurp(dir / "ok.svg").rfind("<svg", 0), 0u);
}

// ---------------------------------------------------------------------------
// command line

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BCTLAB_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(Cli, ExitCodes) {
  TempDir dir("cli");
  std::ofstream(dir / "tiny.cfg") << kTinyConfig;
  const std::string base = "--config " + (dir / "tiny.cfg").string() + " --out " + dir.path().string();
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("run --bogus-flag"), 2);
  EXPECT_EQ(run_cli("run " + base + " --set bogus.key=1"), 2);
  EXPECT_EQ(run_cli("run --config " + (dir / "absent.cfg").string()), 4);
  EXPECT_EQ(run_cli("eval-only " + base + " --old " + (dir / "x.model").string() + " --new " +
                    (dir / "y.model").string()),
            4);
  EXPECT_EQ(run_cli("run " + base + " --set new.lr=1e300"), 3);
  EXPECT_EQ(run_cli("gen-data " + base + " --seed 4"), 0);
  EXPECT_TRUE(std::filesystem::exists(dir / "run-4" / "train.bctd"));
  EXPECT_TRUE(std::filesystem::exists(dir / "run-4" / "eval.bctd"));
  EXPECT_EQ(run_cli("scatter " + base + " --data " + (dir / "run-4" / "eval.bctd").string() + " --output " +
                    (dir / "eval.svg").string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "eval.svg"));
}

}  // namespace
}  // namespace bctlab
