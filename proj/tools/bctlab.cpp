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


#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "bctlab/config.hpp"
#include "bctlab/error.hpp"
#include "bctlab/evaluation.hpp"
#include "bctlab/feature_cache.hpp"
#include "bctlab/kernels.hpp"
#include "bctlab/model_io.hpp"
#include "bctlab/pipeline.hpp"
#include "bctlab/report.hpp"
#include "bctlab/scatter.hpp"
#include "bctlab/training.hpp"

namespace {

using namespace bctlab;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Configuration file (key = value lines)");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output root directory");
  cmd->add_option("--set", f.sets, "Override one key, e.g. --set new.epochs=10")->take_all();
}

// Precedence: defaults, then the config file, then command-line flags.
RunConfig resolve(const CommonFlags& f) {
  RunConfig cfg;
  if (!f.config.empty()) apply_config_file(cfg, f.config);
  for (const auto& s : f.sets) apply_override(cfg, s);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  cfg.validate();
  return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kInvalidSplit:
    case ErrorCode::kInvalidProtocol:
      return 2;
    case ErrorCode::kNumericFault:
    case ErrorCode::kDegenerateInput:
    case ErrorCode::kDegenerateTemplate:
      return 3;
    case ErrorCode::kIo:
    case ErrorCode::kCorruptFile:
      return 4;
  }
  return 2;
}

void print_points(const std::vector<AblationPoint>& points, double headline) {
  for (const auto& p : points) {
    if (p.ok) {
      std::printf("%-12s CT %.4f  ST %.4f  AVG %.4f\n", p.label.c_str(),
                  p.report.cross_test.at(EvalTask::kVerification, headline).value,
                  p.report.self_test.at(EvalTask::kVerification, headline).value, p.report.avg);
    } else {
      std::printf("%-12s failed: %s\n", p.label.c_str(), p.error.c_str());
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bctlab: backward-compatible embedding training experiments"};
  app.require_subcommand(1);

  CommonFlags gen_f, run_f, alpha_f, denoise_f, seq_f, eval_f, scatter_f;

  auto* gen = app.add_subcommand("gen-data", "Generate the training and evaluation datasets");
  add_common(gen, gen_f);

  auto* run = app.add_subcommand("run", "Run one upgrade scenario");
  add_common(run, run_f);

  auto* alpha = app.add_subcommand("ablate-alpha", "Sweep the mixing ratio with a shared old model");
  add_common(alpha, alpha_f);

  auto* dn = app.add_subcommand("ablate-denoise", "Compare denoising on and off with a noisy cache");
  add_common(dn, denoise_f);

  auto* seq = app.add_subcommand("sequential", "Train and cross-evaluate a three-model chain");
  add_common(seq, seq_f);

  auto* ev = app.add_subcommand("eval-only", "Evaluate two stored models");
  add_common(ev, eval_f);
  std::string old_path, new_path;
  ev->add_option("--old", old_path, "Old model file")->required();
  ev->add_option("--new", new_path, "New model file")->required();

  auto* sc = app.add_subcommand("scatter", "Export a 2-D scatter plot as SVG");
  add_common(sc, scatter_f);
  std::string sc_model, sc_data, sc_cache, sc_output;
  sc->add_option("--model", sc_model, "Embed the samples with this model file");
  sc->add_option("--data", sc_data, "Dataset file (default: the configured evaluation set)");
  sc->add_option("--cache", sc_cache, "Plot the features of a cache file instead");
  sc->add_option("--output", sc_output, "SVG path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const RunConfig cfg = resolve(gen_f);
      const Workspace ws = prepare_workspace(cfg);
      ensure_dir(cfg.run_dir());
      save_dataset(ws.train, cfg.run_dir() / "train.bctd");
      save_dataset(ws.eval, cfg.run_dir() / "eval.bctd");
      write_file(cfg.run_dir() / "config.resolved", resolved_text(cfg));
      std::printf("wrote %s\n", cfg.run_dir().string().c_str());
    } else if (*run) {
      const RunConfig cfg = resolve(run_f);
      const ScenarioResult res = run_scenario(cfg);
      const double h = cfg.eval.headline;
      const bool ok = compatibility_holds(res.method.cross_test, res.lower.self_test, EvalTask::kVerification, h);
      std::printf("lower ST %.4f | %s CT %.4f ST %.4f | upper ST %.4f | chance %.4f | compatible: %s\n",
                  res.lower.self_test.at(EvalTask::kVerification, h).value, to_string(cfg.method.method),
                  res.method.cross_test.at(EvalTask::kVerification, h).value,
                  res.method.self_test.at(EvalTask::kVerification, h).value,
                  res.upper.self_test.at(EvalTask::kVerification, h).value, res.chance_tar, ok ? "yes" : "no");
      std::printf("wrote %s\n", cfg.run_dir().string().c_str());
    } else if (*alpha) {
      const RunConfig cfg = resolve(alpha_f);
      print_points(run_alpha_ablation(cfg), cfg.eval.headline);
    } else if (*dn) {
      const RunConfig cfg = resolve(denoise_f);
      print_points(run_denoise_ablation(cfg), cfg.eval.headline);
    } else if (*seq) {
      const RunConfig cfg = resolve(seq_f);
      const SequentialResult res = run_sequential(cfg);
      std::printf("TAR@FAR=%g  rows: query, columns: gallery\n", cfg.eval.headline);
      for (std::size_t q = 0; q < 3; ++q) {
        std::printf("phi%zu  %.4f  %.4f  %.4f\n", q + 1, res.verification(q, 0), res.verification(q, 1),
                    res.verification(q, 2));
      }
    } else if (*ev) {
      const RunConfig cfg = resolve(eval_f);
      const EmbeddingModel old = load_model(old_path);
      const EmbeddingModel upd = load_model(new_path);
      const EvalReport rep = evaluate_models(cfg, old.backbone, upd.backbone);
      ReportTable table;
      table.headline = cfg.eval.headline;
      const Workspace ws = prepare_workspace(cfg);
      table.rows.push_back({"old", run_lower_bound(old.backbone, ws.protocol, ws.eval, cfg.eval.settings()), false});
      table.rows.push_back({"new", rep, true});
      ensure_dir(cfg.run_dir());
      write_file(cfg.run_dir() / "report.csv", report_csv(table));
      const std::string md = report_markdown(table, "Stored model evaluation");
      write_file(cfg.run_dir() / "report.md", md);
      std::fputs(md.c_str(), stdout);
    } else if (*sc) {
      const RunConfig cfg = resolve(scatter_f);
      Matrix feats;
      std::vector<std::uint32_t> labels;
      if (!sc_cache.empty()) {
        const OldFeatureCache cache = load_cache(sc_cache);
        feats = cache.features;
        labels = cache.labels;
      } else {
        const LabeledDataset ds = sc_data.empty() ? prepare_workspace(cfg).eval : load_dataset(sc_data);
        labels = ds.labels;
        if (sc_model.empty()) {
          feats = ds.features;
        } else {
          const EmbeddingModel m = load_model(sc_model);
          feats = embed_eval_set(m.backbone, ds);
        }
      }
      export_scatter(feats, labels, sc_output);
      std::printf("wrote %s\n", sc_output.c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "bctlab: %s: %s\n", to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "bctlab: %s\n", e.what());
    return 4;
  }
  return 0;
}
