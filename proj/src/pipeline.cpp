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


#include "bctlab/pipeline.hpp"

#include <fstream>
#include <iterator>
#include <numeric>
#include <utility>

#include "binary_io.hpp"
#include "bctlab/compatible.hpp"
#include "bctlab/error.hpp"
#include "bctlab/model_io.hpp"
#include "bctlab/report.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {
namespace {

// Rethrows with the failing stage prefixed to the message.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.code(), std::string(name) + ": " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

void make_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
}

bool is_open_scenario(Scenario s) { return s == Scenario::kOpenData || s == Scenario::kOpenClass; }

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

OldFeatureCache make_cache(const RunConfig& cfg, const Workspace& ws, const Backbone& old,
                           std::span<const std::size_t> indices, const MethodConfig& method,
                           double cache_noise) {
  if (cache_noise <= 0.0) return prepare_cache(old, ws.train, indices, method);
  OldFeatureCache cache = build_cache(old, ws.train, indices);
  cache = inject_feature_noise(std::move(cache), cache_noise, stage_seed(cfg, SeedTag::kCacheNoise));
  if (method.method == Method::kMixBct && method.denoise) {
    cache = denoise(std::move(cache), method.exclusion_fraction);
  }
  return cache;
}

TrainedModel train_against(const ModelBlock& block, const LabeledDataset& ds,
                           std::span<const std::size_t> indices, const OldFeatureCache& cache,
                           const MethodConfig& method, std::uint64_t init_seed, std::uint64_t head_seed,
                           std::uint64_t train_seed) {
  TrainedModel m;
  m.labels = LabelMap(classes_of(ds, indices));
  m.backbone = Backbone::random(block.widths, init_seed);
  m.head = Classifier::random(m.labels.num_classes(), block.embed_dim(), block.loss, head_seed, block.scale,
                              block.margin);
  TrainConfig tc = block.train;
  tc.seed = train_seed;
  m.log = train_compatible(ds, indices, m.labels, cache, m.backbone, m.head, method, tc);
  return m;
}

void write_method_artifacts(const std::filesystem::path& dir, const Backbone& old, const MethodRun& run) {
  save_model(EmbeddingModel{old, std::nullopt}, dir / "old.model");
  save_cache(run.cache, dir / "cache.bctf");
  save_model(EmbeddingModel{run.model.backbone, run.model.head}, dir / "new.model");
  write_text(dir / "train.csv", train_log_csv(run.model.log));
}

}  // namespace

Workspace prepare_workspace(const RunConfig& cfg) {
  cfg.validate();
  Workspace ws;
  const auto& d = cfg.dataset;
  if (d.path.empty()) {
    ws.train = generate_synthetic({d.num_classes, d.per_class, d.dim, d.center_radius, d.within_std,
                                   stage_seed(cfg, SeedTag::kTrainData)});
  } else {
    ws.train = load_dataset(d.path);
  }
  if (d.eval_path.empty()) {
    ws.eval = generate_synthetic({d.num_classes, d.eval_per_class, static_cast<int>(ws.train.dim),
                                  d.center_radius, d.within_std, stage_seed(cfg, SeedTag::kEvalData)});
  } else {
    ws.eval = load_dataset(d.eval_path);
  }
  require(ws.train.dim == cfg.old_model.widths.front() && ws.eval.dim == ws.train.dim, ErrorCode::kConfig,
          "dataset dimension does not match the model input width");
  ProtocolSpec ps;
  ps.holdout_fraction = cfg.eval.holdout_fraction;
  ps.distractor_fraction = cfg.eval.distractor_fraction;
  ps.pairs_per_class = cfg.eval.pairs_per_class;
  ps.gallery_size = cfg.eval.gallery_size;
  ps.seed = stage_seed(cfg, SeedTag::kProtocol);
  ws.protocol = build_eval_protocol(ws.eval, ps);
  ws.split = split_scenario(ws.train, cfg.scenario, cfg.fraction);
  return ws;
}

TrainedModel train_plain(const ModelBlock& block, const LabeledDataset& ds,
                         std::span<const std::size_t> indices, std::uint64_t init_seed,
                         std::uint64_t head_seed, std::uint64_t train_seed) {
  TrainedModel m;
  m.labels = LabelMap(classes_of(ds, indices));
  m.backbone = Backbone::random(block.widths, init_seed);
  m.head = Classifier::random(m.labels.num_classes(), block.embed_dim(), block.loss, head_seed, block.scale,
                              block.margin);
  TrainConfig tc = block.train;
  tc.seed = train_seed;
  m.log = train_classifier(ds, indices, m.labels, m.backbone, m.head, tc);
  return m;
}

TrainedModel train_old(const RunConfig& cfg, const Workspace& ws) {
  return train_plain(cfg.old_model, ws.train, ws.split.old_train, stage_seed(cfg, SeedTag::kOldInit),
                     stage_seed(cfg, SeedTag::kOldHead), stage_seed(cfg, SeedTag::kOldTrain));
}

MethodRun run_method(const RunConfig& cfg, const Workspace& ws, const Backbone& old,
                     const MethodConfig& method, double cache_noise) {
  MethodRun run;
  run.cache = stage("cache", [&] { return make_cache(cfg, ws, old, ws.split.new_train, method, cache_noise); });
  run.model = stage("train-new", [&] {
    return train_against(cfg.new_model, ws.train, ws.split.new_train, run.cache, method,
                         stage_seed(cfg, SeedTag::kNewInit), stage_seed(cfg, SeedTag::kNewHead),
                         stage_seed(cfg, SeedTag::kNewTrain));
  });
  run.report = stage("evaluate", [&] {
    EvalReport r = run_eval(old, run.model.backbone, ws.protocol, ws.eval, cfg.eval.settings());
    r.constraints = audit_constraints(embed_eval_set(run.model.backbone, ws.eval), embed_eval_set(old, ws.eval),
                                      ws.eval.labels, cfg.eval.audit_trials, stage_seed(cfg, SeedTag::kAudit));
    r.has_constraints = true;
    return r;
  });
  return run;
}

ScenarioResult run_scenario(const RunConfig& cfg, bool write) {
  const Workspace ws = stage("prepare", [&] { return prepare_workspace(cfg); });
  const auto settings = cfg.eval.settings();
  const std::filesystem::path dir = cfg.run_dir();
  if (write) stage("output", [&] { make_dir(dir); });

  ScenarioResult res;
  const TrainedModel old = stage("train-old", [&] { return train_old(cfg, ws); });
  res.lower = stage("evaluate-lower", [&] { return run_lower_bound(old.backbone, ws.protocol, ws.eval, settings); });

  res.upper = stage("train-upper", [&] {
    const auto all = all_indices(ws.train.size());
    const TrainedModel up = train_plain(cfg.new_model, ws.train, all, stage_seed(cfg, SeedTag::kNewInit),
                                        stage_seed(cfg, SeedTag::kNewHead), stage_seed(cfg, SeedTag::kNewTrain));
    return run_lower_bound(up.backbone, ws.protocol, ws.eval, settings);
  });
  if (is_open_scenario(cfg.scenario)) {
    res.upper_prime = stage("train-upper-prime", [&] {
      const TrainedModel up =
          train_plain(cfg.new_model, ws.train, ws.split.new_train, stage_seed(cfg, SeedTag::kNewInit),
                      stage_seed(cfg, SeedTag::kNewHead), stage_seed(cfg, SeedTag::kNewTrain));
      return run_lower_bound(up.backbone, ws.protocol, ws.eval, settings);
    });
  }

  const MethodRun run = run_method(cfg, ws, old.backbone, cfg.method);
  res.method = run.report;
  res.method_log = run.model.log;
  res.chance_tar = stage("chance", [&] {
    return permutation_chance_tar(embed_eval_set(old.backbone, ws.eval), embed_eval_set(run.model.backbone, ws.eval),
                                  ws.protocol, settings.headline, stage_seed(cfg, SeedTag::kChance));
  });

  if (write) {
    stage("output", [&] {
      write_text(dir / "config.resolved", resolved_text(cfg));
      write_method_artifacts(dir, old.backbone, run);
      ReportTable table;
      table.headline = settings.headline;
      table.chance_tar = res.chance_tar;
      table.rows.push_back({"lower", res.lower, true});
      if (res.upper_prime) table.rows.push_back({"upper-prime", *res.upper_prime, false});
      table.rows.push_back({"upper", res.upper, false});
      table.rows.push_back({to_string(cfg.method.method), res.method, true});
      write_text(dir / "report.csv", report_csv(table));
      write_text(dir / "report.md",
                 report_markdown(table, std::string(to_string(cfg.scenario)) + " / " + to_string(cfg.method.method)));
    });
  }
  return res;
}

namespace {

std::vector<AblationPoint> run_points(const RunConfig& cfg, std::vector<AblationPoint> points, bool write,
                                      const std::string& csv_name) {
  const Workspace ws = stage("prepare", [&] { return prepare_workspace(cfg); });
  const TrainedModel old = stage("train-old", [&] { return train_old(cfg, ws); });
  const std::filesystem::path dir = cfg.run_dir();
  if (write) {
    stage("output", [&] {
      make_dir(dir);
      write_text(dir / "config.resolved", resolved_text(cfg));
      save_model(EmbeddingModel{old.backbone, std::nullopt}, dir / "old.model");
    });
  }
  for (auto& p : points) {
    try {
      const MethodRun run = run_method(cfg, ws, old.backbone, p.method, p.cache_noise);
      p.report = run.report;
      if (write) {
        const auto sub = dir / p.label;
        stage("output", [&] {
          make_dir(sub);
          write_method_artifacts(sub, old.backbone, run);
          ReportTable table;
          table.headline = cfg.eval.headline;
          table.rows.push_back({p.label, run.report, true});
          write_text(sub / "report.csv", report_csv(table));
          p.old_model_hash = file_hash(sub / "old.model");
        });
      }
      p.ok = true;
    } catch (const Error& e) {
      p.ok = false;
      p.error = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
  if (write) stage("output", [&] { write_text(dir / csv_name, ablation_csv(points, cfg.eval.headline)); });
  return points;
}

std::string alpha_label(double a) { return "alpha-" + format_number(a); }

}  // namespace

std::vector<AblationPoint> run_alpha_ablation(const RunConfig& cfg, bool write) {
  std::vector<AblationPoint> points;
  AblationPoint base;
  base.label = "none";
  base.method = cfg.method;
  base.method.method = Method::kNoCompat;
  points.push_back(base);
  for (double a : cfg.alpha_grid) {
    AblationPoint p;
    p.label = alpha_label(a);
    p.method = cfg.method;
    p.method.method = Method::kMixBct;
    p.method.alpha = a;
    points.push_back(p);
  }
  return run_points(cfg, std::move(points), write, "ablation-alpha.csv");
}

std::vector<AblationPoint> run_denoise_ablation(const RunConfig& cfg, bool write) {
  std::vector<AblationPoint> points;
  for (bool on : {true, false}) {
    AblationPoint p;
    p.label = on ? "denoise-on" : "denoise-off";
    p.method = cfg.method;
    p.method.method = Method::kMixBct;
    p.method.denoise = on;
    p.cache_noise = cfg.cache_noise;
    points.push_back(p);
  }
  return run_points(cfg, std::move(points), write, "ablation-denoise.csv");
}

std::string ablation_csv(const std::vector<AblationPoint>& points, double headline) {
  std::string out =
      "label,method,alpha,denoise,cache_noise,status,ct_verification,st_verification,ct_identification,"
      "st_identification,avg,old_model_hash,error\n";
  for (const auto& p : points) {
    out += p.label + "," + to_string(p.method.method) + "," + format_number(p.method.alpha) + "," +
           (p.method.denoise ? "on" : "off") + "," + format_number(p.cache_noise) + ",";
    if (p.ok) {
      const auto& r = p.report;
      auto v = [&](const ProtocolResults& res, EvalTask t) { return format_number(res.at(t, headline).value); };
      out += "ok," + v(r.cross_test, EvalTask::kVerification) + "," + v(r.self_test, EvalTask::kVerification) + "," +
             v(r.cross_test, EvalTask::kIdentification) + "," + v(r.self_test, EvalTask::kIdentification) + "," +
             format_number(r.avg) + ",";
    } else {
      out += "failed,,,,,,";
    }
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(p.old_model_hash));
    std::string err = p.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ';';
    }
    out += std::string(hash) + "," + err + "\n";
  }
  return out;
}

SequentialResult cross_matrix(std::span<const Backbone> chain, const Workspace& ws,
                              const EvalSettings& settings) {
  const std::size_t n = chain.size();
  SequentialResult res;
  res.verification = Matrix(n, n);
  res.identification = Matrix(n, n);
  std::vector<Matrix> feats;
  for (const auto& b : chain) feats.push_back(embed_eval_set(b, ws.eval));
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t g = 0; g < n; ++g) {
      res.pair_results.push_back(evaluate_pairing(feats[g], feats[q], ws.protocol, ws.eval, settings));
      res.verification(q, g) = res.pair_results.back().at(EvalTask::kVerification, settings.headline).value;
      res.identification(q, g) = res.pair_results.back().at(EvalTask::kIdentification, settings.headline).value;
    }
  }
  return res;
}

SequentialResult run_sequential(const RunConfig& cfg, bool write) {
  const Workspace ws = stage("prepare", [&] { return prepare_workspace(cfg); });
  const auto settings = cfg.eval.settings();
  const std::filesystem::path dir = cfg.run_dir();
  if (write) stage("output", [&] { make_dir(dir); });

  auto prefix = [&](double f) {
    const std::size_t k = ceil_count(f, ws.train.num_classes);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < ws.train.size(); ++i) {
      if (ws.train.labels[i] < k) idx.push_back(i);
    }
    return idx;
  };
  auto seed = [&](std::uint64_t model, std::uint64_t what) {
    return derive_seed(cfg.seed, {static_cast<std::uint64_t>(SeedTag::kChain), model, what});
  };

  MethodConfig mix = cfg.method;
  mix.method = Method::kMixBct;

  std::vector<Backbone> chain;
  {
    const auto idx = prefix(cfg.chain_fractions[0]);
    chain.push_back(stage("train-phi1", [&] {
      return train_plain(cfg.old_model, ws.train, idx, seed(1, 1), seed(1, 2), seed(1, 3)).backbone;
    }));
  }
  for (std::uint64_t k = 1; k < 3; ++k) {
    const auto idx = prefix(cfg.chain_fractions[k]);
    const std::string name = "train-phi" + std::to_string(k + 1);
    chain.push_back(stage(name.c_str(), [&] {
      const OldFeatureCache cache = prepare_cache(chain.back(), ws.train, idx, mix);
      return train_against(cfg.new_model, ws.train, idx, cache, mix, seed(k + 1, 1), seed(k + 1, 2), seed(k + 1, 3))
          .backbone;
    }));
  }

  const SequentialResult res = stage("evaluate", [&] { return cross_matrix(chain, ws, settings); });

  if (write) {
    stage("output", [&] {
      write_text(dir / "config.resolved", resolved_text(cfg));
      for (std::size_t k = 0; k < 3; ++k) {
        save_model(EmbeddingModel{chain[k], std::nullopt}, dir / ("phi" + std::to_string(k + 1) + ".model"));
      }
      std::string csv = "query_model,gallery_model,metric,operating_point,value,achieved_operating_point\n";
      std::string md = "# Sequential compatibility\n\nRows: query model. Columns: gallery model. Operating point " +
                       format_number(settings.headline) + ".\n";
      for (int t = 0; t < 2; ++t) {
        const Matrix& m = t == 0 ? res.verification : res.identification;
        md += std::string("\n## ") + (t == 0 ? "TAR@FAR" : "TPIR@FPIR") + "\n\n| query \\ gallery | phi1 | phi2 | phi3 |\n|---|---|---|---|\n";
        for (std::size_t q = 0; q < 3; ++q) {
          md += "| phi" + std::to_string(q + 1);
          for (std::size_t g = 0; g < 3; ++g) {
            char buf[16];
            std::snprintf(buf, sizeof buf, "%.4f", m(q, g));
            md += std::string(" | ") + buf;
          }
          md += " |\n";
        }
      }
      for (std::size_t q = 0; q < 3; ++q) {
        for (std::size_t g = 0; g < 3; ++g) {
          const auto& r = res.pair_results[q * 3 + g];
          auto rows = [&](const char* metric, const std::vector<OperatingPoint>& pts) {
            for (const auto& p : pts) {
              csv += "phi" + std::to_string(q + 1) + ",phi" + std::to_string(g + 1) + "," + metric + "," +
                     format_number(p.requested) + ",";
              csv += p.supported ? format_number(p.value) + "," + format_number(p.achieved) : "unsupported,";
              csv += "\n";
            }
          };
          rows("TAR", r.verification);
          rows("TPIR", r.identification);
        }
      }
      write_text(dir / "sequential.csv", csv);
      write_text(dir / "sequential.md", md);
    });
  }
  return res;
}

EvalReport evaluate_models(const RunConfig& cfg, const Backbone& old, const Backbone& updated) {
  const Workspace ws = stage("prepare", [&] { return prepare_workspace(cfg); });
  require(old.input_dim() == ws.eval.dim && updated.input_dim() == ws.eval.dim, ErrorCode::kConfig,
          "model input width does not match the evaluation set");
  require(old.embed_dim() == updated.embed_dim(), ErrorCode::kConfig, "models embed into different dimensions");
  return stage("evaluate", [&] {
    EvalReport r = run_eval(old, updated, ws.protocol, ws.eval, cfg.eval.settings());
    r.constraints = audit_constraints(embed_eval_set(updated, ws.eval), embed_eval_set(old, ws.eval), ws.eval.labels,
                                      cfg.eval.audit_trials, stage_seed(cfg, SeedTag::kAudit));
    r.has_constraints = true;
    return r;
  });
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open for reading: " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return io::fnv1a(bytes);
}

}  // namespace bctlab
