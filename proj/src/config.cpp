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


#include "bctlab/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <utility>

#include "bctlab/error.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  fail(ErrorCode::kConfig, key + ": expected " + what + ", got '" + value + "'");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  const std::uint64_t u = to_u64(key, v);
  if (u > 1'000'000'000) bad_value(key, v, "an integer below 1e9");
  return static_cast<int>(u);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  bad_value(key, v, "true/false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_double(key, item));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

std::vector<std::size_t> to_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(v)) out.push_back(to_u64(key, item));
  if (out.empty()) bad_value(key, v, "a comma-separated list");
  return out;
}

std::string fmt(double x) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

template <class T>
std::string fmt_list(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

void add_model_keys(std::vector<Key>& keys, const std::string& prefix,
                    ModelBlock RunConfig::*block) {
  auto k = [&](std::string name, auto set, auto get) {
    keys.push_back({prefix + "." + name, set, get});
  };
  k("widths",
    [=](RunConfig& c, const std::string& v) { (c.*block).widths = to_sizes(prefix + ".widths", v); },
    [=](const RunConfig& c) { return fmt_list((c.*block).widths); });
  k("loss",
    [=](RunConfig& c, const std::string& v) {
      try {
        (c.*block).loss = parse_loss_kind(v);
      } catch (const Error&) {
        bad_value(prefix + ".loss", v, "softmax or arcface");
      }
    },
    [=](const RunConfig& c) { return std::string(to_string((c.*block).loss)); });
  k("scale", [=](RunConfig& c, const std::string& v) { (c.*block).scale = to_double(prefix + ".scale", v); },
    [=](const RunConfig& c) { return fmt((c.*block).scale); });
  k("margin", [=](RunConfig& c, const std::string& v) { (c.*block).margin = to_double(prefix + ".margin", v); },
    [=](const RunConfig& c) { return fmt((c.*block).margin); });
  k("lr", [=](RunConfig& c, const std::string& v) { (c.*block).train.lr0 = to_double(prefix + ".lr", v); },
    [=](const RunConfig& c) { return fmt((c.*block).train.lr0); });
  k("momentum",
    [=](RunConfig& c, const std::string& v) { (c.*block).train.momentum = to_double(prefix + ".momentum", v); },
    [=](const RunConfig& c) { return fmt((c.*block).train.momentum); });
  k("weight_decay",
    [=](RunConfig& c, const std::string& v) {
      (c.*block).train.weight_decay = to_double(prefix + ".weight_decay", v);
    },
    [=](const RunConfig& c) { return fmt((c.*block).train.weight_decay); });
  k("batch_size",
    [=](RunConfig& c, const std::string& v) { (c.*block).train.batch_size = to_int(prefix + ".batch_size", v); },
    [=](const RunConfig& c) { return std::to_string((c.*block).train.batch_size); });
  k("epochs", [=](RunConfig& c, const std::string& v) { (c.*block).train.epochs = to_int(prefix + ".epochs", v); },
    [=](const RunConfig& c) { return std::to_string((c.*block).train.epochs); });
}

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    k.push_back({"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64("seed", v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});
    k.push_back({"out", [](RunConfig& c, const std::string& v) { c.out_dir = v; },
                 [](const RunConfig& c) { return c.out_dir; }});
    k.push_back({"run_id", [](RunConfig& c, const std::string& v) { c.run_id = v; },
                 [](const RunConfig& c) { return c.run_id; }});

    k.push_back({"dataset.path", [](RunConfig& c, const std::string& v) { c.dataset.path = v; },
                 [](const RunConfig& c) { return c.dataset.path; }});
    k.push_back({"dataset.eval_path", [](RunConfig& c, const std::string& v) { c.dataset.eval_path = v; },
                 [](const RunConfig& c) { return c.dataset.eval_path; }});
    k.push_back({"dataset.num_classes",
                 [](RunConfig& c, const std::string& v) { c.dataset.num_classes = to_int("dataset.num_classes", v); },
                 [](const RunConfig& c) { return std::to_string(c.dataset.num_classes); }});
    k.push_back({"dataset.per_class",
                 [](RunConfig& c, const std::string& v) { c.dataset.per_class = to_int("dataset.per_class", v); },
                 [](const RunConfig& c) { return std::to_string(c.dataset.per_class); }});
    k.push_back({"dataset.dim", [](RunConfig& c, const std::string& v) { c.dataset.dim = to_int("dataset.dim", v); },
                 [](const RunConfig& c) { return std::to_string(c.dataset.dim); }});
    k.push_back({"dataset.center_radius",
                 [](RunConfig& c, const std::string& v) {
                   c.dataset.center_radius = to_double("dataset.center_radius", v);
                 },
                 [](const RunConfig& c) { return fmt(c.dataset.center_radius); }});
    k.push_back({"dataset.within_std",
                 [](RunConfig& c, const std::string& v) { c.dataset.within_std = to_double("dataset.within_std", v); },
                 [](const RunConfig& c) { return fmt(c.dataset.within_std); }});
    k.push_back({"dataset.eval_per_class",
                 [](RunConfig& c, const std::string& v) {
                   c.dataset.eval_per_class = to_int("dataset.eval_per_class", v);
                 },
                 [](const RunConfig& c) { return std::to_string(c.dataset.eval_per_class); }});

    k.push_back({"scenario.kind",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.scenario = parse_scenario(v);
                   } catch (const Error&) {
                     bad_value("scenario.kind", v, "a scenario name");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.scenario)); }});
    k.push_back({"scenario.fraction",
                 [](RunConfig& c, const std::string& v) { c.fraction = to_double("scenario.fraction", v); },
                 [](const RunConfig& c) { return fmt(c.fraction); }});

    add_model_keys(k, "old", &RunConfig::old_model);
    add_model_keys(k, "new", &RunConfig::new_model);

    k.push_back({"method.name",
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.method.method = parse_method(v);
                   } catch (const Error&) {
                     bad_value("method.name", v, "none, mixbct, l2bct or protobct");
                   }
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.method.method)); }});
    k.push_back({"method.alpha", [](RunConfig& c, const std::string& v) { c.method.alpha = to_double("method.alpha", v); },
                 [](const RunConfig& c) { return fmt(c.method.alpha); }});
    k.push_back({"method.denoise",
                 [](RunConfig& c, const std::string& v) { c.method.denoise = to_bool("method.denoise", v); },
                 [](const RunConfig& c) { return std::string(c.method.denoise ? "true" : "false"); }});
    k.push_back({"method.exclusion_fraction",
                 [](RunConfig& c, const std::string& v) {
                   c.method.exclusion_fraction = to_double("method.exclusion_fraction", v);
                 },
                 [](const RunConfig& c) { return fmt(c.method.exclusion_fraction); }});
    k.push_back({"method.lambda",
                 [](RunConfig& c, const std::string& v) { c.method.lambda = to_double("method.lambda", v); },
                 [](const RunConfig& c) { return fmt(c.method.lambda); }});
    k.push_back({"method.proto_weight",
                 [](RunConfig& c, const std::string& v) {
                   c.method.proto_weight = to_double("method.proto_weight", v);
                 },
                 [](const RunConfig& c) { return fmt(c.method.proto_weight); }});

    k.push_back({"eval.pairs_per_class",
                 [](RunConfig& c, const std::string& v) { c.eval.pairs_per_class = to_int("eval.pairs_per_class", v); },
                 [](const RunConfig& c) { return std::to_string(c.eval.pairs_per_class); }});
    k.push_back({"eval.gallery_size",
                 [](RunConfig& c, const std::string& v) { c.eval.gallery_size = to_int("eval.gallery_size", v); },
                 [](const RunConfig& c) { return std::to_string(c.eval.gallery_size); }});
    k.push_back({"eval.distractor_fraction",
                 [](RunConfig& c, const std::string& v) {
                   c.eval.distractor_fraction = to_double("eval.distractor_fraction", v);
                 },
                 [](const RunConfig& c) { return fmt(c.eval.distractor_fraction); }});
    k.push_back({"eval.holdout_fraction",
                 [](RunConfig& c, const std::string& v) {
                   c.eval.holdout_fraction = to_double("eval.holdout_fraction", v);
                 },
                 [](const RunConfig& c) { return fmt(c.eval.holdout_fraction); }});
    k.push_back({"eval.far", [](RunConfig& c, const std::string& v) { c.eval.far_list = to_doubles("eval.far", v); },
                 [](const RunConfig& c) { return fmt_list(c.eval.far_list); }});
    k.push_back({"eval.fpir", [](RunConfig& c, const std::string& v) { c.eval.fpir_list = to_doubles("eval.fpir", v); },
                 [](const RunConfig& c) { return fmt_list(c.eval.fpir_list); }});
    k.push_back({"eval.headline",
                 [](RunConfig& c, const std::string& v) { c.eval.headline = to_double("eval.headline", v); },
                 [](const RunConfig& c) { return fmt(c.eval.headline); }});
    k.push_back({"eval.audit_trials",
                 [](RunConfig& c, const std::string& v) { c.eval.audit_trials = to_u64("eval.audit_trials", v); },
                 [](const RunConfig& c) { return std::to_string(c.eval.audit_trials); }});

    k.push_back({"ablation.alphas",
                 [](RunConfig& c, const std::string& v) { c.alpha_grid = to_doubles("ablation.alphas", v); },
                 [](const RunConfig& c) { return fmt_list(c.alpha_grid); }});
    k.push_back({"ablation.cache_noise",
                 [](RunConfig& c, const std::string& v) { c.cache_noise = to_double("ablation.cache_noise", v); },
                 [](const RunConfig& c) { return fmt(c.cache_noise); }});
    k.push_back({"sequential.fractions",
                 [](RunConfig& c, const std::string& v) {
                   c.chain_fractions = to_doubles("sequential.fractions", v);
                 },
                 [](const RunConfig& c) { return fmt_list(c.chain_fractions); }});
    return k;
  }();
  return keys;
}

}  // namespace

RunConfig::RunConfig() {
  old_model.widths = {16, 32, 8};
  old_model.loss = LossKind::kPlainSoftmax;
  old_model.train.epochs = 5;
  new_model.widths = {16, 64, 64, 8};
  new_model.loss = LossKind::kAngularMargin;
  new_model.train.epochs = 30;
}

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) fail(ErrorCode::kConfig, msg);
  };
  check(dataset.num_classes >= 2 && dataset.per_class >= 2 && dataset.dim >= 2,
        "dataset: need at least 2 classes, 2 samples per class and dim 2");
  check(dataset.within_std > 0 && dataset.center_radius > 0, "dataset: radius and std must be positive");
  check(dataset.eval_per_class >= 2, "dataset.eval_per_class must be at least 2");
  check(fraction > 0 && fraction < 1, "scenario.fraction must lie in (0, 1)");
  for (const ModelBlock* m : {&old_model, &new_model}) {
    check(m->widths.size() >= 2, "model widths need an input and an output size");
    for (auto w : m->widths) check(w > 0, "model widths must be positive");
    try {
      m->train.validate();
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, e.what());
    }
  }
  check(old_model.embed_dim() == new_model.embed_dim(),
        "old and new models must share one embedding dimension");
  check(old_model.widths.front() == new_model.widths.front(),
        "old and new models must share one input dimension");
  if (dataset.path.empty()) {
    check(old_model.widths.front() == static_cast<std::size_t>(dataset.dim),
          "model input width must equal dataset.dim");
  }
  try {
    method.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, e.what());
  }
  check(eval.pairs_per_class > 0 && eval.gallery_size > 0, "eval: pair and gallery counts must be positive");
  check(eval.audit_trials > 0, "eval.audit_trials must be positive");
  auto in_unit = [](double x) { return x > 0 && x < 1; };
  for (double f : eval.far_list) check(in_unit(f), "eval.far entries must lie in (0, 1)");
  for (double f : eval.fpir_list) check(in_unit(f), "eval.fpir entries must lie in (0, 1)");
  check(in_unit(eval.headline), "eval.headline must lie in (0, 1)");
  bool far_has = false, fpir_has = false;
  for (double f : eval.far_list) far_has |= f == eval.headline;
  for (double f : eval.fpir_list) fpir_has |= f == eval.headline;
  check(far_has && fpir_has, "eval.headline must appear in both eval.far and eval.fpir");
  for (double a : alpha_grid) check(a >= 0 && a <= 1, "ablation.alphas entries must lie in [0, 1]");
  check(cache_noise >= 0 && cache_noise <= 1, "ablation.cache_noise must lie in [0, 1]");
  check(chain_fractions.size() == 3, "sequential.fractions needs three entries");
  for (std::size_t i = 0; i < chain_fractions.size(); ++i) {
    check(chain_fractions[i] > 0 && chain_fractions[i] <= 1, "sequential.fractions must lie in (0, 1]");
    check(i == 0 || chain_fractions[i] > chain_fractions[i - 1], "sequential.fractions must increase");
  }
}

std::string RunConfig::resolved_run_id() const {
  return run_id.empty() ? "run-" + std::to_string(seed) : run_id;
}

std::filesystem::path RunConfig::run_dir() const {
  return std::filesystem::path(out_dir) / resolved_run_id();
}

std::uint64_t stage_seed(const RunConfig& cfg, SeedTag tag) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(tag)});
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : registry()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  fail(ErrorCode::kConfig, "unknown key '" + key + "'");
}

void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorCode::kConfig, origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str(), path.string());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorCode::kConfig, "--set expects key=value, got '" + assignment + "'");
  apply_setting(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string resolved_text(const RunConfig& cfg) {
  std::string out;
  for (const auto& k : registry()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

}  // namespace bctlab
