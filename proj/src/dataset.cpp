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

#include "bctlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "bctlab/error.hpp"
#include "bctlab/rng.hpp"

namespace bctlab {
namespace {

constexpr std::uint32_t kDatasetVersion = 1;
constexpr double kCountSlack = 1e-9;

io::Writer serialize(const LabeledDataset& ds) {
  io::Writer w;
  w.magic("BCTD");
  w.put<std::uint32_t>(kDatasetVersion);
  w.put<std::uint64_t>(ds.size());
  w.put<std::uint32_t>(ds.dim);
  w.put<std::uint32_t>(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    w.put<std::uint32_t>(ds.labels[i]);
    w.put_f64s(ds.features.row(i));
  }
  return w;
}

// Samples of each class in index order.
std::vector<std::vector<std::size_t>> members_by_class(const LabeledDataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  return by_class;
}

}  // namespace

void LabeledDataset::validate() const {
  require(dim > 0 && num_classes > 0, ErrorCode::kInvalidArgument, "dataset: empty shape");
  require(features.rows() == labels.size() && features.cols() == dim,
          ErrorCode::kInvalidArgument, "dataset: feature matrix does not match labels/dim");
  for (auto l : labels) {
    require(l < num_classes, ErrorCode::kInvalidArgument, "dataset: label out of range");
  }
}

std::uint64_t LabeledDataset::fingerprint() const { return io::fnv1a(serialize(*this).bytes()); }

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  require(spec.num_classes >= 2 && spec.per_class >= 2 && spec.dim >= 2,
          ErrorCode::kInvalidArgument, "generate_synthetic: need >= 2 classes, samples, dims");
  require(spec.within_std > 0.0 && spec.center_radius > 0.0, ErrorCode::kInvalidArgument,
          "generate_synthetic: radius and std must be positive");

  const auto classes = static_cast<std::size_t>(spec.num_classes);
  const auto per_class = static_cast<std::size_t>(spec.per_class);
  const auto dim = static_cast<std::size_t>(spec.dim);
  Rng rng(spec.seed);

  Matrix centers(classes, dim);
  for (std::size_t c = 0; c < classes; ++c) {
    auto row = centers.row(c);
    double n = 0.0;
    while (n == 0.0) {
      for (double& v : row) v = rng.normal();
      n = norm2(row);
    }
    for (double& v : row) v *= spec.center_radius / n;
  }

  LabeledDataset ds;
  ds.dim = static_cast<std::uint32_t>(dim);
  ds.num_classes = static_cast<std::uint32_t>(classes);
  ds.features = Matrix(classes * per_class, dim);
  ds.labels.resize(classes * per_class);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t k = 0; k < per_class; ++k) {
      const std::size_t i = c * per_class + k;
      ds.labels[i] = static_cast<std::uint32_t>(c);
      auto row = ds.features.row(i);
      for (std::size_t d = 0; d < dim; ++d) row[d] = centers(c, d) + spec.within_std * rng.normal();
    }
  }
  return ds;
}

LabeledDataset subset(const LabeledDataset& ds, std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.dim = ds.dim;
  out.num_classes = ds.num_classes;
  out.features = Matrix(indices.size(), ds.dim);
  out.labels.resize(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    require(indices[r] < ds.size(), ErrorCode::kInvalidArgument, "subset: index out of range");
    std::ranges::copy(ds.features.row(indices[r]), out.features.row(r).begin());
    out.labels[r] = ds.labels[indices[r]];
  }
  return out;
}

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kExtendedData: return "extended-data";
    case Scenario::kExtendedClass: return "extended-class";
    case Scenario::kOpenData: return "open-data";
    case Scenario::kOpenClass: return "open-class";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& s) {
  for (auto sc : {Scenario::kExtendedData, Scenario::kExtendedClass, Scenario::kOpenData,
                  Scenario::kOpenClass}) {
    if (s == to_string(sc)) return sc;
  }
  fail(ErrorCode::kInvalidArgument, "unknown scenario: " + s);
}

std::size_t ceil_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - kCountSlack));
}

std::size_t floor_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + kCountSlack));
}

ScenarioSplit split_scenario(const LabeledDataset& ds, Scenario scenario, double fraction) {
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kInvalidArgument,
          "split_scenario: fraction must be in (0,1)");
  ds.validate();
  const auto by_class = members_by_class(ds);
  for (const auto& members : by_class) {
    require(members.size() >= 2, ErrorCode::kInvalidSplit,
            "split_scenario: every class needs at least 2 samples");
  }

  ScenarioSplit split;
  split.scenario = scenario;
  split.fraction = fraction;
  split.parent_fingerprint = ds.fingerprint();
  split.parent_size = ds.size();

  const bool by_data =
      scenario == Scenario::kExtendedData || scenario == Scenario::kOpenData;
  const std::size_t old_classes = ceil_count(fraction, ds.num_classes);

  for (std::uint32_t c = 0; c < ds.num_classes; ++c) {
    const auto& members = by_class[c];
    if (by_data) {
      const std::size_t n_old = ceil_count(fraction, members.size());
      if (scenario == Scenario::kOpenData && n_old >= members.size()) {
        fail(ErrorCode::kInvalidSplit, "split_scenario: class " + std::to_string(c) +
                                           " leaves no samples for the new side");
      }
      for (std::size_t k = 0; k < members.size(); ++k) {
        if (k < n_old) {
          split.old_train.push_back(members[k]);
        } else if (scenario == Scenario::kOpenData) {
          split.new_train.push_back(members[k]);
        }
      }
    } else {
      const bool old_side = c < old_classes;
      if (old_side) split.old_train.insert(split.old_train.end(), members.begin(), members.end());
      if (!old_side && scenario == Scenario::kOpenClass) {
        split.new_train.insert(split.new_train.end(), members.begin(), members.end());
      }
    }
  }
  if (scenario == Scenario::kOpenClass) {
    require(old_classes < ds.num_classes, ErrorCode::kInvalidSplit,
            "split_scenario: no classes left for the new side");
  }
  if (scenario == Scenario::kExtendedData || scenario == Scenario::kExtendedClass) {
    split.new_train.resize(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) split.new_train[i] = i;
  }
  std::ranges::sort(split.old_train);
  std::ranges::sort(split.new_train);
  return split;
}

std::vector<std::uint32_t> classes_of(const LabeledDataset& ds,
                                      std::span<const std::size_t> indices) {
  std::vector<std::uint32_t> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(ds.labels.at(i));
  std::ranges::sort(out);
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

LabelMap::LabelMap(std::vector<std::uint32_t> classes) : classes_(std::move(classes)) {
  std::ranges::sort(classes_);
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
}

bool LabelMap::contains(std::uint32_t label) const {
  return std::ranges::binary_search(classes_, label);
}

std::uint32_t LabelMap::row_of(std::uint32_t label) const {
  auto it = std::ranges::lower_bound(classes_, label);
  if (it == classes_.end() || *it != label) {
    fail(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " not in label map");
  }
  return static_cast<std::uint32_t>(it - classes_.begin());
}

std::vector<std::uint32_t> EvalProtocol::gallery_classes() const {
  std::vector<std::uint32_t> out;
  for (const auto& g : gallery) out.push_back(g.label);
  return out;
}

EvalProtocol build_eval_protocol(const LabeledDataset& ds, const ProtocolSpec& spec) {
  ds.validate();
  require(spec.holdout_fraction > 0.0 && spec.holdout_fraction <= 1.0,
          ErrorCode::kInvalidArgument, "protocol: holdout_fraction must be in (0,1]");
  require(spec.distractor_fraction >= 0.0 && spec.distractor_fraction < 1.0,
          ErrorCode::kInvalidArgument, "protocol: distractor_fraction must be in [0,1)");
  require(spec.pairs_per_class >= 1 && spec.gallery_size >= 1, ErrorCode::kInvalidArgument,
          "protocol: pairs_per_class and gallery_size must be positive");

  std::vector<std::vector<std::size_t>> holdout;
  for (auto& members : members_by_class(ds)) {
    if (members.empty()) continue;
    members.resize(ceil_count(spec.holdout_fraction, members.size()));
    holdout.push_back(std::move(members));
  }
  require(holdout.size() >= 2, ErrorCode::kInvalidProtocol, "protocol: need at least 2 classes");
  for (const auto& members : holdout) {
    require(members.size() >= 2, ErrorCode::kInvalidProtocol,
            "protocol: holdout too small to form genuine pairs");
  }

  Rng rng(spec.seed);
  EvalProtocol protocol;

  const auto pairs_per_class = static_cast<std::size_t>(spec.pairs_per_class);
  for (std::size_t c = 0; c < holdout.size(); ++c) {
    const auto& own = holdout[c];
    for (std::size_t p = 0; p < pairs_per_class; ++p) {
      const std::size_t i = rng.below(own.size());
      std::size_t j = rng.below(own.size() - 1);
      if (j >= i) ++j;
      protocol.pairs.push_back({own[i], own[j], true});
    }
    for (std::size_t p = 0; p < pairs_per_class; ++p) {
      std::size_t other = rng.below(holdout.size() - 1);
      if (other >= c) ++other;
      const auto& theirs = holdout[other];
      protocol.pairs.push_back(
          {own[rng.below(own.size())], theirs[rng.below(theirs.size())], false});
    }
  }

  std::vector<std::size_t> order(holdout.size());
  for (std::size_t c = 0; c < order.size(); ++c) order[c] = c;
  rng.shuffle(order);
  const std::size_t distractors = floor_count(spec.distractor_fraction, holdout.size());
  require(distractors < holdout.size(), ErrorCode::kInvalidProtocol,
          "protocol: every class would be a distractor");
  std::vector<bool> is_distractor(holdout.size(), false);
  for (std::size_t k = 0; k < distractors; ++k) is_distractor[order[k]] = true;

  const auto gallery_size = static_cast<std::size_t>(spec.gallery_size);
  for (std::size_t c = 0; c < holdout.size(); ++c) {
    auto members = holdout[c];
    if (is_distractor[c]) {
      for (auto i : members) protocol.queries.push_back({i, false});
      continue;
    }
    require(members.size() > gallery_size, ErrorCode::kInvalidProtocol,
            "protocol: class too small for a gallery template plus a query");
    rng.shuffle(members);
    GalleryEntry entry;
    entry.label = ds.labels[members.front()];
    entry.members.assign(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(gallery_size));
    std::ranges::sort(entry.members);
    protocol.gallery.push_back(std::move(entry));
    std::vector<std::size_t> rest(members.begin() + static_cast<std::ptrdiff_t>(gallery_size), members.end());
    std::ranges::sort(rest);
    for (auto i : rest) protocol.queries.push_back({i, true});
  }
  std::ranges::sort(protocol.queries, {}, &Query::index);
  return protocol;
}

void save_dataset(const LabeledDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  serialize(ds).write_to(path);
}

LabeledDataset load_dataset(const std::filesystem::path& path) {
  auto r = io::Reader::from_file(path);
  r.expect_magic("BCTD");
  const auto version = r.get<std::uint32_t>();
  if (version != kDatasetVersion) r.corrupt("unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint64_t>();
  LabeledDataset ds;
  ds.dim = r.get<std::uint32_t>();
  ds.num_classes = r.get<std::uint32_t>();
  if (ds.dim == 0 || ds.num_classes == 0) r.corrupt("zero dim or class count");
  const std::uint64_t record = 4 + 8ULL * ds.dim;
  if (count > r.remaining() / record) r.corrupt("truncated payload");
  ds.features = Matrix(count, ds.dim);
  ds.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.labels[i] = r.get<std::uint32_t>();
    if (ds.labels[i] >= ds.num_classes) r.corrupt("label exceeds class count");
    r.get_f64s(ds.features.row(i));
  }
  r.expect_end();
  return ds;
}

LabeledDataset import_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::kCorruptFile, path.string() + ": missing header");

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "label") {
    fail(ErrorCode::kCorruptFile, path.string() + ": header must start with 'label'");
  }
  for (std::size_t d = 1; d < header.size(); ++d) {
    if (header[d] != "f" + std::to_string(d - 1)) {
      fail(ErrorCode::kCorruptFile, path.string() + ": unexpected column " + header[d]);
    }
  }
  const std::size_t dim = header.size() - 1;

  std::vector<std::uint32_t> labels;
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        if (cols == 0) {
          const long v = std::stol(cell);
          if (v < 0) throw std::out_of_range("negative");
          labels.push_back(static_cast<std::uint32_t>(v));
        } else {
          values.push_back(std::stod(cell));
        }
      } catch (const std::exception&) {
        fail(ErrorCode::kCorruptFile,
             path.string() + ":" + std::to_string(line_no) + ": bad value '" + cell + "'");
      }
      ++cols;
    }
    if (cols != dim + 1) {
      fail(ErrorCode::kCorruptFile, path.string() + ":" + std::to_string(line_no) +
                                        ": expected " + std::to_string(dim + 1) + " columns");
    }
  }

  LabeledDataset ds;
  ds.dim = static_cast<std::uint32_t>(dim);
  ds.labels = std::move(labels);
  ds.num_classes = ds.labels.empty() ? 1 : *std::ranges::max_element(ds.labels) + 1;
  ds.features = Matrix(ds.labels.size(), dim);
  std::ranges::copy(values, ds.features.values().begin());
  return ds;
}

}  // namespace bctlab
