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

#include "bctlab/model_io.hpp"

#include "binary_io.hpp"
#include "bctlab/error.hpp"

namespace bctlab {
namespace {

constexpr std::uint32_t kModelVersion = 1;

enum class ClassifierTag : std::uint8_t { kNone = 0, kPlain = 1, kAngular = 2 };

}  // namespace

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  const auto& layers = model.backbone.layers();
  require(!layers.empty(), ErrorCode::kInvalidArgument, "save_model: empty backbone");
  io::Writer w;
  w.magic("BCTM");
  w.put<std::uint32_t>(kModelVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(layers.size()));
  for (const auto& layer : layers) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(layer.weight.cols()));
  }
  for (const auto& layer : layers) {
    w.put_f64s(layer.weight.values());
    w.put_f64s(layer.bias);
  }
  if (!model.classifier) {
    w.put<std::uint8_t>(static_cast<std::uint8_t>(ClassifierTag::kNone));
  } else {
    const auto& cls = *model.classifier;
    if (cls.kind == LossKind::kAngularMargin) {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(ClassifierTag::kAngular));
      w.put<double>(cls.scale);
      w.put<double>(cls.margin);
    } else {
      w.put<std::uint8_t>(static_cast<std::uint8_t>(ClassifierTag::kPlain));
    }
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cls.weights.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(cls.weights.cols()));
    w.put_f64s(cls.weights.values());
  }
  w.write_to(path);
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  auto r = io::Reader::from_file(path);
  r.expect_magic("BCTM");
  const auto version = r.get<std::uint32_t>();
  if (version != kModelVersion) r.corrupt("unsupported version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>();
  if (count == 0) r.corrupt("no layers");
  if (count > r.remaining() / 8) r.corrupt("truncated payload");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(count);
  for (auto& [out, in] : shapes) {
    out = r.get<std::uint32_t>();
    in = r.get<std::uint32_t>();
    if (out == 0 || in == 0) r.corrupt("zero layer width");
  }
  std::vector<DenseLayer> layers;
  for (auto [out, in] : shapes) {
    const std::uint64_t need = (std::uint64_t{out} * in + out) * 8;
    if (need > r.remaining()) r.corrupt("truncated payload");
    DenseLayer layer{Matrix(out, in), std::vector<double>(out)};
    r.get_f64s(layer.weight.values());
    r.get_f64s(layer.bias);
    layers.push_back(std::move(layer));
  }
  EmbeddingModel model;
  try {
    model.backbone = Backbone(std::move(layers));
  } catch (const Error& e) {
    r.corrupt(e.what());
  }
  const auto tag = static_cast<ClassifierTag>(r.get<std::uint8_t>());
  if (tag != ClassifierTag::kNone) {
    Classifier cls;
    if (tag == ClassifierTag::kAngular) {
      cls.kind = LossKind::kAngularMargin;
      cls.scale = r.get<double>();
      cls.margin = r.get<double>();
    } else if (tag == ClassifierTag::kPlain) {
      cls.kind = LossKind::kPlainSoftmax;
    } else {
      r.corrupt("unknown classifier tag");
    }
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (std::uint64_t{rows} * cols * 8 > r.remaining()) r.corrupt("truncated payload");
    if (cols != model.backbone.embed_dim()) r.corrupt("classifier width != embed dim");
    cls.weights = Matrix(rows, cols);
    r.get_f64s(cls.weights.values());
    model.classifier = std::move(cls);
  }
  r.expect_end();
  return model;
}

}  // namespace bctlab
