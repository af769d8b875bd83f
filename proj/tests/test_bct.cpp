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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bctlab/compat_losses.hpp"
#include "bctlab/compatible.hpp"
#include "bctlab/error.hpp"
#include "bctlab/feature_cache.hpp"
#include "bctlab/gradient_check.hpp"
#include "loss_instances.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace bctlab {
namespace {

using testing::LossUnderTest;
using testing::TempDir;
using testing::random_matrix;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

OldFeatureCache one_class_cache(const Matrix& features, std::uint32_t label = 0) {
  OldFeatureCache cache;
  cache.embed_dim = static_cast<std::uint32_t>(features.cols());
  cache.features = features;
  for (std::size_t r = 0; r < features.rows(); ++r) {
    cache.indices.push_back(r);
    cache.labels.push_back(label);
    cache.credible.push_back(1);
  }
  return cache;
}

// ---------------------------------------------------------------------------
// denoise

TEST(Denoise, ZeroFractionKeepsEverything) {
  Rng rng(3);
  auto cache = testing::random_cache(rng, 60, 4);
  std::ranges::fill(cache.credible, std::uint8_t{0});
  const auto out = denoise(cache, 0.0);
  EXPECT_EQ(out.credible_count(), out.size());
}

TEST(Denoise, SingleOutlierIsTheOnlyExclusion) {
  Matrix f(10, 3);
  for (std::size_t r = 0; r < 9; ++r) f(r, 0) = 1.0;
  f(7, 1) = 1.0;
  f(7, 0) = -1.0;  // far from the other nine
  const auto out = denoise(one_class_cache(f), 0.1);
  for (std::size_t r = 0; r < 10; ++r) EXPECT_EQ(out.credible[r], r == 7 ? 0 : 1) << r;
}

TEST(Denoise, TwoClassesDropTwoEach) {
  Rng rng(8);
  OldFeatureCache cache = one_class_cache(random_matrix(40, 5, rng));
  for (std::size_t r = 20; r < 40; ++r) cache.labels[r] = 1;
  const auto out = denoise(cache, 0.1);
  EXPECT_EQ(out.credible, testing::denoise_oracle(cache, 1, 10));
  EXPECT_EQ(std::count(out.credible.begin(), out.credible.begin() + 20, 0), 2);
  EXPECT_EQ(std::count(out.credible.begin() + 20, out.credible.end(), 0), 2);
}

TEST(Denoise, MatchesExhaustiveOracleOnRandomCaches) {
  Rng rng(2026);
  for (int trial = 0; trial < 200; ++trial) {
    const auto cache = testing::random_cache(rng, 200, 10);
    const auto out = denoise(cache, 0.1);
    ASSERT_EQ(out.credible, testing::denoise_oracle(cache, 1, 10)) << "trial " << trial;
    EXPECT_EQ(out.features, cache.features);  // stored features stay raw
  }
}

TEST(Denoise, TiesDropTheLowerIndexFirst) {
  Matrix f(10, 2);
  for (std::size_t r = 0; r < 10; ++r) f(r, 0) = 1.0;
  f(3, 0) = 0.0;
  f(3, 1) = 1.0;
  f(6, 0) = 0.0;
  f(6, 1) = 1.0;  // rows 3 and 6 are equally far
  const auto out = denoise(one_class_cache(f), 0.1);
  EXPECT_EQ(out.credible[3], 0);
  EXPECT_EQ(out.credible[6], 1);
}

TEST(Denoise, RejectsBadFraction) {
  Rng rng(1);
  const auto cache = testing::random_cache(rng, 20, 2);
  EXPECT_EQ(code_of([&] { denoise(cache, -0.1); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { denoise(cache, 1.0); }), ErrorCode::kInvalidArgument);
}

TEST(FeatureNoise, ReplacesExactlyTheRequestedShareWithOtherClasses) {
  Rng rng(4);
  OldFeatureCache cache = one_class_cache(random_matrix(50, 4, rng));
  for (std::size_t r = 0; r < 50; ++r) cache.labels[r] = static_cast<std::uint32_t>(r % 5);
  const auto noisy = inject_feature_noise(cache, 0.2, 9);
  EXPECT_EQ(noisy.labels, cache.labels);
  std::size_t changed = 0;
  for (std::size_t r = 0; r < 50; ++r) {
    const auto row = noisy.features.row(r);
    if (std::ranges::equal(row, cache.features.row(r))) continue;
    ++changed;
    // The donor row belongs to another class.
    bool found = false;
    for (std::size_t s = 0; s < 50; ++s) {
      if (std::ranges::equal(row, cache.features.row(s))) {
        found = true;
        EXPECT_NE(cache.labels[s], cache.labels[r]);
      }
    }
    EXPECT_TRUE(found);
  }
  EXPECT_EQ(changed, 10u);
}

// ---------------------------------------------------------------------------
// mix_batch

struct MixFixture {
  OldFeatureCache cache;
  std::vector<std::size_t> batch;
  Matrix emb;
  std::size_t credible_in_batch = 0;
};

MixFixture mix_fixture(std::size_t b, Rng& rng) {
  MixFixture fx;
  fx.cache = one_class_cache(random_matrix(2 * b, 4, rng));
  for (std::size_t r = 0; r < fx.cache.size(); ++r) {
    fx.cache.indices[r] = 10 + 2 * r;
    fx.cache.labels[r] = static_cast<std::uint32_t>(r % 7);
    fx.cache.credible[r] = rng.below(3) != 0;
  }
  for (std::size_t p = 0; p < b; ++p) {
    const std::size_t r = rng.below(fx.cache.size());
    fx.batch.push_back(fx.cache.indices[r]);
    fx.credible_in_batch += fx.cache.credible[r];
  }
  fx.emb = random_matrix(b, 4, rng);
  return fx;
}

TEST(MixBatch, ReplacementCountsAndPassThroughAcrossTheGrid) {
  Rng rng(77);
  for (std::size_t b : {3u, 8u, 128u}) {
    for (int tenths = 0; tenths <= 5; ++tenths) {
      for (int rep = 0; rep < 10; ++rep) {
        const MixFixture fx = mix_fixture(b, rng);
        Rng stream(rng.next());
        const double alpha = tenths / 10.0;
        const MixResult mix = mix_batch(fx.emb, fx.batch, fx.cache, alpha, stream);
        const std::size_t target = static_cast<std::size_t>(tenths) * b / 10;
        EXPECT_EQ(mix.target, target);
        EXPECT_EQ(mix.candidates, fx.credible_in_batch);
        ASSERT_EQ(mix.replaced.size(), std::min(target, fx.credible_in_batch));
        EXPECT_TRUE(std::ranges::is_sorted(mix.replaced));
        EXPECT_EQ(std::ranges::adjacent_find(mix.replaced), mix.replaced.end());
        std::vector<bool> is_replaced(b, false);
        for (auto p : mix.replaced) {
          is_replaced[p] = true;
          const auto row = *fx.cache.find(fx.batch[p]);
          EXPECT_TRUE(fx.cache.credible[row]);
          EXPECT_TRUE(std::ranges::equal(mix.mixed.row(p), fx.cache.features.row(row)));
        }
        for (std::size_t p = 0; p < b; ++p) {
          if (!is_replaced[p]) {
            EXPECT_TRUE(std::ranges::equal(mix.mixed.row(p), fx.emb.row(p)));
          }
        }
      }
    }
  }
}

TEST(MixBatch, PaperBatchReplacesThirtyEight) {
  Rng rng(5);
  OldFeatureCache cache = one_class_cache(random_matrix(128, 3, rng));
  std::vector<std::size_t> batch(128);
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  Rng stream(1);
  EXPECT_EQ(mix_batch(random_matrix(128, 3, rng), batch, cache, 0.3, stream).replaced.size(), 38u);
}

TEST(MixBatch, ShortfallTakesEveryCandidate) {
  Rng rng(6);
  OldFeatureCache cache = one_class_cache(random_matrix(8, 3, rng));
  std::ranges::fill(cache.credible, std::uint8_t{0});
  cache.credible[2] = cache.credible[5] = 1;
  std::vector<std::size_t> batch(8);
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  Rng stream(1);
  const auto mix = mix_batch(random_matrix(8, 3, rng), batch, cache, 0.5, stream);
  EXPECT_EQ(mix.replaced, (std::vector<std::size_t>{2, 5}));
}

TEST(MixBatch, UncachedSamplesAreNeverCandidates) {
  Rng rng(7);
  OldFeatureCache cache = one_class_cache(random_matrix(4, 3, rng));
  const std::vector<std::size_t> batch{100, 101, 2, 102};
  Rng stream(1);
  const auto mix = mix_batch(random_matrix(4, 3, rng), batch, cache, 0.5, stream);
  EXPECT_EQ(mix.replaced, (std::vector<std::size_t>{2}));
}

TEST(MixBatch, SamplingIsUniformOverCandidates) {
  Rng rng(8);
  OldFeatureCache cache = one_class_cache(random_matrix(10, 2, rng));
  std::vector<std::size_t> batch(10);
  std::iota(batch.begin(), batch.end(), std::size_t{0});
  const Matrix emb = random_matrix(10, 2, rng);
  std::vector<int> hits(10, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    Rng stream(static_cast<std::uint64_t>(t));
    for (auto p : mix_batch(emb, batch, cache, 0.3, stream).replaced) ++hits[p];
  }
  // Each position is picked with probability 3/10; 5 sigma is about 0.016.
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.3, 0.02);
}

TEST(MixBatch, ZeroAlphaIsIdentity) {
  Rng rng(9);
  const MixFixture fx = mix_fixture(16, rng);
  Rng stream(3);
  const auto mix = mix_batch(fx.emb, fx.batch, fx.cache, 0.0, stream);
  EXPECT_TRUE(mix.replaced.empty());
  EXPECT_EQ(mix.mixed, fx.emb);
}

// ---------------------------------------------------------------------------
// losses

TEST(MixLoss, NoReplacementEqualsPlainLoss) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = testing::make_instance(LossUnderTest::kArcFace, seed);
    const LossGrad plain = classification_loss(inst.cls, inst.emb, inst.targets);
    const LossGrad mixed = mixbct_loss(inst.cls, inst.emb, inst.targets, {});
    EXPECT_NEAR(mixed.loss, plain.loss, 1e-12);
    EXPECT_EQ(mixed.grad_emb, plain.grad_emb);
    EXPECT_EQ(mixed.grad_weights, plain.grad_weights);
  }
}

TEST(MixLoss, ReplacedRowsCarryNoEmbeddingGradient) {
  const auto inst = testing::make_instance(LossUnderTest::kCrossEntropy, 4);
  const std::size_t b = inst.emb.rows();
  std::vector<std::size_t> all(b);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const LossGrad out = mixbct_loss(inst.cls, inst.emb, inst.targets, all);
  for (double g : out.grad_emb.values()) EXPECT_EQ(g, 0.0);

  const std::vector<std::size_t> some{0, 2};
  const LossGrad plain = classification_loss(inst.cls, inst.emb, inst.targets);
  const LossGrad part = mixbct_loss(inst.cls, inst.emb, inst.targets, some);
  for (std::size_t i = 0; i < b; ++i) {
    const bool replaced = i == 0 || i == 2;
    for (std::size_t k = 0; k < inst.emb.cols(); ++k) {
      EXPECT_EQ(part.grad_emb(i, k), replaced ? 0.0 : plain.grad_emb(i, k));
    }
  }
  EXPECT_EQ(part.grad_weights, plain.grad_weights);  // the head sees every row
}

TEST(MixLoss, WeightGradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = testing::make_instance(LossUnderTest::kArcFace, seed);
    const std::vector<std::size_t> replaced{0, 1};
    const LossGrad g = mixbct_loss(inst.cls, inst.emb, inst.targets, replaced);
    auto loss = [&] { return mixbct_loss(inst.cls, inst.emb, inst.targets, replaced).loss; };
    EXPECT_LT(gradient_check(loss, inst.cls.weights.values(), g.grad_weights.values(), 1e-5).max_rel_error,
              1e-5) << "seed " << seed;
  }
}

TEST(L2Loss, ZeroLambdaAndPerfectMatchReduceToPlainLoss) {
  const auto inst = testing::make_instance(LossUnderTest::kL2, 3);
  const LossGrad plain = classification_loss(inst.cls, inst.emb, inst.targets);
  EXPECT_EQ(l2bct_loss(inst.cls, inst.emb, inst.old, inst.targets, 0.0).loss, plain.loss);
  EXPECT_EQ(l2bct_loss(inst.cls, inst.emb, inst.emb, inst.targets, 5.0).loss, plain.loss);
}

TEST(L2Loss, ValueIsPlainLossPlusMeanDistance) {
  const auto inst = testing::make_instance(LossUnderTest::kL2, 6);
  const double lambda = 2.5;
  double mean = 0.0;
  for (std::size_t i = 0; i < inst.emb.rows(); ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < inst.emb.cols(); ++k) s += std::pow(inst.emb(i, k) - inst.old(i, k), 2);
    mean += std::sqrt(s) / static_cast<double>(inst.emb.rows());
  }
  EXPECT_NEAR(l2bct_loss(inst.cls, inst.emb, inst.old, inst.targets, lambda).loss,
              classification_loss(inst.cls, inst.emb, inst.targets).loss + lambda * mean, 1e-12);
}

TEST(L2Loss, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(testing::max_gradient_error(LossUnderTest::kL2, seed), 1e-6) << "seed " << seed;
  }
}

TEST(L2Loss, RejectsMisalignedOldFeatures) {
  const auto inst = testing::make_instance(LossUnderTest::kL2, 1);
  Matrix short_old(inst.emb.rows() - 1, inst.emb.cols());
  EXPECT_EQ(code_of([&] { l2bct_loss(inst.cls, inst.emb, short_old, inst.targets, 1.0); }),
            ErrorCode::kInvalidArgument);
}

TEST(ProtoLoss, ZeroWeightIsPlainLoss) {
  const auto inst = testing::make_instance(LossUnderTest::kProto, 2);
  const LossGrad plain = classification_loss(inst.cls, inst.emb, inst.targets);
  const LossGrad p = proto_bct_loss(inst.cls, inst.emb, inst.labels, inst.targets, inst.protos, 0.0);
  EXPECT_EQ(p.loss, plain.loss);
  EXPECT_EQ(p.grad_emb, plain.grad_emb);
}

TEST(ProtoLoss, EmbeddingOnItsPrototypeVanishes) {
  Matrix f(3, 3);
  for (std::size_t c = 0; c < 3; ++c) f(c, c) = 1.0;
  OldFeatureCache cache = one_class_cache(f);
  cache.labels = {10, 11, 12};
  const PrototypeSet protos = compute_prototypes(cache, true);
  Classifier cls = Classifier::random(3, 3, LossKind::kAngularMargin, 1, 64.0, 0.0);
  Matrix emb(1, 3);
  emb(0, 1) = 2.0;
  const std::vector<std::uint32_t> labels{11}, targets{1};
  const double with = proto_bct_loss(cls, emb, labels, targets, protos, 1.0).loss;
  EXPECT_NEAR(with, classification_loss(cls, emb, targets).loss, 1e-12);
}

TEST(ProtoLoss, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LT(testing::max_gradient_error(LossUnderTest::kProto, seed), 1e-5) << "seed " << seed;
  }
}

TEST(ProtoLoss, RejectsEmptyPrototypes) {
  const auto inst = testing::make_instance(LossUnderTest::kProto, 2);
  PrototypeSet empty;
  EXPECT_EQ(code_of([&] { proto_bct_loss(inst.cls, inst.emb, inst.labels, inst.targets, empty, 1.0); }),
            ErrorCode::kInvalidArgument);
}

TEST(CompatLosses, MonotoneInTheirWeights) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto l2 = testing::make_instance(LossUnderTest::kL2, seed);
    const auto pr = testing::make_instance(LossUnderTest::kProto, seed);
    double last_l2 = -1e300, last_pr = -1e300;
    for (double w : {0.0, 0.01, 0.1, 1.0, 10.0, 100.0}) {
      const double a = l2bct_loss(l2.cls, l2.emb, l2.old, l2.targets, w).loss;
      const double b = proto_bct_loss(pr.cls, pr.emb, pr.labels, pr.targets, pr.protos, w).loss;
      EXPECT_GE(a, last_l2);
      EXPECT_GE(b, last_pr);
      last_l2 = a;
      last_pr = b;
    }
  }
}

// ---------------------------------------------------------------------------
// prototypes

TEST(Prototypes, SingleFeatureIsItsDirection) {
  Matrix f(1, 3);
  f(0, 0) = 3.0;
  f(0, 2) = 4.0;
  const auto p = compute_prototypes(one_class_cache(f, 5), false);
  ASSERT_EQ(p.class_ids, std::vector<std::uint32_t>{5});
  EXPECT_DOUBLE_EQ(p.centers(0, 0), 0.6);
  EXPECT_DOUBLE_EQ(p.centers(0, 2), 0.8);
}

TEST(Prototypes, CancellingMembersAreExcluded) {
  Matrix f(3, 2);
  f(0, 0) = 1.0;
  f(1, 0) = -2.0;
  f(2, 1) = 1.0;
  OldFeatureCache cache = one_class_cache(f);
  cache.labels = {0, 0, 1};
  const auto p = compute_prototypes(cache, false);
  EXPECT_EQ(p.class_ids, std::vector<std::uint32_t>{1});
  EXPECT_EQ(p.excluded, std::vector<std::uint32_t>{0});
  EXPECT_FALSE(p.row_of(0).has_value());
}

TEST(Prototypes, MatchNaivePerClassMeans) {
  Rng rng(31);
  OldFeatureCache cache = one_class_cache(random_matrix(15, 4, rng));
  for (std::size_t r = 0; r < 15; ++r) cache.labels[r] = static_cast<std::uint32_t>(r % 3);
  cache.credible[4] = 0;
  for (bool credible_only : {false, true}) {
    const auto p = compute_prototypes(cache, credible_only);
    ASSERT_EQ(p.size(), 3u);
    for (std::uint32_t c = 0; c < 3; ++c) {
      std::vector<double> mean(4, 0.0);
      for (std::size_t r = c; r < 15; r += 3) {
        if (credible_only && r == 4) continue;
        const auto row = cache.features.row(r);
        const double n = std::sqrt(std::inner_product(row.begin(), row.end(), row.begin(), 0.0));
        for (std::size_t k = 0; k < 4; ++k) mean[k] += row[k] / n;
      }
      const double n = std::sqrt(std::inner_product(mean.begin(), mean.end(), mean.begin(), 0.0));
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(p.centers(*p.row_of(c), k), mean[k] / n, 1e-12);
    }
  }
}

// ---------------------------------------------------------------------------
// cache files

TEST(CacheIo, RoundTripIsBitExact) {
  TempDir dir("cache");
  Rng rng(12);
  auto cache = denoise(testing::random_cache(rng, 150, 6), 0.1);
  save_cache(cache, dir / "c.bctf");
  EXPECT_EQ(load_cache(dir / "c.bctf"), cache);
  EXPECT_EQ(std::filesystem::file_size(dir / "c.bctf"),
            4 + 4 + 8 + 4 + cache.size() * (8 + 4 + 1 + 8 * cache.embed_dim));
}

TEST(CacheIo, CorruptFilesAreRejected) {
  TempDir dir("cache-bad");
  Rng rng(13);
  const auto cache = testing::random_cache(rng, 30, 3);
  const auto good = dir / "good.bctf";
  save_cache(cache, good);
  std::string bytes;
  {
    std::ifstream in(good, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& name, const std::string& data) {
    std::ofstream(dir / name, std::ios::binary) << data;
    return dir / name;
  };
  EXPECT_EQ(code_of([&] { load_cache(write("t.bctf", bytes.substr(0, bytes.size() - 3))); }),
            ErrorCode::kCorruptFile);
  EXPECT_EQ(code_of([&] { load_cache(write("m.bctf", "XXXX" + bytes.substr(4))); }), ErrorCode::kCorruptFile);
  EXPECT_EQ(code_of([&] { load_cache(write("x.bctf", bytes + "junk")); }), ErrorCode::kCorruptFile);
  std::string flag = bytes;
  flag[20 + 8 + 4] = 7;  // credible byte of the first row
  EXPECT_EQ(code_of([&] { load_cache(write("f.bctf", flag)); }), ErrorCode::kCorruptFile);
  EXPECT_EQ(code_of([&] { load_cache(dir / "missing.bctf"); }), ErrorCode::kIo);
}

// ---------------------------------------------------------------------------
// training driver

struct DriverFixture {
  LabeledDataset ds = generate_synthetic({6, 20, 8, 1.0, 0.2, 3});
  std::vector<std::size_t> train;
  LabelMap labels;
  Backbone old = Backbone::random(std::vector<std::size_t>{8, 8, 4}, 11);
  TrainConfig cfg;

  DriverFixture() {
    train.resize(ds.size());
    std::iota(train.begin(), train.end(), std::size_t{0});
    labels = LabelMap(std::vector<std::uint32_t>{0, 1, 2, 3, 4, 5});
    cfg.batch_size = 16;
    cfg.epochs = 3;
    cfg.seed = 99;
  }

  std::pair<Backbone, Classifier> fresh() const {
    return {Backbone::random(std::vector<std::size_t>{8, 16, 4}, 21),
            Classifier::random(6, 4, LossKind::kAngularMargin, 22)};
  }
};

TEST(TrainCompatible, ZeroAlphaMatchesNoCompatBitForBit) {
  DriverFixture fx;
  MethodConfig mix;
  mix.alpha = 0.0;
  MethodConfig none;
  none.method = Method::kNoCompat;
  const auto cache = prepare_cache(fx.old, fx.ds, fx.train, mix);
  auto [bb_a, cls_a] = fx.fresh();
  auto [bb_b, cls_b] = fx.fresh();
  const TrainLog la = train_compatible(fx.ds, fx.train, fx.labels, cache, bb_a, cls_a, mix, fx.cfg);
  const TrainLog lb = train_compatible(fx.ds, fx.train, fx.labels, cache, bb_b, cls_b, none, fx.cfg);
  EXPECT_EQ(bb_a, bb_b);
  EXPECT_EQ(cls_a, cls_b);
  EXPECT_EQ(la.epoch_loss, lb.epoch_loss);
}

TEST(TrainCompatible, LoggedReplacementsRecount) {
  DriverFixture fx;
  MethodConfig mix;  // alpha 0.3 with denoising
  const auto cache = prepare_cache(fx.old, fx.ds, fx.train, mix);
  EXPECT_EQ(cache.credible_count(), 6u * 18u);  // 20 - floor(0.1 * 20) per class
  auto [bb, cls] = fx.fresh();
  const TrainLog log = train_compatible(fx.ds, fx.train, fx.labels, cache, bb, cls, mix, fx.cfg);
  std::vector<std::size_t> pool_per_epoch(fx.cfg.epochs, 0);
  for (const auto& b : log.batches) {
    EXPECT_EQ(b.replaced, std::min(b.size * 3 / 10, b.credible_pool));
    pool_per_epoch[b.epoch] += b.credible_pool;
  }
  // Every sample is visited once per epoch, so the pools add up to the cache.
  for (auto p : pool_per_epoch) EXPECT_EQ(p, cache.credible_count());
}

TEST(TrainCompatible, SameSeedSameRun) {
  DriverFixture fx;
  for (Method m : {Method::kMixBct, Method::kL2Bct, Method::kProtoBct}) {
    MethodConfig method;
    method.method = m;
    method.lambda = 0.5;
    const auto cache = prepare_cache(fx.old, fx.ds, fx.train, method);
    auto [bb_a, cls_a] = fx.fresh();
    auto [bb_b, cls_b] = fx.fresh();
    const auto la = train_compatible(fx.ds, fx.train, fx.labels, cache, bb_a, cls_a, method, fx.cfg);
    const auto lb = train_compatible(fx.ds, fx.train, fx.labels, cache, bb_b, cls_b, method, fx.cfg);
    EXPECT_EQ(la, lb) << to_string(m);
    EXPECT_EQ(bb_a, bb_b) << to_string(m);
  }
}

TEST(TrainCompatible, CacheMustCoverTheTrainingSplit) {
  DriverFixture fx;
  MethodConfig mix;
  const std::vector<std::size_t> part(fx.train.begin(), fx.train.begin() + 50);
  const auto cache = prepare_cache(fx.old, fx.ds, part, mix);
  auto [bb, cls] = fx.fresh();
  EXPECT_EQ(code_of([&] { train_compatible(fx.ds, fx.train, fx.labels, cache, bb, cls, mix, fx.cfg); }),
            ErrorCode::kInvalidArgument);
}

TEST(TrainCompatible, RejectsAlphaOfOne) {
  MethodConfig mix;
  mix.alpha = 1.0;
  EXPECT_EQ(code_of([&] { mix.validate(); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace bctlab
