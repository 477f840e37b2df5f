#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "gectune/metric.hpp"
#include "gectune/pipeline.hpp"
#include "gectune/toy.hpp"
#include "gectune/tuner.hpp"

using namespace gectune;

namespace {
ToyOptions small_toy() {
  ToyOptions o;
  o.train = 300;
  o.dev = 40;
  o.test = 40;
  o.mono = 200;
  return o;
}
}  // namespace

TEST(Toy, ShapeAndDeterminism) {
  const ToyData a = make_toy(small_toy()), b = make_toy(small_toy());
  EXPECT_EQ(a.train.size(), 300u);
  EXPECT_EQ(a.dev.size(), 40u);
  EXPECT_EQ(a.test.size(), 40u);
  EXPECT_EQ(a.mono.size(), 200u);
  EXPECT_EQ(a.train, b.train);
  ToyOptions other = small_toy();
  other.seed = 2;
  EXPECT_NE(make_toy(other).train, a.train);
  const double rate = error_rate(a.train);
  EXPECT_GT(rate, 0.02);
  EXPECT_LT(rate, 0.3);
  for (const auto& s : a.train.sentences) validate(s);
  EXPECT_EQ(a.classes.lookup("cat"), "NN");
}

TEST(Toy, GoldFixesAreClean) {
  const ToyData d = make_toy(small_toy());
  std::vector<Tokens> hyps;
  for (const auto& s : d.test.sentences) hyps.push_back(corrected(s));
  EXPECT_EQ(corpus_m2(d.test, hyps).score.f, 1.0);
}

TEST(Pipeline, ParallelFor) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                 if (i == 5) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  EXPECT_GE(resolve_jobs(0), 1u);
  EXPECT_EQ(resolve_jobs(3), 3u);
}

TEST(Pipeline, TrainAndDecode) {
  const ToyData d = make_toy(small_toy());
  const TrainedSystem sys = train_system(d.train, d.mono, &d.classes, true);
  EXPECT_FALSE(sys.table.empty());
  ASSERT_TRUE(sys.class_lm.has_value());
  ASSERT_TRUE(sys.osm.has_value());
  EXPECT_EQ(sys.lm.order(), 5u);
  EXPECT_EQ(sys.class_lm->order(), 9u);

  std::vector<Tokens> src;
  for (const auto& s : d.test.sentences) src.push_back(s.source);
  DecoderConfig cfg;
  cfg.beam = 20;
  cfg.features = feature_preset("all");
  const WeightVec w = uniform_weights(cfg.features);
  const auto serial = decode_all(src, sys.models(), w, cfg, 1);
  const auto parallel = decode_all(src, sys.models(), w, cfg, 3);
  ASSERT_EQ(serial.size(), src.size());
  for (std::size_t i = 0; i < src.size(); ++i) EXPECT_EQ(serial[i][0].surface, parallel[i][0].surface);

  // Scale invariance of the argmax.
  WeightVec scaled = w;
  scaled *= 7.5;
  const auto big = decode_all(src, sys.models(), scaled, cfg, 1);
  for (std::size_t i = 0; i < src.size(); ++i) EXPECT_EQ(serial[i][0].surface, big[i][0].surface);
}
