#include <gtest/gtest.h>

#include <algorithm>

#include "gectune/corpus.hpp"
#include "gectune/editops.hpp"
#include "gectune/metric.hpp"
#include "gectune/tuner.hpp"
#include "test_support.hpp"

using namespace gectune;
using testing_support::random_edits;
using testing_support::random_tokens;

namespace {

Corpus random_corpus(Rng& rng, std::size_t n) {
  Corpus c;
  for (std::size_t i = 0; i < n; ++i) {
    AnnotatedSentence s;
    s.source = random_tokens(rng, 8, 6, 1);
    const std::size_t annotators = uniform_index(rng, 3);
    for (std::size_t a = 0; a < annotators; ++a) {
      s.gold[static_cast<int>(a)] = random_edits(rng, s.source.size(), 3, 6);
    }
    c.sentences.push_back(s);
  }
  return c;
}

}  // namespace

TEST(Properties, LevenshteinMetricAxioms) {
  Rng rng(101);
  for (int k = 0; k < 500; ++k) {
    const Tokens a = random_tokens(rng, 7, 4), b = random_tokens(rng, 7, 4), c = random_tokens(rng, 7, 4);
    const auto ab = lev_align(a, b).distance, ba = lev_align(b, a).distance;
    EXPECT_EQ(ab, ba);
    EXPECT_EQ(lev_align(a, a).distance, 0u);
    EXPECT_EQ(ab == 0, a == b);
    EXPECT_LE(lev_align(a, c).distance, ab + lev_align(b, c).distance);
    EXPECT_EQ(lev_align(a, b).path, lev_align(a, b).path);
  }
}

TEST(Properties, EditCountIdentities) {
  Rng rng(102);
  for (int k = 0; k < 500; ++k) {
    const Tokens a = random_tokens(rng, 8, 4), b = random_tokens(rng, 8, 4);
    const EditCounts c = edit_op_counts(a, b);
    EXPECT_EQ(c.ld, c.d + c.i + c.s);
    EXPECT_EQ(c.ld, lev_align(a, b).distance);
    EXPECT_EQ(static_cast<long>(a.size()) - static_cast<long>(b.size()),
              static_cast<long>(c.d) - static_cast<long>(c.i));
    EXPECT_EQ(op_sequence(a, b).size(), lev_align(a, b).path.size());
  }
}

TEST(Properties, ExtractedEditsReproduceTarget) {
  Rng rng(103);
  for (int k = 0; k < 500; ++k) {
    const Tokens a = random_tokens(rng, 8, 4), b = random_tokens(rng, 8, 4);
    const EditSet edits = extract_edits(a, b);
    EXPECT_EQ(apply_edits(a, edits), b);
    for (std::size_t i = 1; i < edits.size(); ++i) EXPECT_LT(edits[i - 1].end, edits[i].start + 1);
  }
}

TEST(Properties, M2RoundTrip) {
  Rng rng(104);
  for (int k = 0; k < 100; ++k) {
    const Corpus c = random_corpus(rng, 1 + uniform_index(rng, 6));
    EXPECT_EQ(parse_m2(write_m2(c)), c);
  }
}

TEST(Properties, FoldsPartition) {
  Rng rng(105);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + uniform_index(rng, 40);
    const std::size_t folds = 2 + uniform_index(rng, std::min<std::size_t>(n - 1, 6));
    const std::uint64_t seed = rng();
    const auto parts = fold_indices(n, folds, seed);
    std::vector<std::size_t> all;
    std::size_t lo = n, hi = 0;
    for (const auto& p : parts) {
      all.insert(all.end(), p.begin(), p.end());
      lo = std::min(lo, p.size());
      hi = std::max(hi, p.size());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
    EXPECT_LE(hi - lo, 1u);
    EXPECT_EQ(fold_indices(n, folds, seed), parts);
  }
}

TEST(Properties, ErrorRateAndAdapt) {
  Rng rng(106);
  for (int k = 0; k < 60; ++k) {
    Corpus c = random_corpus(rng, 2 + uniform_index(rng, 10));
    const double rate = error_rate(c, AnnotatorPolicy::any());
    Corpus shuffled = c;
    shuffle(shuffled.sentences, rng);
    EXPECT_DOUBLE_EQ(error_rate(shuffled, AnnotatorPolicy::any()), rate);

    const double target = std::min(1.0, rate + 0.1);
    const AdaptResult r = adapt_error_rate(c, target, AnnotatorPolicy::any());
    EXPECT_TRUE(std::is_sorted(r.kept.begin(), r.kept.end()));
    EXPECT_EQ(r.corpus, subset(c, r.kept));
    if (r.reached) EXPECT_GE(r.rate, target - 1e-12);
  }
}

TEST(Properties, MaxMatchBounds) {
  Rng rng(107);
  for (int k = 0; k < 300; ++k) {
    const Tokens src = random_tokens(rng, 7, 4);
    const EditSet gold = random_edits(rng, src.size(), 3, 4);
    const Tokens hyp = random_tokens(rng, 7, 4);
    const Stats3 s = max_match_sentence(src, hyp, gold);
    EXPECT_LE(s.correct, std::min(s.proposed, s.gold));
    EXPECT_GE(s.correct, 0);
  }
  for (long long p = 1; p < 6; ++p) {
    for (long long c = 0; c < p; ++c) EXPECT_LE(prf(Stats3{c, p, 5}, 0.5).f, prf(Stats3{c + 1, p, 5}, 0.5).f);
  }
}

TEST(Properties, CorpusM2PermutationInvariant) {
  Rng rng(108);
  for (int k = 0; k < 30; ++k) {
    Corpus c = random_corpus(rng, 2 + uniform_index(rng, 6));
    std::vector<Tokens> hyps;
    for (const auto& s : c.sentences) hyps.push_back(random_tokens(rng, 8, 6));
    const Stats3 total = corpus_m2(c, hyps).total;
    std::vector<std::size_t> perm(c.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    shuffle(perm, rng);
    Corpus pc;
    std::vector<Tokens> ph;
    for (std::size_t i : perm) {
      pc.sentences.push_back(c.sentences[i]);
      ph.push_back(hyps[i]);
    }
    EXPECT_EQ(corpus_m2(pc, ph).total, total);
  }
}

TEST(Properties, GoldOutputScoresOne) {
  Rng rng(109);
  for (int k = 0; k < 50; ++k) {
    Corpus c;
    for (std::size_t i = 0; i < 5; ++i) {
      AnnotatedSentence s;
      s.source = random_tokens(rng, 8, 6, 1);
      // One edit with fresh words: its alignment is then always co-optimal.
      // Several edits can jointly admit a cheaper alignment that no longer
      // contains them.
      s.gold[0] = random_edits(rng, s.source.size(), 1, 6);
      for (auto& e : s.gold[0]) {
        for (auto& t : e.replacement) t = "r" + t;
      }
      c.sentences.push_back(s);
    }
    std::vector<Tokens> hyps;
    for (const auto& s : c.sentences) hyps.push_back(corrected(s));
    EXPECT_EQ(corpus_m2(c, hyps).score.f, 1.0);

  }
}

TEST(Properties, AverageWeights) {
  Rng rng(110);
  for (int k = 0; k < 50; ++k) {
    std::vector<WeightVec> runs(1 + uniform_index(rng, 5));
    for (auto& w : runs) {
      for (auto& x : w.dense) x = uniform_real(rng) - 0.5;
      if (uniform_index(rng, 2)) w.sparse["s" + std::to_string(uniform_index(rng, 3))] = uniform_real(rng);
    }
    const WeightVec avg = average_weights(runs);
    std::vector<WeightVec> perm = runs;
    shuffle(perm, rng);
    const WeightVec pavg = average_weights(perm);
    for (std::size_t s = 0; s < kDenseCount; ++s) EXPECT_NEAR(avg.dense[s], pavg.dense[s], 1e-12);
    for (const auto& [n, v] : avg.sparse) EXPECT_NEAR(pavg.get(n), v, 1e-12);
    const WeightVec once = average_weights({runs[0]});
    const WeightVec twice = average_weights({once});
    for (std::size_t s = 0; s < kDenseCount; ++s) EXPECT_NEAR(twice.dense[s], once.dense[s], 1e-15);
    EXPECT_EQ(twice.sparse, once.sparse);
  }
}
