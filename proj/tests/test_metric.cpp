#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "gectune/metric.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gectune;

namespace {
Tokens T(const char* s) { return split_ws(s); }

bool has_edit(const EditSet& set, const Edit& e) {
  return std::any_of(set.begin(), set.end(), [&](const Edit& x) { return same_edit(x, e); });
}
}  // namespace

TEST(Metric, PrfKnownValues) {
  EXPECT_NEAR(f_beta(0.4897, 0.2603, 0.5), 0.4163, 5e-4);
  EXPECT_NEAR(f_beta(0.5891, 0.2505, 0.5), 0.4637, 5e-4);
  EXPECT_NEAR(f_beta(0.6127, 0.2798, 0.5), 0.4949, 5e-4);
}

TEST(Metric, PrfConventions) {
  const Prf empty = prf(Stats3{0, 0, 0}, 0.5);
  EXPECT_EQ(empty.precision, 1.0);
  EXPECT_EQ(empty.recall, 1.0);
  EXPECT_EQ(empty.f, 1.0);
  const Prf none = prf(Stats3{0, 0, 3}, 0.5);
  EXPECT_EQ(none.precision, 1.0);
  EXPECT_EQ(none.recall, 0.0);
  EXPECT_EQ(none.f, 0.0);
  EXPECT_EQ(f_beta(0, 0, 0.5), 0.0);
  EXPECT_NEAR(prf(Stats3{1, 4, 2}, 1e-4).f, 0.25, 1e-6);
  EXPECT_NEAR(prf(Stats3{1, 4, 2}, 1e4).f, 0.5, 1e-6);
  EXPECT_DOUBLE_EQ(prf(2.0, 4.0, 4.0, 0.5).f, 0.5);
}

TEST(Metric, LatticeExamples) {
  const auto lot = candidate_lattice(T("a lot of"), T("many"));
  EXPECT_TRUE(has_edit(lot.candidate_edits(), Edit{0, 3, {"many"}, ""}));
  EXPECT_TRUE(candidate_lattice(T("x y"), T("x y")).candidate_edits().empty());
  const auto go = candidate_lattice(T("He go"), T("He goes")).candidate_edits();
  ASSERT_EQ(go.size(), 1u);
  EXPECT_TRUE(same_edit(go[0], Edit{1, 2, {"goes"}, ""}));
}

TEST(Metric, MergeWindow) {
  // "x" and "z" changed with one unchanged token between them.
  const Tokens src = T("a b c"), hyp = T("x b z");
  EXPECT_TRUE(has_edit(candidate_lattice(src, hyp, {0.5, 1}).candidate_edits(), Edit{0, 3, {"x", "b", "z"}, ""}));
  EXPECT_FALSE(has_edit(candidate_lattice(src, hyp, {0.5, 0}).candidate_edits(), Edit{0, 3, {"x", "b", "z"}, ""}));
}

TEST(Metric, MaxMatchExamples) {
  const EditSet one{Edit{1, 2, {"goes"}, ""}};
  EXPECT_EQ(max_match_sentence(T("He go"), T("He go"), one), (Stats3{0, 0, 1}));
  EXPECT_EQ(max_match_sentence(T("He go"), T("He goes"), one), (Stats3{1, 1, 1}));
  EXPECT_EQ(max_match_sentence(T("a lot of people"), T("many people"), {Edit{0, 3, {"many"}, ""}}),
            (Stats3{1, 1, 1}));
  // Without the gold span the fewest-proposed path is the single merged edit.
  EXPECT_EQ(max_match_sentence(T("a lot of people"), T("many people"), {}), (Stats3{0, 1, 0}));
}

TEST(Metric, ChooseAnnotator) {
  const MetricConfig cfg;
  const std::vector<Stats3> two{{0, 1, 1}, {1, 1, 1}};
  EXPECT_EQ(choose_annotator(two, {}, cfg).first, 1u);
  const std::vector<Stats3> tie{{1, 2, 1}, {1, 2, 1}};
  EXPECT_EQ(choose_annotator(tie, {}, cfg).first, 0u);
  const std::vector<Stats3> single{{0, 3, 1}};
  EXPECT_EQ(choose_annotator(single, {}, cfg).first, 0u);

  // Cumulative mode looks at the running total.
  MetricConfig cum;
  cum.mode = AnnotatorMode::Cumulative;
  const std::vector<Stats3> c{{0, 0, 1}, {1, 3, 1}};
  EXPECT_EQ(choose_annotator(c, Stats3{5, 5, 5}, cfg).first, 1u);
  EXPECT_EQ(choose_annotator(c, Stats3{5, 5, 5}, cum).first, 0u);
}

TEST(Metric, CorpusExamples) {
  const Corpus c = load_m2(testing_support::fixture("small.m2"));
  std::vector<Tokens> sources, gold;
  for (const auto& s : c.sentences) {
    sources.push_back(s.source);
    gold.push_back(corrected(s, 0));
  }
  const M2Report src = corpus_m2(c, sources);
  EXPECT_EQ(src.score.precision, 1.0);
  EXPECT_EQ(src.score.recall, 0.0);
  EXPECT_EQ(src.score.f, 0.0);
  EXPECT_EQ(corpus_m2(c, gold).score.f, 1.0);
  EXPECT_THROW(corpus_m2(c, {sources[0]}), std::invalid_argument);

  Corpus two;
  for (int k = 0; k < 2; ++k) {
    AnnotatedSentence s;
    s.source = T("a b c d");
    s.gold[0] = {Edit{0, 1, {"x"}, ""}, Edit{2, 3, {"y"}, ""}};
    two.sentences.push_back(s);
  }
  const M2Report half = corpus_m2(two, {T("x b c z"), T("x b c z")});
  EXPECT_EQ(half.total, (Stats3{2, 4, 4}));
  EXPECT_DOUBLE_EQ(half.score.f, 0.5);
  EXPECT_EQ(format_report(half), "Precision : 0.5000\nRecall : 0.5000\nF_0.5 : 0.5000\n");
  EXPECT_EQ(format_sentence_tsv(half), "0\t1\t2\t2\t0\n1\t1\t2\t2\t0\n");
}

TEST(Metric, MultiAnnotatorPicksBest) {
  const Corpus c = load_m2(testing_support::fixture("small.m2"));
  // Only the agreement fix: annotator 1 explains it fully.
  std::vector<Tokens> hyps{T("This is a apple ."), c.sentences[1].source, c.sentences[2].source};
  const M2Report r = corpus_m2(c, hyps);
  EXPECT_EQ(r.sentences[0].annotator, 1);
  EXPECT_EQ(r.sentences[0].stats, (Stats3{1, 1, 1}));
}

TEST(Metric, Bleu) {
  EXPECT_DOUBLE_EQ(bleu({T("a b c d e")}, {T("a b c d e")}).score, 1.0);
  EXPECT_EQ(bleu({T("x y z w")}, {T("a b c d")}).score, 0.0);
  const BleuStats st = bleu_stats(T("a b c d"), T("a b c e"));
  EXPECT_EQ(st.matches, (std::vector<double>{3, 2, 1, 0}));
  EXPECT_EQ(st.totals, (std::vector<double>{4, 3, 2, 1}));
  EXPECT_EQ(bleu_score(st), 0.0);
  const double smoothed = bleu_score(st, kSentenceBleuEpsilon);
  const double expect = std::exp((std::log(0.75) + std::log(2.1 / 3.1) + std::log(1.1 / 2.1) + std::log(0.1 / 1.1)) / 4);
  EXPECT_NEAR(smoothed, expect, 1e-12);
  // Brevity penalty.
  EXPECT_NEAR(bleu_score(bleu_stats(T("a b"), T("a b c d"), 2), 0.0), std::exp(1.0 - 2.0), 1e-12);
  EXPECT_THROW(bleu({}, {}), std::invalid_argument);
}

TEST(Metric, OracleSpotChecks) {
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const Tokens src = testing_support::random_tokens(rng, 6, 3);
    const EditSet gold = testing_support::random_edits(rng, src.size(), 2, 3);
    const Tokens hyp = apply_edits(src, gold);
    const Stats3 got = max_match_sentence(src, hyp, gold);
    EXPECT_EQ(got, oracle::m2_brute(src, hyp, gold, 2));
  }
}
