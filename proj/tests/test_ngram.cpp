#include <gtest/gtest.h>

#include <cmath>

#include "gectune/editops.hpp"
#include "gectune/ngram.hpp"
#include "test_support.hpp"

using namespace gectune;
using testing_support::fixture;

namespace {
Tokens T(const char* s) { return split_ws(s); }

double mass(const NGramModel& m, const std::vector<WordId>& ctx) {
  double sum = 0.0;
  for (WordId w : m.predictable()) sum += std::pow(10.0, m.score_word(ctx, w));
  return sum;
}
}  // namespace

TEST(NGram, UnigramWittenBellByHand) {
  const NGramModel m = NGramModel::train({T("a a b")}, {1, 0});
  const double l10 = 1e-6;
  EXPECT_NEAR(m.find(std::vector<WordId>{m.id("a")})->logprob, std::log10(2.75 / 7), l10);
  EXPECT_NEAR(m.find(std::vector<WordId>{m.id("b")})->logprob, std::log10(1.75 / 7), l10);
  EXPECT_NEAR(m.find(std::vector<WordId>{m.eos()})->logprob, std::log10(1.75 / 7), l10);
  EXPECT_NEAR(m.find(std::vector<WordId>{m.unk()})->logprob, std::log10(0.75 / 7), l10);
}

TEST(NGram, SingleSentenceNormalizes) {
  const NGramModel m = NGramModel::train({T("a")}, {1, 0});
  EXPECT_NEAR(mass(m, {}), 1.0, 1e-6);
}

TEST(NGram, ContextsNormalize) {
  const std::vector<Tokens> corpus{T("the cat sat"), T("the dog sat down"), T("a cat ran"), T("the cat ran down")};
  const NGramModel m = NGramModel::train(corpus, {3, 0});
  for (const auto& ctx : std::vector<Tokens>{{}, {"the"}, {"<s>"}, {"the", "cat"}, {"<s>", "the"}, {"zzz", "cat"}}) {
    std::vector<WordId> ids;
    for (const auto& w : ctx) ids.push_back(m.id(w));
    EXPECT_NEAR(mass(m, ids), 1.0, 1e-5);
  }
  EXPECT_LE(m.score_seq(T("the cat sat")), 0.0);
}

TEST(NGram, PruningKeepsNormalization) {
  const std::vector<Tokens> corpus{T("a b c"), T("a b d"), T("a b c"), T("b c d")};
  const NGramModel m = NGramModel::train(corpus, {3, 1});
  std::vector<WordId> ctx{m.id("a"), m.id("b")};
  EXPECT_NEAR(mass(m, ctx), 1.0, 1e-5);
  EXPECT_LT(m.count(3), NGramModel::train(corpus, {3, 0}).count(3));
}

TEST(NGram, Deterministic) {
  const std::vector<Tokens> corpus{T("x y z"), T("y z x")};
  EXPECT_EQ(NGramModel::train(corpus, {3, 0}).save_arpa(), NGramModel::train(corpus, {3, 0}).save_arpa());
  EXPECT_THROW(NGramModel::train({}, {3, 0}), std::invalid_argument);
}

TEST(NGram, UnigramFixture) {
  const NGramModel m = NGramModel::load_arpa_file(fixture("unigram.arpa"));
  EXPECT_EQ(m.order(), 1u);
  EXPECT_DOUBLE_EQ(m.score_seq(T("hello")), -0.39794 + -0.30103);
  EXPECT_DOUBLE_EQ(m.score_seq(T("foo bar")), 2 * -1.0 + -0.30103);
  EXPECT_DOUBLE_EQ(m.score_seq(Tokens{}), -0.30103);
}

TEST(NGram, BigramFixtureBackoff) {
  const NGramModel m = NGramModel::load_arpa_file(fixture("bigram.arpa"));
  EXPECT_DOUBLE_EQ(m.score_seq(T("the cat")), -0.1 + -0.09691 + -0.2);
  // "cat the" is unseen: backoff(cat) + p(the).
  EXPECT_DOUBLE_EQ(m.score_seq(T("cat the")), -0.30103 + (-0.17609 + -0.39794) + (-0.2 + -0.69897));
  EXPECT_DOUBLE_EQ(m.score_seq(Tokens{}), -0.30103 + -0.69897);
}

TEST(NGram, ArpaRoundTrip) {
  for (const char* name : {"unigram.arpa", "bigram.arpa"}) {
    const std::string text = read_file(fixture(name));
    EXPECT_EQ(NGramModel::load_arpa(text).save_arpa(), text) << name;
  }
  Rng rng(2);
  std::vector<Tokens> corpus;
  for (int k = 0; k < 50; ++k) corpus.push_back(testing_support::random_tokens(rng, 8, 10, 1));
  const NGramModel m = NGramModel::train(corpus, {4, 0});
  const std::string text = m.save_arpa();
  const NGramModel back = NGramModel::load_arpa(text);
  EXPECT_EQ(back.save_arpa(), text);
  for (int k = 0; k < 20; ++k) {
    const Tokens s = testing_support::random_tokens(rng, 8, 12);
    EXPECT_EQ(back.score_seq(s), m.score_seq(s));
  }
}

TEST(NGram, ArpaErrors) {
  EXPECT_THROW(NGramModel::load_arpa("\\data\\\n\n\\end\\\n"), ParseError);
  EXPECT_THROW(NGramModel::load_arpa("junk\n"), ParseError);
  try {
    NGramModel::load_arpa("\\data\\\nngram 1=1\n\n\\1-grams:\nnotanumber\tx\n\\end\\\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
  EXPECT_THROW(NGramModel::load_arpa("\\data\\\nngram 1=2\n\n\\1-grams:\n-1\tx\n\\end\\\n"), ParseError);
}

TEST(NGram, OsmAlphabetNeverFails) {
  const NGramModel osm = NGramModel::train({op_sequence(T("a b c"), T("a x c"))}, {5, 0});
  EXPECT_TRUE(std::isfinite(osm.score_seq(op_sequence(T("p q"), T("r"), OpAlphabet::Lexicalized))));
}

TEST(NGram, Classes) {
  const ClassMap map = ClassMap::parse("the\tC1\ncat\tC7\n");
  EXPECT_EQ(project_classes(T("the cat"), map), (Tokens{"C1", "C7"}));
  EXPECT_EQ(project_classes(T("dog"), map), (Tokens{"CUNK"}));
  EXPECT_TRUE(project_classes(Tokens{}, map).empty());
  EXPECT_EQ(ClassMap::parse(map.save()).save(), map.save());
  EXPECT_THROW(ClassMap::parse("oneColumn\n"), ParseError);
}

TEST(NGram, MooreLewis) {
  const std::vector<Tokens> in{T("the cat sat on the mat"), T("the cat ate")};
  const std::vector<Tokens> gen{T("stocks fell sharply today"), T("markets rose again")};
  const NGramModel lm_in = NGramModel::train(in, {3, 0});
  const NGramModel lm_gen = NGramModel::train(gen, {3, 0});

  const auto same = moore_lewis(in, lm_in, lm_in);
  for (double s : same.scores) EXPECT_EQ(s, 0.0);
  EXPECT_TRUE(same.kept.empty());

  const auto fwd = moore_lewis({in[0], gen[0]}, lm_in, lm_gen);
  EXPECT_LT(fwd.scores[0], 0.0);
  EXPECT_GT(fwd.scores[1], 0.0);
  EXPECT_EQ(fwd.kept, (std::vector<std::size_t>{0}));
  const auto rev = moore_lewis({in[0], gen[0]}, lm_gen, lm_in);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_DOUBLE_EQ(rev.scores[i], -fwd.scores[i]);
  EXPECT_NEAR(cross_entropy(lm_in, in[1]), -lm_in.score_seq(in[1]) / 4.0, 1e-12);
}
