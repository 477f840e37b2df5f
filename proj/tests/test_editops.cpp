#include <gtest/gtest.h>

#include "gectune/editops.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gectune;

namespace {
Tokens T(const char* s) { return split_ws(s); }
}  // namespace

TEST(EditOps, SeparatedOpCounts) {
  EXPECT_EQ(edit_op_counts(T("a short time ."), T("short term only .")), (EditCounts{3, 1, 1, 1}));
  EXPECT_EQ(edit_op_counts(T("a situation"), T("into a situation")), (EditCounts{1, 0, 1, 0}));
  EXPECT_EQ(edit_op_counts(T("a supermarket ."), T("a supermarket .")), (EditCounts{0, 0, 0, 0}));
  EXPECT_EQ(edit_op_counts(T("a supermarket ."), T("at a supermarket")), (EditCounts{2, 1, 1, 0}));
  EXPECT_EQ(edit_op_counts(T("able"), T("unable")), (EditCounts{1, 0, 0, 1}));
}

TEST(EditOps, AlignBasics) {
  const Alignment same = lev_align(T("a supermarket ."), T("a supermarket ."));
  EXPECT_EQ(same.distance, 0u);
  for (const auto& op : same.path) EXPECT_EQ(op.kind, OpKind::Match);

  const Alignment ins = lev_align({}, T("x y"));
  EXPECT_EQ(ins.distance, 2u);
  ASSERT_EQ(ins.path.size(), 2u);
  EXPECT_EQ(ins.path[0], (AlignOp{OpKind::Ins, std::nullopt, 0}));

  EXPECT_EQ(lev_align(T("a short time ."), T("short term only .")).distance, 3u);
  EXPECT_EQ(lev_align({}, {}).path.size(), 0u);
}

TEST(EditOps, AtomsOfWorkedExample) {
  const Tokens src = T("Then a new problem comes out ."), tgt = T("Hence , a new problem surfaces .");
  const auto atoms = atomic_edits(src, tgt);
  ASSERT_EQ(atoms.size(), 4u);
  EXPECT_EQ(atoms[0], (AlignOp{OpKind::Subst, 0, 0}));
  EXPECT_EQ(atoms[1], (AlignOp{OpKind::Ins, std::nullopt, 1}));
  EXPECT_EQ(atoms[2], (AlignOp{OpKind::Subst, 4, 5}));
  EXPECT_EQ(atoms[3], (AlignOp{OpKind::Del, 5, std::nullopt}));
  EXPECT_TRUE(atomic_edits(src, src).empty());
  const auto able = atomic_edits(T("able"), T("unable"));
  ASSERT_EQ(able.size(), 1u);
  EXPECT_EQ(able[0].kind, OpKind::Subst);
}

TEST(EditOps, ExtractEdits) {
  const Tokens src = T("Then a new problem comes out ."), tgt = T("Hence , a new problem surfaces .");
  const EditSet edits = extract_edits(src, tgt);
  ASSERT_EQ(edits.size(), 2u);
  EXPECT_TRUE(same_edit(edits[0], Edit{0, 1, {"Hence", ","}, ""}));
  EXPECT_TRUE(same_edit(edits[1], Edit{4, 6, {"surfaces"}, ""}));
  EXPECT_TRUE(extract_edits(src, src).empty());
  const EditSet cat = extract_edits(T("a cat"), T("the cat"));
  ASSERT_EQ(cat.size(), 1u);
  EXPECT_TRUE(same_edit(cat[0], Edit{0, 1, {"the"}, ""}));
}

TEST(EditOps, OpSequences) {
  EXPECT_EQ(op_sequence(T("a short time ."), T("short term only .")), (Tokens{"D", "M", "S", "I", "M"}));
  EXPECT_EQ(op_sequence(T("x y z"), T("x y z")), (Tokens{"M", "M", "M"}));
  EXPECT_EQ(op_sequence(T("able"), T("unable"), OpAlphabet::Lexicalized), (Tokens{"S_unable"}));
  EXPECT_EQ(op_sequence(T("a b"), T("b"), OpAlphabet::Lexicalized), (Tokens{"D_a", "M"}));
  EXPECT_EQ(op_symbol(OpKind::Ins), 'I');
}

TEST(EditOps, TableMatchesOracle) {
  Rng rng(11);
  for (int k = 0; k < 300; ++k) {
    const Tokens a = testing_support::random_tokens(rng, 7, 4), b = testing_support::random_tokens(rng, 7, 4);
    const auto table = lev_table(a, b);
    EXPECT_EQ(table.back(), oracle::edit_distance(a, b));
    EXPECT_EQ(table.size(), (a.size() + 1) * (b.size() + 1));
    EXPECT_EQ(lev_align(a, b).distance, oracle::edit_distance(a, b));
  }
}
