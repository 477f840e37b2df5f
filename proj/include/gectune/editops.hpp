#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gectune/common.hpp"
#include "gectune/corpus.hpp"

namespace gectune {

enum class OpKind { Match, Subst, Ins, Del };

char op_symbol(OpKind kind);

struct AlignOp {
  OpKind kind;
  std::optional<std::size_t> src;  // absent for Ins
  std::optional<std::size_t> tgt;  // absent for Del

  friend bool operator==(const AlignOp&, const AlignOp&) = default;
};

struct Alignment {
  std::size_t distance = 0;
  std::vector<AlignOp> path;
};

/// Word-level Levenshtein alignment with unit costs. The backtrace runs from
/// the end of both sequences and prefers MATCH, then DEL, then INS, then
/// SUBST among predecessors of equal cost.
Alignment lev_align(const Tokens& src, const Tokens& tgt);

/// Full (n+1)x(m+1) distance table, row-major over source positions.
std::vector<std::size_t> lev_table(const Tokens& src, const Tokens& tgt);

struct EditCounts {
  std::size_t ld = 0;
  std::size_t d = 0;
  std::size_t i = 0;
  std::size_t s = 0;

  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

EditCounts edit_op_counts(const Tokens& src, const Tokens& tgt);
EditCounts edit_op_counts(const std::vector<AlignOp>& path);

/// Maximal runs of non-MATCH operations collapsed into span edits.
EditSet extract_edits(const Tokens& src, const Tokens& tgt);

/// The non-MATCH operations of the alignment path, in path order.
std::vector<AlignOp> atomic_edits(const Tokens& src, const Tokens& tgt);

enum class OpAlphabet { Plain, Lexicalized };

/// Operation symbols along the alignment: M/S/I/D, or with the lexicalized
/// alphabet S_<tgt>, I_<tgt>, D_<src>.
Tokens op_sequence(const Tokens& src, const Tokens& tgt, OpAlphabet alphabet = OpAlphabet::Plain);
Tokens op_sequence(const std::vector<AlignOp>& path, const Tokens& src, const Tokens& tgt, OpAlphabet alphabet);

}  // namespace gectune
