#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gectune/common.hpp"

namespace gectune {

inline constexpr std::string_view kNullWord = "NULL";

struct SentencePair {
  Tokens src;
  Tokens tgt;
};

/// Lexical translation table t(tgt | src), rows normalized per source word.
class LexTable {
 public:
  double prob(const std::string& src, const std::string& tgt) const;
  void set(const std::string& src, const std::string& tgt, double p) { rows_[src][tgt] = p; }

  const std::map<std::string, std::map<std::string, double>>& rows() const { return rows_; }

 private:
  std::map<std::string, std::map<std::string, double>> rows_;
};

struct Model1Options {
  std::size_t iterations = 5;
  bool use_null = true;
};

/// IBM Model 1 EM. Initialization is uniform over target words co-occurring
/// with each source word (NULL co-occurs with every target word).
LexTable model1_train(const std::vector<SentencePair>& pairs, const Model1Options& options = {});

/// Corpus log-likelihood sum_pairs sum_j ln( 1/(l+1) sum_i t(f_j|e_i) ).
double model1_log_likelihood(const std::vector<SentencePair>& pairs, const LexTable& table, bool use_null = true);

/// Alignment points (src index, tgt index), sorted.
using AlignmentSet = std::set<std::pair<std::size_t, std::size_t>>;

/// Viterbi Model 1 links for each target word (ties: leftmost source; NULL
/// only when strictly better).
AlignmentSet viterbi_align(const SentencePair& pair, const LexTable& fwd);

/// Viterbi alignments in both directions, symmetrized with grow-diag-final.
/// `fwd` is t(tgt|src), `rev` is t(src|tgt).
AlignmentSet sym_align(const SentencePair& pair, const LexTable& fwd, const LexTable& rev);
AlignmentSet grow_diag_final(std::size_t src_len, std::size_t tgt_len, const AlignmentSet& s2t, const AlignmentSet& t2s);

std::string format_alignment(const AlignmentSet& a);
AlignmentSet parse_alignment(std::string_view text, std::size_t line = 0);

struct PhrasePair {
  Tokens src;
  Tokens tgt;
  AlignmentSet alignment;  // phrase-internal

  friend bool operator==(const PhrasePair&, const PhrasePair&) = default;
};

/// Extracted phrase pairs with occurrence counts. Keyed by (src, tgt); the
/// most frequent internal alignment is kept per pair.
class PhraseCounts {
 public:
  void add(const PhrasePair& pair, std::size_t count = 1);
  std::size_t total() const;
  std::size_t distinct() const { return counts_.size(); }
  std::size_t count(const Tokens& src, const Tokens& tgt) const;

  struct Item {
    std::size_t count = 0;
    std::map<AlignmentSet, std::size_t> alignments;
  };
  const std::map<std::pair<Tokens, Tokens>, Item>& items() const { return counts_; }

 private:
  std::map<std::pair<Tokens, Tokens>, Item> counts_;
};

/// All phrase pairs up to max_len tokens per side consistent with the
/// alignment, with unaligned target boundary words extending pairs.
std::vector<PhrasePair> extract_phrases(const SentencePair& pair, const AlignmentSet& alignment,
                                        std::size_t max_len = 7);
void extract_phrases(const SentencePair& pair, const AlignmentSet& alignment, std::size_t max_len,
                     PhraseCounts& counts);

struct PhraseEntry {
  Tokens src;
  Tokens tgt;
  double phi_fwd = 1.0;  // p(tgt | src)
  double lex_fwd = 1.0;  // lex(tgt | src, a); 1 when not computed
  double phi_bwd = 1.0;  // p(src | tgt)
  double lex_bwd = 1.0;
  AlignmentSet alignment;
  std::size_t count_src = 0, count_tgt = 0, count_pair = 0;

  friend bool operator==(const PhraseEntry&, const PhraseEntry&) = default;
};

double lexical_weight(const Tokens& src, const Tokens& tgt, const AlignmentSet& alignment, const LexTable& table);

class PhraseTable {
 public:
  explicit PhraseTable(std::size_t max_len = 7) : max_len_(max_len) {}

  /// Entries for a source phrase, sorted by phi_fwd descending; empty when
  /// the phrase is unknown.
  const std::vector<PhraseEntry>& lookup(std::span<const std::string> src) const;
  bool contains(std::span<const std::string> src) const;

  void add(PhraseEntry entry);
  void sort_entries();

  std::size_t max_len() const { return max_len_; }
  std::size_t size() const;
  bool empty() const { return table_.empty(); }

  /// Source phrases in sorted order, each with its entries.
  std::vector<const std::vector<PhraseEntry>*> all() const;

  /// `src ||| tgt ||| phi_fwd lex_fwd phi_bwd lex_bwd ||| alignment ||| c_tgt c_src c_pair`
  std::string save() const;
  static PhraseTable load(std::string_view text, std::size_t max_len = 7);
  static PhraseTable load_file(const std::string& path, std::size_t max_len = 7);

 private:
  std::size_t max_len_;
  std::map<std::string, std::vector<PhraseEntry>> table_;
};

/// Relative-frequency scoring of extracted counts; lexical weights use the
/// given Model 1 tables (t(tgt|src) forward, t(src|tgt) backward) when set.
PhraseTable build_table(const PhraseCounts& counts, const LexTable* fwd = nullptr, const LexTable* rev = nullptr,
                        std::size_t max_len = 7);

struct TmTrainOptions {
  std::size_t max_len = 7;
  Model1Options model1;
  bool lexical_weights = true;
};

/// Model 1 in both directions, symmetrization, extraction and scoring.
PhraseTable train_translation_model(const std::vector<SentencePair>& pairs, const TmTrainOptions& options = {});

}  // namespace gectune
