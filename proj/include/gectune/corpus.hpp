#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "gectune/common.hpp"

namespace gectune {

/// Span replacement over source tokens: [start, end) is replaced by
/// `replacement`. start == end is a pure insertion before `start`; an empty
/// replacement with start < end is a deletion.
struct Edit {
  std::size_t start = 0;
  std::size_t end = 0;
  Tokens replacement;
  std::string etype;  // opaque error-type label

  bool is_insertion() const { return start == end; }

  friend bool operator==(const Edit&, const Edit&) = default;
};

/// Edit identity used by the metric: span and replacement, ignoring the label.
inline bool same_edit(const Edit& a, const Edit& b) {
  return a.start == b.start && a.end == b.end && a.replacement == b.replacement;
}

using EditSet = std::vector<Edit>;

struct AnnotatedSentence {
  Tokens source;
  /// Annotator id -> that annotator's edits, sorted by (start, end).
  /// An annotator present with an empty set marked the sentence as correct.
  std::map<int, EditSet> gold;

  friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

struct Corpus {
  std::vector<AnnotatedSentence> sentences;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }
  std::size_t token_count() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Checks span bounds, ordering and non-overlap of every annotator set.
/// Throws ValidationError.
void validate(const AnnotatedSentence& sentence);

/// Reads the CoNLL M2 format. Throws ParseError (with line number) on
/// malformed lines and ValidationError on spans outside the sentence.
Corpus parse_m2(std::string_view text);
std::string write_m2(const Corpus& corpus);

Corpus load_m2(const std::string& path);

/// Applies a sorted, non-overlapping edit list to `source`.
Tokens apply_edits(const Tokens& source, const EditSet& edits);

/// Corrected side of one sentence under a given annotator (the source itself
/// when the annotator is absent).
Tokens corrected(const AnnotatedSentence& sentence, int annotator = 0);

struct AnnotatorPolicy {
  enum class Kind { Single, Union };
  Kind kind = Kind::Single;
  int annotator = 0;

  static AnnotatorPolicy single(int id) { return {Kind::Single, id}; }
  static AnnotatorPolicy any() { return {Kind::Union, 0}; }
};

/// Number of source tokens covered by a gold edit span of the selected
/// annotator(s). Insertions cover nothing.
std::size_t covered_tokens(const AnnotatedSentence& sentence, const AnnotatorPolicy& policy = {});

/// Fraction of source tokens that are part of an erroneous fragment.
/// Throws ValidationError when the corpus has no tokens.
double error_rate(const Corpus& corpus, const AnnotatorPolicy& policy = {});

struct AdaptResult {
  Corpus corpus;                      // surviving sentences, original order
  std::vector<std::size_t> kept;      // their indices in the input
  double rate = 0.0;
  bool reached = false;               // false: target unreachable, best subset returned
};

/// Greedily drops the sentence whose removal raises the error rate most
/// (ties: longer sentence, then lower index) until the rate reaches `target`.
AdaptResult adapt_error_rate(const Corpus& corpus, double target, const AnnotatorPolicy& policy = {});

/// Seeded shuffle followed by round-robin assignment. Returns the input
/// indices of each fold, ascending.
std::vector<std::vector<std::size_t>> fold_indices(std::size_t n, std::size_t k, std::uint64_t seed);
std::vector<Corpus> make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed);

Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices);

}  // namespace gectune
