#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gectune/common.hpp"
#include "gectune/editops.hpp"
#include "gectune/features.hpp"
#include "gectune/ngram.hpp"
#include "gectune/phrasetable.hpp"

namespace gectune {

/// Sparse edit feature families: edit factor and context factor are word
/// forms (0) or word classes (1).
enum class SparseFamily { E0, E1, E0C10, E1C11, E0C11 };

std::string_view family_name(SparseFamily family);
SparseFamily parse_family(std::string_view name);

struct SparseFeatureConfig {
  SparseFamily family = SparseFamily::E0;
  const ClassMap* classes = nullptr;  // required by class-factor families

  bool edit_classes() const;
  bool context_classes() const;
  bool has_context() const;
};

/// Edit features of one phrase pair. `left`/`right` are the source tokens
/// just outside the phrase (`<s>`/`</s>` at the boundaries). Names are
/// prefixed with the family tag, e.g. `E0C10~problem_subst(comes,surfaces)`.
std::map<std::string, double> sparse_features(const Tokens& src, const Tokens& tgt, const std::string& left,
                                              const std::string& right, const SparseFeatureConfig& config);

struct TranslationOption {
  std::size_t start = 0;  // source span [start, end)
  std::size_t end = 0;
  Tokens tgt;
  bool copy = false;        // pass-through for a token missing from the table
  FeatureVec features;      // stateless features only
};

struct DecoderConfig {
  std::size_t beam = 100;
  std::size_t nbest = 1;
  /// Derivations kept per search node, as a multiple of `nbest`, so that
  /// surface deduplication still leaves `nbest` distinct outputs.
  std::size_t nbest_factor = 4;
  std::size_t distortion_limit = 0;
  /// Translation options kept per source phrase (highest phi_fwd first).
  std::size_t table_limit = 20;
  FeatureSet features;
  std::optional<SparseFeatureConfig> sparse;
  OpAlphabet osm_alphabet = OpAlphabet::Plain;

  void validate() const;
};

/// Models used while decoding; optional ones may be null when the
/// corresponding feature is disabled.
struct Models {
  const PhraseTable* table = nullptr;
  const NGramModel* lm = nullptr;
  const NGramModel* class_lm = nullptr;
  const ClassMap* classes = nullptr;
  const NGramModel* osm = nullptr;

  void validate(const DecoderConfig& config) const;
};

/// Options for every source span up to the table's phrase length, plus a
/// copy-through option for every single token without a table entry.
std::vector<TranslationOption> build_options(const Tokens& sentence, const PhraseTable& table,
                                             const DecoderConfig& config);

/// Stateless features of an option: TM log-probabilities, LD and D/I/S
/// counts, penalties and sparse edits. Disabled groups stay 0.
FeatureVec option_features(const Tokens& src_phrase, const Tokens& tgt, const PhraseEntry* entry,
                           const std::string& left, const std::string& right, const DecoderConfig& config);

struct Hypothesis {
  Tokens surface;
  FeatureVec features;
  double score = 0.0;
};

using NBest = std::vector<Hypothesis>;

/// Full feature vector of a complete derivation, computed from scratch.
FeatureVec derivation_features(const Tokens& sentence, const std::vector<const TranslationOption*>& derivation,
                               const Models& models, const DecoderConfig& config);

/// Monotone beam search. Returns up to `config.nbest` hypotheses with
/// distinct surfaces, best first. Hypothesis scores equal the dot product of
/// the weights and the recomputed features.
NBest decode(const Tokens& sentence, const Models& models, const WeightVec& weights, const DecoderConfig& config);

/// `sid ||| tokens ||| name= v ... ||| total`, enabled dense slots first,
/// then sparse features.
std::string format_nbest(std::size_t sid, const NBest& nbest, const FeatureSet& features);

struct NBestEntry {
  std::size_t sid = 0;
  Hypothesis hyp;
};

std::vector<NBestEntry> parse_nbest(std::string_view text);

}  // namespace gectune
