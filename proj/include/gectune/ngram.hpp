#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gectune/common.hpp"

namespace gectune {

using WordId = std::uint32_t;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

/// Log10 probability stored for <s>, which is never predicted.
inline constexpr double kNoProb = -99.0;

struct NGramEntry {
  double logprob = 0.0;  // log10
  double backoff = 0.0;  // log10; 0 when the n-gram is never a context
  bool has_backoff = false;
};

struct NGramTrainOptions {
  std::size_t order = 3;
  /// Drop n-grams of order >= 3 seen at most this many times (0: keep all).
  std::size_t prune_count = 0;
};

/// Backoff n-gram model over an arbitrary token alphabet (words, word
/// classes, edit operations). Log base 10 throughout.
class NGramModel {
 public:
  NGramModel() = default;

  std::size_t order() const { return tables_.size(); }
  std::size_t vocab_size() const { return words_.size(); }
  std::size_t count(std::size_t n) const { return tables_.at(n - 1).size(); }

  WordId bos() const { return bos_; }
  WordId eos() const { return eos_; }
  WordId unk() const { return unk_; }

  /// Id of `word`, or the <unk> id when unknown.
  WordId id(std::string_view word) const;
  const std::string& word(WordId id) const { return words_.at(id); }
  bool known(std::string_view word) const;

  /// Conditional log10 p(w | context) with backoff; `context` is in
  /// chronological order and may be longer than order-1.
  double score_word(std::span<const WordId> context, WordId w) const;

  /// Sum of conditional log10 probabilities of tokens and </s> after <s>.
  double score_seq(std::span<const std::string> tokens) const;
  double score_ids(std::span<const WordId> ids) const;

  const NGramEntry* find(std::span<const WordId> ngram) const;

  /// All stored n-grams of length n, sorted by their word strings.
  std::vector<std::pair<std::vector<WordId>, NGramEntry>> entries(std::size_t n) const;

  /// Word ids of the vocabulary excluding <s>, i.e. the predictable symbols.
  std::vector<WordId> predictable() const;

  static NGramModel train(const std::vector<Tokens>& corpus, const NGramTrainOptions& options);
  static NGramModel load_arpa(std::string_view text);
  static NGramModel load_arpa_file(const std::string& path);
  std::string save_arpa() const;

 private:
  struct KeyHash {
    using is_transparent = void;
    std::size_t operator()(std::span<const WordId> key) const;
    std::size_t operator()(const std::vector<WordId>& key) const { return (*this)(std::span<const WordId>(key)); }
  };
  struct KeyEq {
    using is_transparent = void;
    bool operator()(std::span<const WordId> a, std::span<const WordId> b) const {
      return std::equal(a.begin(), a.end(), b.begin(), b.end());
    }
  };
  using Table = std::unordered_map<std::vector<WordId>, NGramEntry, KeyHash, KeyEq>;

  WordId intern(std::string_view word);
  void finalize_specials();

  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<Table> tables_;
  WordId bos_ = 0, eos_ = 0, unk_ = 0;
};

/// Word -> class label map; unmapped words fall back to `unk_class`.
class ClassMap {
 public:
  ClassMap() = default;
  explicit ClassMap(std::unordered_map<std::string, std::string> map, std::string unk_class = "CUNK")
      : map_(std::move(map)), unk_class_(std::move(unk_class)) {}

  const std::string& lookup(const std::string& word) const;
  std::size_t size() const { return map_.size(); }

  /// Lines "word<TAB>class".
  static ClassMap parse(std::string_view text);
  static ClassMap load(const std::string& path);
  std::string save() const;

 private:
  std::unordered_map<std::string, std::string> map_;
  std::string unk_class_ = "CUNK";
};

Tokens project_classes(std::span<const std::string> tokens, const ClassMap& classes);

/// Per-token cross-entropy: -log10 p(s) / (|s| + 1), counting </s>.
double cross_entropy(const NGramModel& model, std::span<const std::string> tokens);

struct MooreLewisResult {
  std::vector<double> scores;       // H_in - H_gen per sentence
  std::vector<std::size_t> kept;    // indices with negative score
};

MooreLewisResult moore_lewis(const std::vector<Tokens>& corpus, const NGramModel& in_domain,
                             const NGramModel& general);

}  // namespace gectune
