#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gectune/common.hpp"
#include "gectune/corpus.hpp"

namespace gectune {

/// M2 sufficient statistics, summable across sentences.
struct Stats3 {
  long long correct = 0;
  long long proposed = 0;
  long long gold = 0;

  Stats3& operator+=(const Stats3& o) {
    correct += o.correct;
    proposed += o.proposed;
    gold += o.gold;
    return *this;
  }
  friend Stats3 operator+(Stats3 a, const Stats3& b) { return a += b; }
  friend bool operator==(const Stats3&, const Stats3&) = default;
};

enum class AnnotatorMode { PerSentence, Cumulative };

struct MetricConfig {
  double beta = 0.5;
  std::size_t max_unchanged = 2;
  AnnotatorMode mode = AnnotatorMode::PerSentence;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f = 0.0;
};

/// F_beta from precision and recall; 0 when both are 0.
double f_beta(double precision, double recall, double beta);

/// P = correct/proposed (1 if nothing proposed), R = correct/gold (1 if no
/// gold edits), F = F_beta(P, R).
Prf prf(const Stats3& stats, double beta);

/// Real-valued variant used for background-smoothed statistics.
Prf prf(double correct, double proposed, double gold, double beta);

struct LatticeEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  Edit edit;
  bool noop = false;   // MATCH edge, not a proposed edit
  bool merged = false;
};

/// Candidate-edit graph between a source and a hypothesis. Nodes are cells
/// of the Levenshtein table lying on some minimal-cost alignment; base edges
/// are the single-token operations between them, and merged edges join runs
/// of operations that start and end with a change and contain at most
/// `max_unchanged` unchanged tokens.
struct EditLattice {
  std::vector<std::pair<std::size_t, std::size_t>> nodes;  // (src pos, hyp pos), topologically sorted
  std::vector<LatticeEdge> edges;
  std::size_t source = 0;
  std::size_t sink = 0;

  /// Distinct proposed edits on non-MATCH edges, sorted.
  EditSet candidate_edits() const;
};

EditLattice candidate_lattice(const Tokens& src, const Tokens& hyp, const MetricConfig& config = {});

/// Path through the lattice matching the most gold edits (each gold edit
/// credited at most once), ties broken by fewer proposed edits.
Stats3 max_match(const EditLattice& lattice, const EditSet& gold);
Stats3 max_match_sentence(const Tokens& src, const Tokens& hyp, const EditSet& gold, const MetricConfig& config = {});

/// Per-annotator statistics of one sentence, in ascending annotator-id order.
/// A sentence without annotations behaves as one annotator with no edits.
std::vector<Stats3> annotator_stats(const AnnotatedSentence& sentence, const Tokens& hyp, const MetricConfig& config);
std::vector<int> annotator_ids(const AnnotatedSentence& sentence);

/// Picks the annotator maximizing sentence F (per-sentence mode) or F of the
/// running total plus the candidate (cumulative mode); ties go to the lower
/// index.
std::pair<std::size_t, Stats3> choose_annotator(std::span<const Stats3> per_annotator, const Stats3& running,
                                                const MetricConfig& config);

struct SentenceScore {
  Stats3 stats;
  int annotator = 0;
};

struct M2Report {
  double beta = 0.5;
  Stats3 total;
  Prf score;
  std::vector<SentenceScore> sentences;
};

M2Report corpus_m2(const Corpus& corpus, const std::vector<Tokens>& hyps, const MetricConfig& config = {});

/// "Precision : x.xxxx" / "Recall : x.xxxx" / "F_<beta> : x.xxxx".
std::string format_report(const M2Report& report);
/// idx, correct, proposed, gold, annotator (tab separated, no header).
std::string format_sentence_tsv(const M2Report& report);

struct BleuStats {
  std::vector<double> matches;  // clipped n-gram matches, n = 1..order
  std::vector<double> totals;   // hypothesis n-gram counts
  double hyp_len = 0;
  double ref_len = 0;

  BleuStats& operator+=(const BleuStats& o);
};

BleuStats bleu_stats(const Tokens& hyp, const Tokens& ref, std::size_t order = 4);

/// BLEU of (summed) statistics. With epsilon > 0 every precision of order 2
/// and above becomes (m + eps) / (t + eps).
double bleu_score(const BleuStats& stats, double epsilon = 0.0);

struct BleuReport {
  double score = 0.0;
  std::vector<BleuStats> sentences;
};

BleuReport bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, std::size_t order = 4,
                double epsilon = 0.0);

inline constexpr double kSentenceBleuEpsilon = 0.1;

}  // namespace gectune
