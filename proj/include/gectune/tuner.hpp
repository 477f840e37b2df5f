#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "gectune/common.hpp"
#include "gectune/corpus.hpp"
#include "gectune/decoder.hpp"
#include "gectune/features.hpp"
#include "gectune/metric.hpp"

namespace gectune {

/// Sufficient statistics of one hypothesis: (correct, proposed, gold) for
/// M2; (matches[1..N], totals[1..N], hyp_len, ref_len) for BLEU.
using StatsVec = std::vector<double>;

enum class MetricKind { M2, Bleu };

struct TuneMetric {
  MetricKind kind = MetricKind::M2;
  MetricConfig m2;
  std::size_t bleu_order = 4;

  std::size_t stats_size() const;
  /// Corpus score of summed statistics.
  double corpus_score(std::span<const double> stats) const;
  /// Sentence-level score: F_beta with the empty conventions, or BLEU with
  /// add-epsilon smoothing.
  double sentence_score(std::span<const double> stats) const;
};

StatsVec to_stats(const Stats3& s);
StatsVec to_stats(const BleuStats& s);

/// Per-hypothesis statistics against a dev corpus, computed at most once per
/// (sentence, surface).
class StatsCache {
 public:
  StatsCache(const Corpus& dev, TuneMetric metric);

  const StatsVec& stats(std::size_t sid, const Tokens& surface);
  std::size_t computations() const { return computations_; }
  std::size_t size() const { return corpus_->size(); }
  const TuneMetric& metric() const { return metric_; }

 private:
  const Corpus* corpus_;
  TuneMetric metric_;
  std::vector<Tokens> refs_;
  std::vector<std::map<std::string, StatsVec>> cache_;
  std::size_t computations_ = 0;
};

struct PoolEntry {
  Tokens surface;
  FeatureVec features;
  StatsVec stats;
};

/// Accumulated n-best lists per dev sentence, deduplicated on surface.
class Pool {
 public:
  explicit Pool(std::size_t sentences = 0) : entries_(sentences) {}

  /// Adds hypotheses not yet present; returns how many were new.
  std::size_t merge(std::size_t sid, const NBest& nbest, StatsCache& cache);
  void add(std::size_t sid, PoolEntry entry);

  std::size_t sentences() const { return entries_.size(); }
  std::size_t size() const;
  const std::vector<PoolEntry>& operator[](std::size_t sid) const { return entries_.at(sid); }

 private:
  std::vector<std::vector<PoolEntry>> entries_;
};

/// Corpus metric of the model-best entry of each sentence (ties: first).
double pool_metric(const Pool& pool, const WeightVec& weights, const TuneMetric& metric);

struct LineSearchResult {
  double gamma = 0.0;
  double metric = 0.0;
};

/// Exact line search along `weights + gamma * direction` via per-sentence
/// upper envelopes. Returns the midpoint of the best interval; among equally
/// good intervals the one closest to gamma = 0 wins.
LineSearchResult mert_line_search(const Pool& pool, const WeightVec& weights, const WeightVec& direction,
                                  const TuneMetric& metric);

struct MertConfig {
  std::size_t random_directions = 20;
  std::size_t max_rounds = 100;  // accepted line searches per optimization
};

struct ProConfig {
  std::size_t samples = 5000;   // candidate pairs per sentence
  std::size_t keep = 50;        // pairs kept per sentence
  double min_diff = 0.05;       // minimum metric difference
  double interpolation = 0.1;   // weight of the new vector
  std::size_t epochs = 100;
  double learning_rate = 1.0;   // multiple of the safe step 4 / max|x|^2
};

struct MiraConfig {
  double decay = 0.999;
  bool model_bg = false;  // background from model-best instead of hope
  double c = 0.01;
  std::size_t epochs = 60;
};

/// Which coordinates an optimizer may move: enabled dense slots and every
/// sparse name seen in the pool.
struct FeatureSpace {
  std::vector<std::size_t> dense;
  std::vector<std::string> sparse;

  static FeatureSpace of(const Pool& pool, const FeatureSet& features);
  std::size_t size() const { return dense.size() + sparse.size(); }
};

struct OptimizeResult {
  WeightVec weights;
  double metric = 0.0;
  std::vector<std::string> warnings;
};

/// Coordinate and seeded random-direction line searches, accepting strict
/// improvements until none remains. Weights are L1-normalized after each step.
OptimizeResult mert_optimize(const Pool& pool, const WeightVec& init, const TuneMetric& metric,
                             const FeatureSpace& space, const MertConfig& config, Rng& rng);

/// Pairwise ranking optimization; returns interpolation*new + (1-interpolation)*prev.
OptimizeResult pro_optimize(const Pool& pool, const WeightVec& prev, const TuneMetric& metric,
                            const FeatureSpace& space, const ProConfig& config, Rng& rng);

/// Background statistics update B <- decay * (B + s).
void mira_background_update(StatsVec& background, const StatsVec& stats, double decay);

/// Metric of a hypothesis scored against the background pseudo-corpus.
double mira_metric(const StatsVec& background, const StatsVec& stats, const TuneMetric& metric);

/// Batch Mira over the pool with hope/fear selection and averaged weights.
OptimizeResult mira_optimize(const Pool& pool, const WeightVec& init, const TuneMetric& metric,
                             const FeatureSpace& space, const MiraConfig& config, Rng& rng);

enum class Optimizer { Mert, Pro, Mira };

Optimizer parse_optimizer(std::string_view name);
std::string_view optimizer_name(Optimizer o);

struct TunerConfig {
  Optimizer optimizer = Optimizer::Mert;
  TuneMetric metric;
  std::size_t iterations = 10;
  FeatureSet features;
  WeightVec init;
  std::uint64_t seed = 1;
  MertConfig mert;
  ProConfig pro;
  MiraConfig mira;
};

struct IterationLog {
  std::size_t iter = 0;
  double metric = 0.0;  // dev metric of the decoded 1-best at this iteration
  std::size_t pool_size = 0;
};

struct TuneResult {
  WeightVec weights;  // best decoded dev metric over iterations
  double metric = 0.0;
  std::vector<IterationLog> log;
  std::vector<std::string> warnings;
};

/// Decodes the dev sources with the given weights, one n-best per sentence.
using DecodeFn = std::function<std::vector<NBest>(const WeightVec&)>;

/// Iterative tuning: decode, grow the pool, optimize; stops when the pool
/// stops growing or after `iterations` decodes.
TuneResult tune(const DecodeFn& decode, const Corpus& dev, const TunerConfig& config);

std::string format_tune_log(const std::vector<IterationLog>& log);

/// L1-normalizes each run's dense block, then averages every coordinate;
/// sparse names missing from a run count as 0 for it.
WeightVec average_weights(const std::vector<WeightVec>& runs);

/// Equal weights on the enabled dense slots, L1-normalized.
WeightVec uniform_weights(const FeatureSet& features);

struct TuningPlan {
  std::size_t folds = 4;
  std::size_t repetitions = 5;
  std::uint64_t seed = 1;
  /// Derive a distinct seed per repetition; otherwise all repetitions reuse `seed`.
  bool reseed_runs = true;

  void validate() const;
};

/// Decodes `sources` with the given weights.
using SystemFn = std::function<std::vector<NBest>(const std::vector<Tokens>& sources, const WeightVec&)>;
/// Builds a system from training data (e.g. trains a translation model).
using TrainFn = std::function<SystemFn(const Corpus& train)>;

struct FoldRun {
  std::size_t run = 0;
  std::size_t fold = 0;
  double dev_metric = 0.0;
  WeightVec weights;
  std::vector<IterationLog> log;
};

struct VarianceSummary {
  double min = 0.0, max = 0.0, mean = 0.0, stddev = 0.0;
};

VarianceSummary summarize(const std::vector<double>& values);

struct CrossfoldResult {
  WeightVec weights;                   // centroid of the repetition centroids
  std::vector<WeightVec> run_weights;  // one centroid per repetition
  std::vector<double> run_metrics;     // mean dev metric over folds, per repetition
  std::vector<FoldRun> folds;
  VarianceSummary variance;
};

CrossfoldResult crossfold_tune(const Corpus& corpus, const TuningPlan& plan, const TunerConfig& tuner,
                               const TrainFn& train);

/// `run<TAB>fold<TAB>dev_metric` lines.
std::string format_variance_tsv(const CrossfoldResult& result);

}  // namespace gectune
