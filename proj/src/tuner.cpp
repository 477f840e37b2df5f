#include "gectune/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gectune {

std::size_t TuneMetric::stats_size() const { return kind == MetricKind::M2 ? 3 : 2 * bleu_order + 2; }

namespace {

BleuStats bleu_from(std::span<const double> stats, std::size_t order) {
  BleuStats b;
  b.matches.assign(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(order));
  b.totals.assign(stats.begin() + static_cast<std::ptrdiff_t>(order),
                  stats.begin() + static_cast<std::ptrdiff_t>(2 * order));
  b.hyp_len = stats[2 * order];
  b.ref_len = stats[2 * order + 1];
  return b;
}

}  // namespace

double TuneMetric::corpus_score(std::span<const double> stats) const {
  if (kind == MetricKind::M2) return prf(stats[0], stats[1], stats[2], m2.beta).f;
  return bleu_score(bleu_from(stats, bleu_order));
}

double TuneMetric::sentence_score(std::span<const double> stats) const {
  if (kind == MetricKind::M2) return prf(stats[0], stats[1], stats[2], m2.beta).f;
  return bleu_score(bleu_from(stats, bleu_order), kSentenceBleuEpsilon);
}

StatsVec to_stats(const Stats3& s) {
  return {static_cast<double>(s.correct), static_cast<double>(s.proposed), static_cast<double>(s.gold)};
}

StatsVec to_stats(const BleuStats& s) {
  StatsVec v(s.matches.begin(), s.matches.end());
  v.insert(v.end(), s.totals.begin(), s.totals.end());
  v.push_back(s.hyp_len);
  v.push_back(s.ref_len);
  return v;
}

StatsCache::StatsCache(const Corpus& dev, TuneMetric metric)
    : corpus_(&dev), metric_(metric), cache_(dev.size()) {
  metric_.m2.mode = AnnotatorMode::PerSentence;
  if (metric_.kind == MetricKind::Bleu) {
    for (const auto& s : dev.sentences) refs_.push_back(corrected(s, annotator_ids(s).front()));
  }
}

const StatsVec& StatsCache::stats(std::size_t sid, const Tokens& surface) {
  if (sid >= cache_.size()) {
    throw std::invalid_argument("hypothesis for sentence " + std::to_string(sid) + " but dev set has " +
                                std::to_string(cache_.size()) + " sentences");
  }
  auto key = join(surface);
  auto it = cache_[sid].find(key);
  if (it != cache_[sid].end()) return it->second;
  ++computations_;
  StatsVec v;
  if (metric_.kind == MetricKind::M2) {
    const auto per = annotator_stats(corpus_->sentences[sid], surface, metric_.m2);
    v = to_stats(choose_annotator(per, {}, metric_.m2).second);
  } else {
    v = to_stats(bleu_stats(surface, refs_[sid], metric_.bleu_order));
  }
  return cache_[sid].emplace(std::move(key), std::move(v)).first->second;
}

std::size_t Pool::merge(std::size_t sid, const NBest& nbest, StatsCache& cache) {
  if (sid >= entries_.size()) throw std::invalid_argument("pool: sentence id out of range");
  std::size_t added = 0;
  for (const auto& h : nbest) {
    auto& list = entries_[sid];
    if (std::any_of(list.begin(), list.end(), [&](const PoolEntry& e) { return e.surface == h.surface; })) continue;
    list.push_back(PoolEntry{h.surface, h.features, cache.stats(sid, h.surface)});
    ++added;
  }
  return added;
}

void Pool::add(std::size_t sid, PoolEntry entry) {
  if (sid >= entries_.size()) entries_.resize(sid + 1);
  entries_[sid].push_back(std::move(entry));
}

std::size_t Pool::size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.size();
  return n;
}

namespace {

using Row = std::vector<std::pair<std::uint32_t, double>>;
using Vec = std::vector<double>;

struct Projected {
  std::vector<std::vector<Row>> rows;            // per sentence, per entry
  std::vector<std::vector<const StatsVec*>> stats;
};

Projected project(const Pool& pool, const FeatureSpace& space) {
  std::unordered_map<std::string, std::uint32_t> sparse_index;
  for (std::size_t i = 0; i < space.sparse.size(); ++i) {
    sparse_index.emplace(space.sparse[i], static_cast<std::uint32_t>(space.dense.size() + i));
  }
  Projected p;
  p.rows.resize(pool.sentences());
  p.stats.resize(pool.sentences());
  for (std::size_t s = 0; s < pool.sentences(); ++s) {
    for (const auto& e : pool[s]) {
      Row row;
      for (std::size_t d = 0; d < space.dense.size(); ++d) {
        const double v = e.features.dense[space.dense[d]];
        if (v != 0.0) row.emplace_back(static_cast<std::uint32_t>(d), v);
      }
      for (const auto& [name, v] : e.features.sparse) {
        auto it = sparse_index.find(name);
        if (it != sparse_index.end() && v != 0.0) row.emplace_back(it->second, v);
      }
      p.rows[s].push_back(std::move(row));
      p.stats[s].push_back(&e.stats);
    }
  }
  return p;
}

Vec to_vec(const WeightVec& w, const FeatureSpace& space) {
  Vec v;
  v.reserve(space.size());
  for (std::size_t d : space.dense) v.push_back(w.dense[d]);
  for (const auto& name : space.sparse) v.push_back(w.get(name));
  return v;
}

WeightVec from_vec(const Vec& v, const FeatureSpace& space, WeightVec base) {
  for (std::size_t d = 0; d < space.dense.size(); ++d) base.dense[space.dense[d]] = v[d];
  for (std::size_t i = 0; i < space.sparse.size(); ++i) {
    const double x = v[space.dense.size() + i];
    if (x != 0.0) {
      base.sparse[space.sparse[i]] = x;
    } else {
      base.sparse.erase(space.sparse[i]);
    }
  }
  return base;
}

double row_dot(const Vec& w, const Row& row) {
  double t = 0.0;
  for (auto [i, v] : row) t += w[i] * v;
  return t;
}

std::size_t argmax(const Vec& w, const std::vector<Row>& rows) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t h = 0; h < rows.size(); ++h) {
    const double s = row_dot(w, rows[h]);
    if (s > best_score) {
      best_score = s;
      best = h;
    }
  }
  return best;
}

void add_to(StatsVec& acc, const StatsVec& s, double sign = 1.0) {
  if (acc.size() < s.size()) acc.resize(s.size(), 0.0);
  for (std::size_t i = 0; i < s.size(); ++i) acc[i] += sign * s[i];
}

double projected_metric(const Projected& p, const Vec& w, const TuneMetric& metric) {
  StatsVec total(metric.stats_size(), 0.0);
  for (std::size_t s = 0; s < p.rows.size(); ++s) {
    if (p.rows[s].empty()) continue;
    add_to(total, *p.stats[s][argmax(w, p.rows[s])]);
  }
  return metric.corpus_score(total);
}

struct EnvelopePiece {
  double start;  // the line is maximal from here to the next piece's start
  std::size_t hyp;
};

// Upper envelope of lines a + gamma * b. Among identical lines the lowest
// index is kept.
std::vector<EnvelopePiece> upper_envelope(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (b[x] != b[y]) return b[x] < b[y];
    if (a[x] != a[y]) return a[x] > a[y];
    return x < y;
  });
  std::vector<EnvelopePiece> hull;
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::size_t l = order[k];
    if (k > 0 && b[order[k - 1]] == b[l]) continue;  // dominated parallel line
    double start = -inf;
    while (!hull.empty()) {
      const std::size_t top = hull.back().hyp;
      start = (a[top] - a[l]) / (b[l] - b[top]);
      if (start <= hull.back().start) {
        hull.pop_back();
        start = -inf;
      } else {
        break;
      }
    }
    hull.push_back({hull.empty() ? -inf : start, l});
  }
  return hull;
}

LineSearchResult line_search(const Projected& p, const Vec& w, const Vec& dir, const TuneMetric& metric) {
  const double inf = std::numeric_limits<double>::infinity();
  struct Event {
    double x;
    std::size_t sid;
    std::size_t hyp;
  };
  std::vector<Event> events;
  std::vector<std::size_t> current(p.rows.size(), 0);
  StatsVec total(metric.stats_size(), 0.0);
  std::vector<double> a, b;
  for (std::size_t s = 0; s < p.rows.size(); ++s) {
    if (p.rows[s].empty()) continue;
    a.clear();
    b.clear();
    for (const auto& row : p.rows[s]) {
      a.push_back(row_dot(w, row));
      b.push_back(row_dot(dir, row));
    }
    const auto hull = upper_envelope(a, b);
    current[s] = hull.front().hyp;
    add_to(total, *p.stats[s][current[s]]);
    for (std::size_t k = 1; k < hull.size(); ++k) events.push_back({hull[k].start, s, hull[k].hyp});
  }
  std::sort(events.begin(), events.end(), [](const Event& x, const Event& y) { return x.x < y.x; });

  auto gamma_of = [](double lo, double hi) {
    if (std::isinf(lo) && std::isinf(hi)) return 0.0;
    if (std::isinf(lo)) return hi - 1.0;
    if (std::isinf(hi)) return lo + 1.0;
    return (lo + hi) / 2.0;
  };
  auto distance_to_zero = [](double lo, double hi) {
    if (lo <= 0.0 && hi >= 0.0) return 0.0;
    return lo > 0.0 ? lo : -hi;
  };

  double best_metric = -inf, best_lo = -inf, best_hi = inf;
  auto consider = [&](double lo, double hi) {
    const double m = metric.corpus_score(total);
    bool better = m > best_metric;
    if (!better && m == best_metric) {
      const double d_new = distance_to_zero(lo, hi), d_old = distance_to_zero(best_lo, best_hi);
      better = d_new < d_old ||
               (d_new == d_old && std::abs(gamma_of(lo, hi)) < std::abs(gamma_of(best_lo, best_hi)));
    }
    if (better) {
      best_metric = m;
      best_lo = lo;
      best_hi = hi;
    }
  };

  double lo = -inf;
  std::size_t k = 0;
  while (k < events.size()) {
    const double x = events[k].x;
    consider(lo, x);
    while (k < events.size() && events[k].x == x) {
      const Event& e = events[k++];
      add_to(total, *p.stats[e.sid][current[e.sid]], -1.0);
      current[e.sid] = e.hyp;
      add_to(total, *p.stats[e.sid][current[e.sid]]);
    }
    lo = x;
  }
  consider(lo, inf);
  return {gamma_of(best_lo, best_hi), best_metric};
}

void l1_normalize(Vec& v) {
  double n = 0.0;
  for (double x : v) n += std::abs(x);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

FeatureSet all_dense() {
  FeatureSet f;
  f.tm = f.lm = f.class_lm = f.osm = f.ld = f.ops = f.penalties = true;
  return f;
}

}  // namespace

double pool_metric(const Pool& pool, const WeightVec& weights, const TuneMetric& metric) {
  const FeatureSpace space = FeatureSpace::of(pool, all_dense());
  return projected_metric(project(pool, space), to_vec(weights, space), metric);
}

FeatureSpace FeatureSpace::of(const Pool& pool, const FeatureSet& features) {
  FeatureSpace space;
  for (std::size_t s = 0; s < kDenseCount; ++s) {
    if (features.enabled(s)) space.dense.push_back(s);
  }
  std::set<std::string> names;
  for (std::size_t s = 0; s < pool.sentences(); ++s) {
    for (const auto& e : pool[s]) {
      for (const auto& [name, v] : e.features.sparse) names.insert(name);
    }
  }
  space.sparse.assign(names.begin(), names.end());
  return space;
}

LineSearchResult mert_line_search(const Pool& pool, const WeightVec& weights, const WeightVec& direction,
                                  const TuneMetric& metric) {
  FeatureSpace space = FeatureSpace::of(pool, all_dense());
  // Sparse names only present in the weights or direction have no effect on scores.
  return line_search(project(pool, space), to_vec(weights, space), to_vec(direction, space), metric);
}

OptimizeResult mert_optimize(const Pool& pool, const WeightVec& init, const TuneMetric& metric,
                             const FeatureSpace& space, const MertConfig& config, Rng& rng) {
  const Projected p = project(pool, space);
  Vec w = to_vec(init, space);
  double current = projected_metric(p, w, metric);
  const std::size_t dims = space.size();
  for (std::size_t round = 0; round < config.max_rounds && dims > 0; ++round) {
    std::vector<Vec> directions;
    for (std::size_t d = 0; d < dims; ++d) {
      Vec unit(dims, 0.0);
      unit[d] = 1.0;
      directions.push_back(std::move(unit));
    }
    for (std::size_t r = 0; r < config.random_directions; ++r) {
      Vec dir(dims);
      for (double& x : dir) x = 2.0 * uniform_real(rng) - 1.0;
      directions.push_back(std::move(dir));
    }
    double best = current;
    const Vec* best_dir = nullptr;
    double best_gamma = 0.0;
    for (const auto& dir : directions) {
      const LineSearchResult r = line_search(p, w, dir, metric);
      if (r.metric > best) {
        best = r.metric;
        best_dir = &dir;
        best_gamma = r.gamma;
      }
    }
    if (!best_dir) break;
    for (std::size_t i = 0; i < dims; ++i) w[i] += best_gamma * (*best_dir)[i];
    l1_normalize(w);
    current = projected_metric(p, w, metric);
  }
  return {from_vec(w, space, init), current, {}};
}

OptimizeResult pro_optimize(const Pool& pool, const WeightVec& prev, const TuneMetric& metric,
                            const FeatureSpace& space, const ProConfig& config, Rng& rng) {
  if (config.keep > config.samples) throw ConfigError("pro: kept pairs must not exceed sampled pairs");
  const Projected p = project(pool, space);
  const std::size_t dims = space.size();

  struct Example {
    Vec x;
    double y;
  };
  std::vector<Example> examples;
  for (std::size_t s = 0; s < p.rows.size(); ++s) {
    const std::size_t n = p.rows[s].size();
    if (n < 2) continue;
    std::vector<double> score(n);
    for (std::size_t h = 0; h < n; ++h) score[h] = metric.sentence_score(*p.stats[s][h]);
    struct Pair {
      std::size_t i, j;
      double diff;
    };
    std::vector<Pair> pairs;
    for (std::size_t t = 0; t < config.samples; ++t) {
      const std::size_t i = uniform_index(rng, n), j = uniform_index(rng, n);
      const double diff = score[i] - score[j];
      if (std::abs(diff) > config.min_diff) pairs.push_back({i, j, diff});
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Pair& x, const Pair& y) { return std::abs(x.diff) > std::abs(y.diff); });
    if (pairs.size() > config.keep) pairs.resize(config.keep);
    for (const auto& pr : pairs) {
      Vec x(dims, 0.0);
      for (auto [k, v] : p.rows[s][pr.i]) x[k] += v;
      for (auto [k, v] : p.rows[s][pr.j]) x[k] -= v;
      const double y = pr.diff > 0 ? 1.0 : 0.0;
      Vec neg = x;
      for (double& v : neg) v = -v;
      examples.push_back({std::move(x), y});
      examples.push_back({std::move(neg), 1.0 - y});
    }
  }
  OptimizeResult result;
  if (examples.empty()) {
    result.weights = prev;
    result.metric = pool_metric(pool, prev, metric);
    result.warnings.push_back("pro: no hypothesis pair differs by more than the minimum metric difference; "
                              "weights unchanged");
    return result;
  }

  // Gradient descent on the mean logistic loss; the step is scaled by the
  // curvature bound max|x|^2 / 4.
  double max_sq = 0.0;
  for (const auto& e : examples) {
    max_sq = std::max(max_sq, std::inner_product(e.x.begin(), e.x.end(), e.x.begin(), 0.0));
  }
  const double step = config.learning_rate / std::max(max_sq / 4.0, 1e-12);
  Vec theta(dims, 0.0), grad(dims);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const auto& e : examples) {
      const double z = std::inner_product(theta.begin(), theta.end(), e.x.begin(), 0.0);
      const double g = 1.0 / (1.0 + std::exp(-z)) - e.y;
      for (std::size_t k = 0; k < dims; ++k) grad[k] += g * e.x[k];
    }
    for (std::size_t k = 0; k < dims; ++k) theta[k] -= step * grad[k] / static_cast<double>(examples.size());
  }

  Vec w = to_vec(prev, space);
  for (std::size_t k = 0; k < dims; ++k) {
    w[k] = config.interpolation * theta[k] + (1.0 - config.interpolation) * w[k];
  }
  result.weights = from_vec(w, space, prev);
  result.metric = projected_metric(p, w, metric);
  return result;
}

void mira_background_update(StatsVec& background, const StatsVec& stats, double decay) {
  if (background.size() < stats.size()) background.resize(stats.size(), 0.0);
  for (std::size_t i = 0; i < stats.size(); ++i) background[i] = decay * (background[i] + stats[i]);
}

double mira_metric(const StatsVec& background, const StatsVec& stats, const TuneMetric& metric) {
  StatsVec total = stats;
  add_to(total, background);
  if (metric.kind == MetricKind::M2) return prf(total[0], total[1], total[2], metric.m2.beta).f;
  return metric.sentence_score(total);
}

OptimizeResult mira_optimize(const Pool& pool, const WeightVec& init, const TuneMetric& metric,
                             const FeatureSpace& space, const MiraConfig& config, Rng& rng) {
  if (!(config.decay > 0.0 && config.decay <= 1.0)) throw ConfigError("mira: decay must be in (0, 1]");
  const Projected p = project(pool, space);
  const std::size_t dims = space.size();
  Vec w = to_vec(init, space);
  Vec sum(dims, 0.0);
  std::size_t steps = 0;
  bool updated = false;
  StatsVec background(metric.stats_size(), 0.0);

  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < p.rows.size(); ++s) {
    if (!p.rows[s].empty()) order.push_back(s);
  }
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t s : order) {
      const auto& rows = p.rows[s];
      std::size_t hope = 0, fear = 0, best = 0;
      double hope_v = -std::numeric_limits<double>::infinity(), fear_v = hope_v, best_v = hope_v;
      std::vector<double> model(rows.size()), gain(rows.size());
      for (std::size_t h = 0; h < rows.size(); ++h) {
        model[h] = row_dot(w, rows[h]);
        gain[h] = mira_metric(background, *p.stats[s][h], metric);
        if (model[h] + gain[h] > hope_v) {
          hope_v = model[h] + gain[h];
          hope = h;
        }
        if (model[h] - gain[h] > fear_v) {
          fear_v = model[h] - gain[h];
          fear = h;
        }
        if (model[h] > best_v) {
          best_v = model[h];
          best = h;
        }
      }
      if (hope != fear) {
        const double loss = (gain[hope] - gain[fear]) - (model[hope] - model[fear]);
        Vec delta(dims, 0.0);
        for (auto [k, v] : rows[hope]) delta[k] += v;
        for (auto [k, v] : rows[fear]) delta[k] -= v;
        const double norm = std::inner_product(delta.begin(), delta.end(), delta.begin(), 0.0);
        if (loss > 0.0 && norm > 0.0) {
          const double eta = std::min(config.c, loss / norm);
          for (std::size_t k = 0; k < dims; ++k) w[k] += eta * delta[k];
          updated = true;
        }
      }
      mira_background_update(background, *p.stats[s][config.model_bg ? best : hope], config.decay);
      for (std::size_t k = 0; k < dims; ++k) sum[k] += w[k];
      ++steps;
    }
  }
  OptimizeResult result;
  if (!updated) {
    result.weights = init;
    result.metric = projected_metric(p, to_vec(init, space), metric);
    return result;
  }
  for (double& x : sum) x /= static_cast<double>(steps);
  result.weights = from_vec(sum, space, init);
  result.metric = projected_metric(p, sum, metric);
  return result;
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "mert") return Optimizer::Mert;
  if (name == "pro") return Optimizer::Pro;
  if (name == "mira") return Optimizer::Mira;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected mert, pro or mira)");
}

std::string_view optimizer_name(Optimizer o) {
  switch (o) {
    case Optimizer::Mert:
      return "mert";
    case Optimizer::Pro:
      return "pro";
    case Optimizer::Mira:
      return "mira";
  }
  return "";
}

WeightVec uniform_weights(const FeatureSet& features) {
  WeightVec w;
  std::size_t n = 0;
  for (std::size_t s = 0; s < kDenseCount; ++s) n += features.enabled(s) ? 1 : 0;
  for (std::size_t s = 0; s < kDenseCount; ++s) {
    if (features.enabled(s)) w.dense[s] = 1.0 / static_cast<double>(n);
  }
  return w;
}

TuneResult tune(const DecodeFn& decode, const Corpus& dev, const TunerConfig& config) {
  if (dev.size() == 0) throw std::invalid_argument("tune: empty dev set");
  StatsCache cache(dev, config.metric);
  Pool pool(dev.size());
  Rng rng(config.seed);
  WeightVec w = l1_norm(config.init) > 0.0 ? config.init : uniform_weights(config.features);

  TuneResult result;
  result.metric = -std::numeric_limits<double>::infinity();
  for (std::size_t iter = 1; iter <= std::max<std::size_t>(config.iterations, 1); ++iter) {
    const auto nbests = decode(w);
    if (nbests.size() != dev.size()) {
      throw std::invalid_argument("tune: decoder returned " + std::to_string(nbests.size()) + " n-best lists for " +
                                  std::to_string(dev.size()) + " dev sentences");
    }
    std::size_t added = 0;
    StatsVec total(config.metric.stats_size(), 0.0);
    for (std::size_t s = 0; s < nbests.size(); ++s) {
      if (nbests[s].empty()) throw std::invalid_argument("tune: empty n-best list for sentence " + std::to_string(s));
      added += pool.merge(s, nbests[s], cache);
      add_to(total, cache.stats(s, nbests[s].front().surface));
    }
    const double metric = config.metric.corpus_score(total);
    result.log.push_back({iter, metric, pool.size()});
    if (metric > result.metric) {
      result.metric = metric;
      result.weights = w;
    }
    if (added == 0 || iter >= config.iterations) break;

    const FeatureSpace space = FeatureSpace::of(pool, config.features);
    OptimizeResult step;
    switch (config.optimizer) {
      case Optimizer::Mert:
        step = mert_optimize(pool, w, config.metric, space, config.mert, rng);
        break;
      case Optimizer::Pro:
        step = pro_optimize(pool, w, config.metric, space, config.pro, rng);
        break;
      case Optimizer::Mira:
        step = mira_optimize(pool, w, config.metric, space, config.mira, rng);
        break;
    }
    result.warnings.insert(result.warnings.end(), step.warnings.begin(), step.warnings.end());
    w = step.weights;
  }
  return result;
}

std::string format_tune_log(const std::vector<IterationLog>& log) {
  std::ostringstream out;
  for (const auto& e : log) out << e.iter << '\t' << format_double(e.metric) << '\t' << e.pool_size << '\n';
  return out.str();
}

WeightVec average_weights(const std::vector<WeightVec>& runs) {
  if (runs.empty()) throw std::invalid_argument("average_weights: no runs");
  WeightVec avg;
  const double n = static_cast<double>(runs.size());
  for (const auto& run : runs) {
    double norm = 0.0;
    for (double x : run.dense) norm += std::abs(x);
    if (norm == 0.0) norm = 1.0;
    for (std::size_t s = 0; s < kDenseCount; ++s) avg.dense[s] += run.dense[s] / norm;
    for (const auto& [name, v] : run.sparse) avg.sparse[name] += v;
  }
  for (double& x : avg.dense) x /= n;
  for (auto& [name, v] : avg.sparse) v /= n;
  return avg;
}

void TuningPlan::validate() const {
  if (folds < 2) throw ConfigError("tuning plan needs at least 2 folds");
  if (repetitions < 1) throw ConfigError("tuning plan needs at least 1 repetition");
}

VarianceSummary summarize(const std::vector<double>& values) {
  VarianceSummary s;
  if (values.empty()) return s;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

CrossfoldResult crossfold_tune(const Corpus& corpus, const TuningPlan& plan, const TunerConfig& tuner,
                               const TrainFn& train) {
  plan.validate();
  if (corpus.size() < plan.folds) {
    throw std::invalid_argument("crossfold_tune: " + std::to_string(corpus.size()) + " sentences cannot fill " +
                                std::to_string(plan.folds) + " folds");
  }
  CrossfoldResult result;
  for (std::size_t run = 0; run < plan.repetitions; ++run) {
    const std::uint64_t run_seed = plan.reseed_runs ? derive_seed(plan.seed, run) : plan.seed;
    const auto folds = fold_indices(corpus.size(), plan.folds, run_seed);
    std::vector<WeightVec> fold_weights;
    double metric_sum = 0.0;
    for (std::size_t f = 0; f < plan.folds; ++f) {
      std::vector<std::size_t> train_idx;
      for (std::size_t g = 0; g < plan.folds; ++g) {
        if (g != f) train_idx.insert(train_idx.end(), folds[g].begin(), folds[g].end());
      }
      std::sort(train_idx.begin(), train_idx.end());
      const Corpus train_part = subset(corpus, train_idx);
      const Corpus dev = subset(corpus, folds[f]);
      const SystemFn system = train(train_part);
      std::vector<Tokens> sources;
      for (const auto& s : dev.sentences) sources.push_back(s.source);

      TunerConfig cfg = tuner;
      cfg.seed = derive_seed(run_seed, 1000 + f);
      const TuneResult tuned = tune([&](const WeightVec& w) { return system(sources, w); }, dev, cfg);
      result.folds.push_back({run, f, tuned.metric, tuned.weights, tuned.log});
      fold_weights.push_back(tuned.weights);
      metric_sum += tuned.metric;
    }
    result.run_weights.push_back(average_weights(fold_weights));
    result.run_metrics.push_back(metric_sum / static_cast<double>(plan.folds));
  }
  result.weights = average_weights(result.run_weights);
  result.variance = summarize(result.run_metrics);
  return result;
}

std::string format_variance_tsv(const CrossfoldResult& result) {
  std::ostringstream out;
  for (const auto& f : result.folds) out << f.run << '\t' << f.fold << '\t' << format_double(f.dev_metric) << '\n';
  return out.str();
}

}  // namespace gectune
