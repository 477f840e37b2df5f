#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <set>

#include "gectune/editops.hpp"

namespace oracle {

using namespace gectune;

std::size_t edit_distance(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

std::vector<std::string> optimal_paths(const Tokens& src, const Tokens& hyp) {
  const std::size_t n = src.size(), m = hyp.size();
  // suffix[i][j]: distance between src[i:] and hyp[j:]
  std::vector<std::vector<std::size_t>> suffix(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = n + 1; i-- > 0;) {
    for (std::size_t j = m + 1; j-- > 0;) {
      if (i == n) {
        suffix[i][j] = m - j;
      } else if (j == m) {
        suffix[i][j] = n - i;
      } else {
        suffix[i][j] = std::min({suffix[i + 1][j] + 1, suffix[i][j + 1] + 1,
                                 suffix[i + 1][j + 1] + (src[i] == hyp[j] ? 0 : 1)});
      }
    }
  }
  std::vector<std::string> out;
  std::string cur;
  std::function<void(std::size_t, std::size_t)> walk = [&](std::size_t i, std::size_t j) {
    if (i == n && j == m) {
      out.push_back(cur);
      return;
    }
    const std::size_t here = suffix[i][j];
    if (i < n && j < m) {
      const bool same = src[i] == hyp[j];
      if (suffix[i + 1][j + 1] + (same ? 0 : 1) == here) {
        cur.push_back(same ? 'M' : 'S');
        walk(i + 1, j + 1);
        cur.pop_back();
      }
    }
    if (i < n && suffix[i + 1][j] + 1 == here) {
      cur.push_back('D');
      walk(i + 1, j);
      cur.pop_back();
    }
    if (j < m && suffix[i][j + 1] + 1 == here) {
      cur.push_back('I');
      walk(i, j + 1);
      cur.pop_back();
    }
  };
  walk(0, 0);
  return out;
}

std::vector<EditSet> proposal_sets(const Tokens& src, const Tokens& hyp, std::size_t max_unchanged) {
  std::set<std::vector<std::tuple<std::size_t, std::size_t, Tokens>>> seen;
  std::vector<EditSet> out;
  for (const auto& path : optimal_paths(src, hyp)) {
    // positions before each op
    std::vector<std::size_t> si(path.size() + 1), hj(path.size() + 1);
    for (std::size_t k = 0; k < path.size(); ++k) {
      si[k + 1] = si[k] + (path[k] == 'I' ? 0 : 1);
      hj[k + 1] = hj[k] + (path[k] == 'D' ? 0 : 1);
    }
    std::vector<std::tuple<std::size_t, std::size_t, Tokens>> cur;
    std::function<void(std::size_t)> cut = [&](std::size_t k) {
      if (k == path.size()) {
        auto key = cur;
        std::sort(key.begin(), key.end());
        if (seen.insert(key).second) {
          EditSet set;
          for (auto& [s, e, r] : key) set.push_back(Edit{s, e, r, {}});
          out.push_back(std::move(set));
        }
        return;
      }
      if (path[k] == 'M') {
        cut(k + 1);
        return;
      }
      // group [k, end] must end on a change
      std::size_t matches = 0;
      for (std::size_t end = k; end < path.size(); ++end) {
        if (path[end] == 'M') {
          if (++matches > max_unchanged) break;
          continue;
        }
        cur.emplace_back(si[k], si[end + 1], Tokens(hyp.begin() + static_cast<std::ptrdiff_t>(hj[k]),
                                                    hyp.begin() + static_cast<std::ptrdiff_t>(hj[end + 1])));
        cut(end + 1);
        cur.pop_back();
      }
    };
    cut(0);
  }
  return out;
}

Stats3 m2_brute(const Tokens& src, const Tokens& hyp, const EditSet& gold, std::size_t max_unchanged) {
  long long best_c = -1, best_p = 0;
  for (const auto& set : proposal_sets(src, hyp, max_unchanged)) {
    long long c = 0;
    std::set<std::tuple<std::size_t, std::size_t, Tokens>> credited;
    for (const auto& g : gold) {
      auto key = std::make_tuple(g.start, g.end, g.replacement);
      if (credited.count(key)) continue;
      for (const auto& e : set) {
        if (same_edit(e, g)) {
          credited.insert(key);
          ++c;
          break;
        }
      }
    }
    const long long p = static_cast<long long>(set.size());
    if (c > best_c || (c == best_c && p < best_p)) {
      best_c = c;
      best_p = p;
    }
  }
  return Stats3{best_c, best_p, static_cast<long long>(gold.size())};
}

std::map<std::string, std::map<std::string, double>> model1(const std::vector<SentencePair>& pairs,
                                                            std::size_t iterations) {
  const std::string null_word(kNullWord);
  std::map<std::string, std::map<std::string, double>> t;
  for (const auto& p : pairs) {
    for (const auto& f : p.tgt) {
      t[null_word][f] = 0.0;
      for (const auto& e : p.src) t[e][f] = 0.0;
    }
  }
  for (auto& [e, row] : t) {
    for (auto& [f, v] : row) v = 1.0 / static_cast<double>(row.size());
  }
  for (std::size_t it = 0; it < iterations; ++it) {
    std::map<std::string, std::map<std::string, double>> count;
    std::map<std::string, double> total;
    for (const auto& p : pairs) {
      Tokens es = p.src;
      es.insert(es.begin(), null_word);
      for (const auto& f : p.tgt) {
        double z = 0.0;
        for (const auto& e : es) z += t[e][f];
        for (const auto& e : es) {
          count[e][f] += t[e][f] / z;
          total[e] += t[e][f] / z;
        }
      }
    }
    for (auto& [e, row] : t) {
      for (auto& [f, v] : row) v = total[e] > 0 ? count[e][f] / total[e] : 0.0;
    }
  }
  return t;
}

std::vector<Derivation> enumerate_derivations(const Tokens& sentence, const Models& models, const WeightVec& weights,
                                              const DecoderConfig& config) {
  const FeatureSet& fs = config.features;
  struct Opt {
    std::size_t end;
    Tokens src, tgt;
    const PhraseEntry* entry;
    std::string left, right;
  };
  const std::size_t n = sentence.size();
  std::vector<std::vector<Opt>> at(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t len = 1; len <= models.table->max_len() && s + len <= n; ++len) {
      Tokens src(sentence.begin() + static_cast<std::ptrdiff_t>(s),
                 sentence.begin() + static_cast<std::ptrdiff_t>(s + len));
      const std::string left = s == 0 ? std::string(kBos) : sentence[s - 1];
      const std::string right = s + len == n ? std::string(kEos) : sentence[s + len];
      const auto& entries = models.table->lookup(src);
      if (entries.empty() && len == 1) at[s].push_back(Opt{s + 1, src, src, nullptr, left, right});
      for (std::size_t k = 0; k < entries.size() && k < config.table_limit; ++k) {
        at[s].push_back(Opt{s + len, src, entries[k].tgt, &entries[k], left, right});
      }
    }
  }

  std::vector<Derivation> out;
  std::vector<const Opt*> chosen;
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == n) {
      FeatureVec f;
      Tokens surface, ops;
      for (const Opt* o : chosen) {
        if (fs.tm && o->entry) {
          f[Dense::TmPhiFwd] += std::log(o->entry->phi_fwd);
          f[Dense::TmLexFwd] += std::log(o->entry->lex_fwd);
          f[Dense::TmPhiBwd] += std::log(o->entry->phi_bwd);
          f[Dense::TmLexBwd] += std::log(o->entry->lex_bwd);
        }
        const EditCounts c = edit_op_counts(o->src, o->tgt);
        if (fs.ld) f[Dense::Ld] += static_cast<double>(c.ld);
        if (fs.ops) {
          f[Dense::EditDel] += static_cast<double>(c.d);
          f[Dense::EditIns] += static_cast<double>(c.i);
          f[Dense::EditSub] += static_cast<double>(c.s);
        }
        if (fs.penalties) {
          f[Dense::WordPenalty] += static_cast<double>(o->tgt.size());
          f[Dense::PhrasePenalty] += 1.0;
        }
        if (config.sparse) {
          for (const auto& [k, v] : sparse_features(o->src, o->tgt, o->left, o->right, *config.sparse)) {
            f.sparse[k] += v;
          }
        }
        surface.insert(surface.end(), o->tgt.begin(), o->tgt.end());
        const Tokens oo = op_sequence(o->src, o->tgt, config.osm_alphabet);
        ops.insert(ops.end(), oo.begin(), oo.end());
      }
      if (fs.lm) f[Dense::Lm] = models.lm->score_seq(surface) * std::numbers::ln10;
      if (fs.class_lm) {
        f[Dense::ClassLm] = models.class_lm->score_seq(project_classes(surface, *models.classes)) * std::numbers::ln10;
      }
      if (fs.osm) f[Dense::Osm] = models.osm->score_seq(ops) * std::numbers::ln10;
      double score = 0.0;
      for (std::size_t k = 0; k < kDenseCount; ++k) score += weights.dense[k] * f.dense[k];
      for (const auto& [k, v] : f.sparse) {
        auto it = weights.sparse.find(k);
        if (it != weights.sparse.end()) score += it->second * v;
      }
      out.push_back(Derivation{surface, f, score});
      return;
    }
    for (const auto& o : at[pos]) {
      chosen.push_back(&o);
      rec(o.end);
      chosen.pop_back();
    }
  };
  rec(0);
  return out;
}

std::vector<Derivation> best_per_surface(std::vector<Derivation> all) {
  std::map<Tokens, Derivation> best;
  for (auto& d : all) {
    auto it = best.find(d.surface);
    if (it == best.end() || d.score > it->second.score) best[d.surface] = d;
  }
  std::vector<Derivation> out;
  for (auto& [s, d] : best) out.push_back(d);
  std::stable_sort(out.begin(), out.end(), [](const Derivation& a, const Derivation& b) { return a.score > b.score; });
  return out;
}

GridResult mert_grid(const Pool& pool, const WeightVec& w, const WeightVec& dir, const TuneMetric& metric,
                     double span, double step) {
  struct Line {
    double a, b;
    const StatsVec* stats;
  };
  std::vector<std::vector<Line>> lines(pool.sentences());
  for (std::size_t s = 0; s < pool.sentences(); ++s) {
    for (const auto& e : pool[s]) lines[s].push_back(Line{dot(w, e.features), dot(dir, e.features), &e.stats});
  }
  GridResult r;
  const auto points = static_cast<std::size_t>(std::llround(2 * span / step));
  StatsVec sum(metric.stats_size());
  for (std::size_t k = 0; k < points; ++k) {
    const double gamma = -span + (static_cast<double>(k) + 0.5) * step;
    std::fill(sum.begin(), sum.end(), 0.0);
    for (const auto& ls : lines) {
      if (ls.empty()) continue;
      std::size_t best = 0;
      double best_score = ls[0].a + gamma * ls[0].b;
      for (std::size_t h = 1; h < ls.size(); ++h) {
        const double sc = ls[h].a + gamma * ls[h].b;
        if (sc > best_score) {
          best_score = sc;
          best = h;
        }
      }
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*ls[best].stats)[i];
    }
    const double v = metric.corpus_score(sum);
    r.gammas.push_back(gamma);
    r.values.push_back(v);
    r.best = std::max(r.best, v);
  }
  return r;
}

}  // namespace oracle
