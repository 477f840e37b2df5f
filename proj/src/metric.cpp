#include "gectune/metric.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "gectune/editops.hpp"

namespace gectune {

double f_beta(double precision, double recall, double beta) {
  const double b2 = beta * beta;
  const double denom = b2 * precision + recall;
  if (denom <= 0.0) return 0.0;
  return (1.0 + b2) * precision * recall / denom;
}

Prf prf(double correct, double proposed, double gold, double beta) {
  Prf out;
  out.precision = proposed > 0 ? correct / proposed : 1.0;
  out.recall = gold > 0 ? correct / gold : 1.0;
  out.f = f_beta(out.precision, out.recall, beta);
  return out;
}

Prf prf(const Stats3& s, double beta) {
  return prf(static_cast<double>(s.correct), static_cast<double>(s.proposed), static_cast<double>(s.gold), beta);
}

EditSet EditLattice::candidate_edits() const {
  std::set<std::tuple<std::size_t, std::size_t, Tokens>> seen;
  EditSet out;
  for (const auto& e : edges) {
    if (e.noop) continue;
    if (seen.emplace(e.edit.start, e.edit.end, e.edit.replacement).second) out.push_back(e.edit);
  }
  std::sort(out.begin(), out.end(), [](const Edit& a, const Edit& b) {
    return std::tie(a.start, a.end, a.replacement) < std::tie(b.start, b.end, b.replacement);
  });
  return out;
}

EditLattice candidate_lattice(const Tokens& src, const Tokens& hyp, const MetricConfig& config) {
  const std::size_t n = src.size(), m = hyp.size(), w = m + 1;
  const auto fwd = lev_table(src, hyp);
  const Tokens rsrc(src.rbegin(), src.rend()), rhyp(hyp.rbegin(), hyp.rend());
  const auto bwd_rev = lev_table(rsrc, rhyp);
  auto bwd = [&](std::size_t i, std::size_t j) { return bwd_rev[(n - i) * w + (m - j)]; };
  const std::size_t total = fwd[n * w + m];

  EditLattice lat;
  std::vector<std::ptrdiff_t> id((n + 1) * w, -1);
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      if (fwd[i * w + j] + bwd(i, j) == total) {
        id[i * w + j] = static_cast<std::ptrdiff_t>(lat.nodes.size());
        lat.nodes.emplace_back(i, j);
      }
    }
  }
  lat.source = static_cast<std::size_t>(id[0]);
  lat.sink = static_cast<std::size_t>(id[n * w + m]);

  // Base edges between adjacent on-path cells that keep the path optimal.
  std::vector<std::vector<std::size_t>> out_edges(lat.nodes.size());
  auto add_edge = [&](std::size_t from, std::size_t to, Edit edit, bool noop, bool merged) {
    out_edges[from].push_back(lat.edges.size());
    lat.edges.push_back(LatticeEdge{from, to, std::move(edit), noop, merged});
  };
  for (std::size_t u = 0; u < lat.nodes.size(); ++u) {
    auto [i, j] = lat.nodes[u];
    const std::size_t here = fwd[i * w + j];
    if (i < n && j < m && id[(i + 1) * w + j + 1] >= 0) {
      const bool same = src[i] == hyp[j];
      if (fwd[(i + 1) * w + j + 1] == here + (same ? 0 : 1)) {
        add_edge(u, static_cast<std::size_t>(id[(i + 1) * w + j + 1]), Edit{i, i + 1, {hyp[j]}, {}}, same, false);
      }
    }
    if (i < n && id[(i + 1) * w + j] >= 0 && fwd[(i + 1) * w + j] == here + 1) {
      add_edge(u, static_cast<std::size_t>(id[(i + 1) * w + j]), Edit{i, i + 1, {}, {}}, false, false);
    }
    if (j < m && id[i * w + j + 1] >= 0 && fwd[i * w + j + 1] == here + 1) {
      add_edge(u, static_cast<std::size_t>(id[i * w + j + 1]), Edit{i, i, {hyp[j]}, {}}, false, false);
    }
  }

  // Merged edges: change, (any walk with <= max_unchanged matches), change.
  const std::size_t base_count = lat.edges.size();
  const std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> min_matches(lat.nodes.size());
  std::set<std::pair<std::size_t, std::size_t>> merged_pairs;
  for (std::size_t e1 = 0; e1 < base_count; ++e1) {
    if (lat.edges[e1].noop) continue;
    const std::size_t u = lat.edges[e1].from, start = lat.edges[e1].to;
    std::fill(min_matches.begin(), min_matches.end(), inf);
    min_matches[start] = 0;
    // Node ids are in topological order, so a forward sweep suffices.
    for (std::size_t x = start; x < lat.nodes.size(); ++x) {
      if (min_matches[x] == inf) continue;
      for (std::size_t e2 : out_edges[x]) {
        if (e2 >= base_count) continue;
        const auto& edge = lat.edges[e2];
        if (!edge.noop) {
          if (merged_pairs.emplace(u, edge.to).second) {
            auto [ui, uj] = lat.nodes[u];
            auto [vi, vj] = lat.nodes[edge.to];
            Edit merged{ui, vi, Tokens(hyp.begin() + static_cast<std::ptrdiff_t>(uj),
                                       hyp.begin() + static_cast<std::ptrdiff_t>(vj)), {}};
            add_edge(u, edge.to, std::move(merged), false, true);
          }
        }
        const std::size_t cost = min_matches[x] + (edge.noop ? 1 : 0);
        if (cost <= config.max_unchanged && cost < min_matches[edge.to]) min_matches[edge.to] = cost;
      }
    }
  }
  return lat;
}

namespace {

struct PathValue {
  long long matched = -1;  // -1: unreachable
  long long proposed = 0;

  bool better_than(const PathValue& o) const {
    if (matched != o.matched) return matched > o.matched;
    return proposed < o.proposed;
  }
};

}  // namespace

Stats3 max_match(const EditLattice& lat, const EditSet& gold) {
  // Gold index per edit identity; insertion golds also get a bit among the
  // insertions at their position, since repeated insertions at one point
  // could otherwise be credited twice.
  std::map<std::tuple<std::size_t, std::size_t, Tokens>, std::size_t> gold_index;
  std::map<std::size_t, std::size_t> insertions_at;
  std::vector<int> insertion_bit(gold.size(), -1);
  for (std::size_t g = 0; g < gold.size(); ++g) {
    auto key = std::make_tuple(gold[g].start, gold[g].end, gold[g].replacement);
    if (!gold_index.emplace(key, g).second) continue;
    if (gold[g].is_insertion()) insertion_bit[g] = static_cast<int>(insertions_at[gold[g].start]++);
  }

  std::vector<std::vector<std::size_t>> out_edges(lat.nodes.size());
  std::vector<long long> edge_gold(lat.edges.size(), -1);
  for (std::size_t e = 0; e < lat.edges.size(); ++e) {
    const auto& edge = lat.edges[e];
    out_edges[edge.from].push_back(e);
    if (edge.noop) continue;
    auto it = gold_index.find(std::make_tuple(edge.edit.start, edge.edit.end, edge.edit.replacement));
    if (it != gold_index.end()) edge_gold[e] = static_cast<long long>(it->second);
  }

  std::vector<std::map<std::uint64_t, PathValue>> best(lat.nodes.size());
  best[lat.source][0] = PathValue{0, 0};
  for (std::size_t u = 0; u < lat.nodes.size(); ++u) {
    for (const auto& [mask, value] : best[u]) {
      for (std::size_t e : out_edges[u]) {
        const auto& edge = lat.edges[e];
        PathValue next = value;
        std::uint64_t next_mask = lat.nodes[edge.to].first == lat.nodes[u].first ? mask : 0;
        if (!edge.noop) ++next.proposed;
        if (edge_gold[e] >= 0) {
          const int bit = insertion_bit[static_cast<std::size_t>(edge_gold[e])];
          if (bit < 0) {
            ++next.matched;
          } else if (bit >= 64 || !(mask & (std::uint64_t{1} << bit))) {
            ++next.matched;
            if (bit < 64) next_mask |= std::uint64_t{1} << bit;
          }
        }
        auto& slot = best[edge.to][next_mask];
        if (slot.matched < 0 || next.better_than(slot)) slot = next;
      }
    }
  }
  PathValue final_value;
  for (const auto& [mask, value] : best[lat.sink]) {
    if (final_value.matched < 0 || value.better_than(final_value)) final_value = value;
  }
  return Stats3{std::max<long long>(final_value.matched, 0), final_value.proposed,
                static_cast<long long>(gold.size())};
}

Stats3 max_match_sentence(const Tokens& src, const Tokens& hyp, const EditSet& gold, const MetricConfig& config) {
  return max_match(candidate_lattice(src, hyp, config), gold);
}

std::vector<int> annotator_ids(const AnnotatedSentence& sentence) {
  std::vector<int> ids;
  for (const auto& [id, edits] : sentence.gold) ids.push_back(id);
  if (ids.empty()) ids.push_back(0);
  return ids;
}

std::vector<Stats3> annotator_stats(const AnnotatedSentence& sentence, const Tokens& hyp, const MetricConfig& config) {
  const auto lattice = candidate_lattice(sentence.source, hyp, config);
  std::vector<Stats3> out;
  if (sentence.gold.empty()) {
    out.push_back(max_match(lattice, {}));
    return out;
  }
  for (const auto& [id, edits] : sentence.gold) out.push_back(max_match(lattice, edits));
  return out;
}

std::pair<std::size_t, Stats3> choose_annotator(std::span<const Stats3> per_annotator, const Stats3& running,
                                                const MetricConfig& config) {
  if (per_annotator.empty()) throw std::invalid_argument("choose_annotator: no annotators");
  std::size_t best = 0;
  double best_f = -1.0;
  for (std::size_t a = 0; a < per_annotator.size(); ++a) {
    const Stats3 candidate =
        config.mode == AnnotatorMode::Cumulative ? running + per_annotator[a] : per_annotator[a];
    const double f = prf(candidate, config.beta).f;
    if (f > best_f) {
      best_f = f;
      best = a;
    }
  }
  return {best, per_annotator[best]};
}

M2Report corpus_m2(const Corpus& corpus, const std::vector<Tokens>& hyps, const MetricConfig& config) {
  if (hyps.size() != corpus.size()) {
    throw std::invalid_argument("corpus_m2: " + std::to_string(hyps.size()) + " hypotheses for " +
                                std::to_string(corpus.size()) + " sentences");
  }
  M2Report report;
  report.beta = config.beta;
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    const auto per = annotator_stats(corpus.sentences[s], hyps[s], config);
    auto [index, stats] = choose_annotator(per, report.total, config);
    report.total += stats;
    report.sentences.push_back(SentenceScore{stats, annotator_ids(corpus.sentences[s])[index]});
  }
  report.score = prf(report.total, config.beta);
  return report;
}

std::string format_report(const M2Report& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "Precision : %.4f\nRecall : %.4f\nF_%s : %.4f\n", report.score.precision,
                report.score.recall, format_double(report.beta).c_str(), report.score.f);
  return buf;
}

std::string format_sentence_tsv(const M2Report& report) {
  std::ostringstream out;
  for (std::size_t i = 0; i < report.sentences.size(); ++i) {
    const auto& s = report.sentences[i];
    out << i << '\t' << s.stats.correct << '\t' << s.stats.proposed << '\t' << s.stats.gold << '\t' << s.annotator
        << '\n';
  }
  return out.str();
}

BleuStats& BleuStats::operator+=(const BleuStats& o) {
  if (matches.size() < o.matches.size()) {
    matches.resize(o.matches.size(), 0.0);
    totals.resize(o.totals.size(), 0.0);
  }
  for (std::size_t n = 0; n < o.matches.size(); ++n) {
    matches[n] += o.matches[n];
    totals[n] += o.totals[n];
  }
  hyp_len += o.hyp_len;
  ref_len += o.ref_len;
  return *this;
}

BleuStats bleu_stats(const Tokens& hyp, const Tokens& ref, std::size_t order) {
  BleuStats st;
  st.matches.assign(order, 0.0);
  st.totals.assign(order, 0.0);
  st.hyp_len = static_cast<double>(hyp.size());
  st.ref_len = static_cast<double>(ref.size());
  for (std::size_t n = 1; n <= order; ++n) {
    std::unordered_map<std::string, int> ref_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) {
      ++ref_counts[join(std::span(ref).subspan(i, n), "\x1f")];
    }
    std::unordered_map<std::string, int> hyp_counts;
    for (std::size_t i = 0; i + n <= hyp.size(); ++i) {
      ++hyp_counts[join(std::span(hyp).subspan(i, n), "\x1f")];
    }
    double matched = 0, total = 0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    st.matches[n - 1] = matched;
    st.totals[n - 1] = total;
  }
  return st;
}

double bleu_score(const BleuStats& st, double epsilon) {
  if (st.hyp_len <= 0 || st.matches.empty()) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < st.matches.size(); ++n) {
    double m = st.matches[n], t = st.totals[n];
    if (n > 0 && epsilon > 0) {
      m += epsilon;
      t += epsilon;
    }
    if (m <= 0 || t <= 0) return 0.0;
    log_sum += std::log(m / t);
  }
  const double bp = st.hyp_len < st.ref_len ? std::exp(1.0 - st.ref_len / st.hyp_len) : 1.0;
  return bp * std::exp(log_sum / static_cast<double>(st.matches.size()));
}

BleuReport bleu(const std::vector<Tokens>& hyps, const std::vector<Tokens>& refs, std::size_t order, double epsilon) {
  if (hyps.empty()) throw std::invalid_argument("bleu: empty corpus");
  if (hyps.size() != refs.size()) throw std::invalid_argument("bleu: hypothesis/reference count mismatch");
  BleuReport report;
  BleuStats total;
  total.matches.assign(order, 0.0);
  total.totals.assign(order, 0.0);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    report.sentences.push_back(bleu_stats(hyps[i], refs[i], order));
    total += report.sentences.back();
  }
  report.score = bleu_score(total, epsilon);
  return report;
}

}  // namespace gectune
