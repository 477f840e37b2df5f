#include "gectune/phrasetable.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gectune {

double LexTable::prob(const std::string& src, const std::string& tgt) const {
  auto row = rows_.find(src);
  if (row == rows_.end()) return 0.0;
  auto it = row->second.find(tgt);
  return it == row->second.end() ? 0.0 : it->second;
}

namespace {

struct IdCorpus {
  std::vector<std::string> src_words, tgt_words;
  std::vector<std::vector<std::uint32_t>> src, tgt;  // src sentences start with NULL (id 0) when used
};

IdCorpus to_ids(const std::vector<SentencePair>& pairs, bool use_null) {
  IdCorpus c;
  std::unordered_map<std::string, std::uint32_t> sid, tid;
  auto intern = [](auto& ids, auto& words, const std::string& w) {
    auto [it, inserted] = ids.emplace(w, static_cast<std::uint32_t>(words.size()));
    if (inserted) words.push_back(w);
    return it->second;
  };
  intern(sid, c.src_words, std::string(kNullWord));
  for (const auto& p : pairs) {
    std::vector<std::uint32_t> s, t;
    if (use_null) s.push_back(0);
    for (const auto& w : p.src) s.push_back(intern(sid, c.src_words, w));
    for (const auto& w : p.tgt) t.push_back(intern(tid, c.tgt_words, w));
    c.src.push_back(std::move(s));
    c.tgt.push_back(std::move(t));
  }
  return c;
}

inline std::uint64_t pair_key(std::uint32_t e, std::uint32_t f) { return (std::uint64_t{e} << 32) | f; }

}  // namespace

LexTable model1_train(const std::vector<SentencePair>& pairs, const Model1Options& options) {
  if (pairs.empty()) throw std::invalid_argument("model1_train: empty corpus");
  const IdCorpus c = to_ids(pairs, options.use_null);

  // Uniform over co-occurring target words.
  std::unordered_map<std::uint64_t, double> t;
  std::vector<std::size_t> row_size(c.src_words.size(), 0);
  for (std::size_t k = 0; k < c.src.size(); ++k) {
    for (auto e : c.src[k]) {
      for (auto f : c.tgt[k]) {
        if (t.emplace(pair_key(e, f), 0.0).second) ++row_size[e];
      }
    }
  }
  for (auto& [key, p] : t) p = 1.0 / static_cast<double>(row_size[key >> 32]);

  std::unordered_map<std::uint64_t, double> counts;
  std::vector<double> totals(c.src_words.size());
  for (std::size_t iter = 0; iter < options.iterations; ++iter) {
    counts.clear();
    std::fill(totals.begin(), totals.end(), 0.0);
    for (std::size_t k = 0; k < c.src.size(); ++k) {
      const auto& es = c.src[k];
      for (auto f : c.tgt[k]) {
        double denom = 0.0;
        for (auto e : es) denom += t[pair_key(e, f)];
        if (denom <= 0.0) continue;
        for (auto e : es) {
          const double frac = t[pair_key(e, f)] / denom;
          counts[pair_key(e, f)] += frac;
          totals[e] += frac;
        }
      }
    }
    for (auto& [key, p] : t) {
      const double tot = totals[key >> 32];
      auto it = counts.find(key);
      p = (tot > 0.0 && it != counts.end()) ? it->second / tot : 0.0;
    }
  }

  LexTable table;
  for (const auto& [key, p] : t) {
    if (p > 0.0) table.set(c.src_words[key >> 32], c.tgt_words[key & 0xffffffffu], p);
  }
  return table;
}

double model1_log_likelihood(const std::vector<SentencePair>& pairs, const LexTable& table, bool use_null) {
  double ll = 0.0;
  const std::string null_word(kNullWord);
  for (const auto& p : pairs) {
    const double l = static_cast<double>(p.src.size() + (use_null ? 1 : 0));
    for (const auto& f : p.tgt) {
      double sum = use_null ? table.prob(null_word, f) : 0.0;
      for (const auto& e : p.src) sum += table.prob(e, f);
      ll += std::log(sum / l);
    }
  }
  return ll;
}

AlignmentSet viterbi_align(const SentencePair& pair, const LexTable& fwd) {
  AlignmentSet out;
  const std::string null_word(kNullWord);
  for (std::size_t j = 0; j < pair.tgt.size(); ++j) {
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < pair.src.size(); ++i) {
      const double p = fwd.prob(pair.src[i], pair.tgt[j]);
      if (p > best) {
        best = p;
        best_i = i;
      }
    }
    if (pair.src.empty()) continue;
    if (fwd.prob(null_word, pair.tgt[j]) > best) continue;
    out.emplace(best_i, j);
  }
  return out;
}

AlignmentSet grow_diag_final(std::size_t src_len, std::size_t tgt_len, const AlignmentSet& s2t,
                             const AlignmentSet& t2s) {
  AlignmentSet uni = s2t;
  uni.insert(t2s.begin(), t2s.end());
  AlignmentSet a;
  std::set_intersection(s2t.begin(), s2t.end(), t2s.begin(), t2s.end(), std::inserter(a, a.begin()));

  std::vector<bool> src_aligned(src_len, false), tgt_aligned(tgt_len, false);
  for (auto [i, j] : a) src_aligned[i] = tgt_aligned[j] = true;

  static constexpr int kNeighbors[8][2] = {{-1, 0}, {0, -1}, {1, 0}, {0, 1}, {-1, -1}, {-1, 1}, {1, -1}, {1, 1}};
  bool added = true;
  while (added) {
    added = false;
    for (std::size_t i = 0; i < src_len; ++i) {
      for (std::size_t j = 0; j < tgt_len; ++j) {
        if (!a.count({i, j})) continue;
        for (const auto& d : kNeighbors) {
          const auto ni = static_cast<std::ptrdiff_t>(i) + d[0];
          const auto nj = static_cast<std::ptrdiff_t>(j) + d[1];
          if (ni < 0 || nj < 0 || ni >= static_cast<std::ptrdiff_t>(src_len) ||
              nj >= static_cast<std::ptrdiff_t>(tgt_len)) {
            continue;
          }
          const auto ui = static_cast<std::size_t>(ni), uj = static_cast<std::size_t>(nj);
          if ((!src_aligned[ui] || !tgt_aligned[uj]) && uni.count({ui, uj}) && !a.count({ui, uj})) {
            a.emplace(ui, uj);
            src_aligned[ui] = tgt_aligned[uj] = true;
            added = true;
          }
        }
      }
    }
  }
  for (const AlignmentSet* dir : {&s2t, &t2s}) {
    for (auto [i, j] : *dir) {
      if ((!src_aligned[i] || !tgt_aligned[j]) && !a.count({i, j})) {
        a.emplace(i, j);
        src_aligned[i] = tgt_aligned[j] = true;
      }
    }
  }
  return a;
}

AlignmentSet sym_align(const SentencePair& pair, const LexTable& fwd, const LexTable& rev) {
  if (pair.src.empty() || pair.tgt.empty()) return {};
  const AlignmentSet s2t = viterbi_align(pair, fwd);
  AlignmentSet t2s;
  for (auto [j, i] : viterbi_align(SentencePair{pair.tgt, pair.src}, rev)) t2s.emplace(i, j);
  return grow_diag_final(pair.src.size(), pair.tgt.size(), s2t, t2s);
}

std::string format_alignment(const AlignmentSet& a) {
  std::string out;
  for (auto [i, j] : a) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i) + '-' + std::to_string(j);
  }
  return out;
}

AlignmentSet parse_alignment(std::string_view text, std::size_t line) {
  AlignmentSet a;
  for (const auto& point : split_ws(text)) {
    auto dash = point.find('-');
    if (dash == std::string::npos) throw ParseError(line, "alignment point must be 'i-j'");
    a.emplace(static_cast<std::size_t>(parse_int(std::string_view(point).substr(0, dash), line)),
              static_cast<std::size_t>(parse_int(std::string_view(point).substr(dash + 1), line)));
  }
  return a;
}

void PhraseCounts::add(const PhrasePair& pair, std::size_t count) {
  auto& item = counts_[{pair.src, pair.tgt}];
  item.count += count;
  item.alignments[pair.alignment] += count;
}

std::size_t PhraseCounts::total() const {
  std::size_t n = 0;
  for (const auto& [key, item] : counts_) n += item.count;
  return n;
}

std::size_t PhraseCounts::count(const Tokens& src, const Tokens& tgt) const {
  auto it = counts_.find({src, tgt});
  return it == counts_.end() ? 0 : it->second.count;
}

std::vector<PhrasePair> extract_phrases(const SentencePair& pair, const AlignmentSet& alignment, std::size_t max_len) {
  std::vector<PhrasePair> out;
  const std::size_t n = pair.src.size(), m = pair.tgt.size();
  std::vector<bool> tgt_aligned(m, false);
  for (auto [i, j] : alignment) tgt_aligned[j] = true;

  for (std::size_t s_start = 0; s_start < n; ++s_start) {
    for (std::size_t s_end = s_start; s_end < n && s_end - s_start < max_len; ++s_end) {
      std::size_t t_min = m, t_max = 0;
      for (auto [i, j] : alignment) {
        if (i >= s_start && i <= s_end) {
          t_min = std::min(t_min, j);
          t_max = std::max(t_max, j);
        }
      }
      if (t_min == m) continue;  // no alignment point inside
      if (t_max - t_min >= max_len) continue;
      bool consistent = true;
      for (auto [i, j] : alignment) {
        if (j >= t_min && j <= t_max && (i < s_start || i > s_end)) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;

      // Extend over unaligned target words on both sides.
      for (std::ptrdiff_t ts = static_cast<std::ptrdiff_t>(t_min); ts >= 0; --ts) {
        const auto t_start = static_cast<std::size_t>(ts);
        if (t_start < t_min && tgt_aligned[t_start]) break;
        if (t_max - t_start >= max_len) break;
        for (std::size_t t_end = t_max; t_end < m; ++t_end) {
          if (t_end > t_max && tgt_aligned[t_end]) break;
          if (t_end - t_start >= max_len) break;
          PhrasePair pp;
          pp.src.assign(pair.src.begin() + static_cast<std::ptrdiff_t>(s_start),
                        pair.src.begin() + static_cast<std::ptrdiff_t>(s_end + 1));
          pp.tgt.assign(pair.tgt.begin() + static_cast<std::ptrdiff_t>(t_start),
                        pair.tgt.begin() + static_cast<std::ptrdiff_t>(t_end + 1));
          for (auto [i, j] : alignment) {
            if (i >= s_start && i <= s_end && j >= t_start && j <= t_end) pp.alignment.emplace(i - s_start, j - t_start);
          }
          out.push_back(std::move(pp));
        }
      }
    }
  }
  return out;
}

void extract_phrases(const SentencePair& pair, const AlignmentSet& alignment, std::size_t max_len,
                     PhraseCounts& counts) {
  for (const auto& pp : extract_phrases(pair, alignment, max_len)) counts.add(pp);
}

double lexical_weight(const Tokens& src, const Tokens& tgt, const AlignmentSet& alignment, const LexTable& table) {
  const std::string null_word(kNullWord);
  double weight = 1.0;
  for (std::size_t j = 0; j < tgt.size(); ++j) {
    double sum = 0.0;
    std::size_t links = 0;
    for (auto [i, jj] : alignment) {
      if (jj != j) continue;
      sum += table.prob(src[i], tgt[j]);
      ++links;
    }
    weight *= links ? sum / static_cast<double>(links) : table.prob(null_word, tgt[j]);
  }
  return weight;
}

const std::vector<PhraseEntry>& PhraseTable::lookup(std::span<const std::string> src) const {
  static const std::vector<PhraseEntry> kEmpty;
  auto it = table_.find(join(src));
  return it == table_.end() ? kEmpty : it->second;
}

bool PhraseTable::contains(std::span<const std::string> src) const { return table_.count(join(src)) > 0; }

void PhraseTable::add(PhraseEntry entry) {
  auto key = join(entry.src);
  table_[key].push_back(std::move(entry));
}

void PhraseTable::sort_entries() {
  for (auto& [key, entries] : table_) {
    std::stable_sort(entries.begin(), entries.end(), [](const PhraseEntry& a, const PhraseEntry& b) {
      if (a.phi_fwd != b.phi_fwd) return a.phi_fwd > b.phi_fwd;
      return a.tgt < b.tgt;
    });
  }
}

std::size_t PhraseTable::size() const {
  std::size_t n = 0;
  for (const auto& [key, entries] : table_) n += entries.size();
  return n;
}

std::vector<const std::vector<PhraseEntry>*> PhraseTable::all() const {
  std::vector<const std::vector<PhraseEntry>*> out;
  for (const auto& [key, entries] : table_) out.push_back(&entries);
  return out;
}

std::string PhraseTable::save() const {
  std::ostringstream out;
  for (const auto& [key, entries] : table_) {
    for (const auto& e : entries) {
      out << join(e.src) << " ||| " << join(e.tgt) << " ||| " << format_double(e.phi_fwd) << ' '
          << format_double(e.lex_fwd) << ' ' << format_double(e.phi_bwd) << ' ' << format_double(e.lex_bwd)
          << " ||| " << format_alignment(e.alignment) << " ||| " << e.count_tgt << ' ' << e.count_src << ' '
          << e.count_pair << '\n';
    }
  }
  return out.str();
}

PhraseTable PhraseTable::load(std::string_view text, std::size_t max_len) {
  PhraseTable table(max_len);
  std::size_t line_no = 0;
  for (const auto& raw : split_on(text, "\n")) {
    ++line_no;
    if (trim(raw).empty()) continue;
    auto fields = split_on(raw, "|||");
    if (fields.size() < 3) throw ParseError(line_no, "phrase-table line needs 'src ||| tgt ||| scores'");
    PhraseEntry e;
    e.src = split_ws(fields[0]);
    e.tgt = split_ws(fields[1]);
    if (e.src.empty()) throw ParseError(line_no, "empty source phrase");
    Tokens scores = split_ws(fields[2]);
    if (scores.size() != 4) throw ParseError(line_no, "expected 4 scores");
    e.phi_fwd = parse_double(scores[0], line_no);
    e.lex_fwd = parse_double(scores[1], line_no);
    e.phi_bwd = parse_double(scores[2], line_no);
    e.lex_bwd = parse_double(scores[3], line_no);
    for (double p : {e.phi_fwd, e.lex_fwd, e.phi_bwd, e.lex_bwd}) {
      if (!(p > 0.0 && p <= 1.0)) throw ParseError(line_no, "probability outside (0,1]");
    }
    if (fields.size() > 3) e.alignment = parse_alignment(fields[3], line_no);
    if (fields.size() > 4) {
      Tokens c = split_ws(fields[4]);
      if (!c.empty() && c.size() != 3) throw ParseError(line_no, "expected 3 counts");
      if (c.size() == 3) {
        e.count_tgt = static_cast<std::size_t>(parse_int(c[0], line_no));
        e.count_src = static_cast<std::size_t>(parse_int(c[1], line_no));
        e.count_pair = static_cast<std::size_t>(parse_int(c[2], line_no));
      }
    }
    table.add(std::move(e));
  }
  table.sort_entries();
  return table;
}

PhraseTable PhraseTable::load_file(const std::string& path, std::size_t max_len) {
  return load(read_file(path), max_len);
}

PhraseTable build_table(const PhraseCounts& counts, const LexTable* fwd, const LexTable* rev, std::size_t max_len) {
  std::map<Tokens, std::size_t> src_totals, tgt_totals;
  for (const auto& [key, item] : counts.items()) {
    src_totals[key.first] += item.count;
    tgt_totals[key.second] += item.count;
  }
  PhraseTable table(max_len);
  for (const auto& [key, item] : counts.items()) {
    PhraseEntry e;
    e.src = key.first;
    e.tgt = key.second;
    e.count_pair = item.count;
    e.count_src = src_totals[key.first];
    e.count_tgt = tgt_totals[key.second];
    e.phi_fwd = static_cast<double>(item.count) / static_cast<double>(e.count_src);
    e.phi_bwd = static_cast<double>(item.count) / static_cast<double>(e.count_tgt);
    // Most frequent alignment, ties to the smallest.
    std::size_t best = 0;
    for (const auto& [a, c] : item.alignments) {
      if (c > best) {
        best = c;
        e.alignment = a;
      }
    }
    if (fwd && rev) {
      e.lex_fwd = lexical_weight(e.src, e.tgt, e.alignment, *fwd);
      AlignmentSet flipped;
      for (auto [i, j] : e.alignment) flipped.emplace(j, i);
      e.lex_bwd = lexical_weight(e.tgt, e.src, flipped, *rev);
      // Floor keeps the stored value a valid probability for the text format.
      e.lex_fwd = std::max(e.lex_fwd, 1e-300);
      e.lex_bwd = std::max(e.lex_bwd, 1e-300);
    }
    table.add(std::move(e));
  }
  table.sort_entries();
  return table;
}

PhraseTable train_translation_model(const std::vector<SentencePair>& pairs, const TmTrainOptions& options) {
  const LexTable fwd = model1_train(pairs, options.model1);
  std::vector<SentencePair> flipped;
  flipped.reserve(pairs.size());
  for (const auto& p : pairs) flipped.push_back(SentencePair{p.tgt, p.src});
  const LexTable rev = model1_train(flipped, options.model1);

  PhraseCounts counts;
  for (const auto& p : pairs) extract_phrases(p, sym_align(p, fwd, rev), options.max_len, counts);
  if (options.lexical_weights) return build_table(counts, &fwd, &rev, options.max_len);
  return build_table(counts, nullptr, nullptr, options.max_len);
}

}  // namespace gectune
