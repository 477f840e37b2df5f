#include "gectune/corpus.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace gectune {

namespace {

constexpr std::string_view kFieldSep = "|||";

void sort_edits(EditSet& edits) {
  std::stable_sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.end < b.end;
  });
}

}  // namespace

std::size_t Corpus::token_count() const {
  std::size_t n = 0;
  for (const auto& s : sentences) n += s.source.size();
  return n;
}

void validate(const AnnotatedSentence& sentence) {
  const std::size_t len = sentence.source.size();
  for (const auto& [id, edits] : sentence.gold) {
    for (std::size_t i = 0; i < edits.size(); ++i) {
      const Edit& e = edits[i];
      if (e.start > e.end || e.end > len) {
        throw ValidationError("annotator " + std::to_string(id) + ": edit span " + std::to_string(e.start) +
                              ".." + std::to_string(e.end) + " outside sentence of length " +
                              std::to_string(len));
      }
      if (i > 0) {
        const Edit& p = edits[i - 1];
        if (p.start > e.start || (p.start == e.start && p.end > e.end)) {
          throw ValidationError("annotator " + std::to_string(id) + ": edits not sorted");
        }
        if (e.start < p.end) {
          throw ValidationError("annotator " + std::to_string(id) + ": overlapping edits at " +
                                std::to_string(e.start));
        }
      }
    }
  }
}

Corpus parse_m2(std::string_view text) {
  Corpus corpus;
  AnnotatedSentence* current = nullptr;
  std::size_t line_no = 0;
  std::size_t pos = 0;

  auto finish = [&]() {
    if (!current) return;
    for (auto& [id, edits] : current->gold) sort_edits(edits);
    validate(*current);
  };

  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (trim(line).empty()) continue;

    if (line[0] == 'S' && (line.size() == 1 || line[1] == ' ')) {
      finish();
      corpus.sentences.emplace_back();
      current = &corpus.sentences.back();
      current->source = split_ws(line.substr(1));
      continue;
    }
    if (line[0] != 'A' || line.size() < 2 || line[1] != ' ') {
      throw ParseError(line_no, "expected an 'S' or 'A' line");
    }
    if (!current) throw ParseError(line_no, "'A' line before any 'S' line");

    auto fields = split_on(line.substr(2), kFieldSep);
    if (fields.size() < 3) throw ParseError(line_no, "annotation needs at least 3 '|||' fields");
    Tokens span = split_ws(fields[0]);
    if (span.size() != 2) throw ParseError(line_no, "annotation span must be '<start> <end>'");
    long long start = parse_int(span[0], line_no);
    long long end = parse_int(span[1], line_no);
    int annotator = 0;
    if (fields.size() >= 6) annotator = static_cast<int>(parse_int(fields[5], line_no));

    if (start == -1 && end == -1) {
      current->gold[annotator];  // noop: annotator saw no error
      continue;
    }
    if (start < 0 || end < 0) throw ParseError(line_no, "negative edit span");
    if (start > end || static_cast<std::size_t>(end) > current->source.size()) {
      throw ValidationError("line " + std::to_string(line_no) + ": edit span " + std::to_string(start) + ".." +
                            std::to_string(end) + " outside sentence of length " +
                            std::to_string(current->source.size()));
    }
    Edit e;
    e.start = static_cast<std::size_t>(start);
    e.end = static_cast<std::size_t>(end);
    e.etype = std::string(trim(fields[1]));
    e.replacement = split_ws(fields[2]);
    if (e.replacement.size() == 1 && e.replacement[0] == "-NONE-") e.replacement.clear();
    current->gold[annotator].push_back(std::move(e));
  }
  finish();
  return corpus;
}

std::string write_m2(const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& s : corpus.sentences) {
    out << 'S';
    for (const auto& t : s.source) out << ' ' << t;
    out << '\n';
    for (const auto& [id, edits] : s.gold) {
      if (edits.empty()) {
        out << "A -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||" << id << '\n';
        continue;
      }
      for (const auto& e : edits) {
        out << "A " << e.start << ' ' << e.end << kFieldSep << e.etype << kFieldSep << join(e.replacement)
            << kFieldSep << "REQUIRED" << kFieldSep << "-NONE-" << kFieldSep << id << '\n';
      }
    }
    out << '\n';
  }
  return out.str();
}

Corpus load_m2(const std::string& path) { return parse_m2(read_file(path)); }

Tokens apply_edits(const Tokens& source, const EditSet& edits) {
  Tokens out;
  std::size_t pos = 0;
  for (const auto& e : edits) {
    if (e.start < pos || e.end > source.size() || e.start > e.end) {
      throw ValidationError("apply_edits: edits must be sorted, non-overlapping and inside the sentence");
    }
    out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(pos),
               source.begin() + static_cast<std::ptrdiff_t>(e.start));
    out.insert(out.end(), e.replacement.begin(), e.replacement.end());
    pos = e.end;
  }
  out.insert(out.end(), source.begin() + static_cast<std::ptrdiff_t>(pos), source.end());
  return out;
}

Tokens corrected(const AnnotatedSentence& sentence, int annotator) {
  auto it = sentence.gold.find(annotator);
  if (it == sentence.gold.end()) return sentence.source;
  return apply_edits(sentence.source, it->second);
}

std::size_t covered_tokens(const AnnotatedSentence& sentence, const AnnotatorPolicy& policy) {
  std::vector<bool> covered(sentence.source.size(), false);
  auto mark = [&](const EditSet& edits) {
    for (const auto& e : edits) {
      for (std::size_t i = e.start; i < e.end && i < covered.size(); ++i) covered[i] = true;
    }
  };
  if (policy.kind == AnnotatorPolicy::Kind::Union) {
    for (const auto& [id, edits] : sentence.gold) mark(edits);
  } else if (auto it = sentence.gold.find(policy.annotator); it != sentence.gold.end()) {
    mark(it->second);
  }
  return static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
}

double error_rate(const Corpus& corpus, const AnnotatorPolicy& policy) {
  std::size_t total = corpus.token_count();
  if (total == 0) throw ValidationError("error rate undefined for a corpus without tokens");
  std::size_t covered = 0;
  for (const auto& s : corpus.sentences) covered += covered_tokens(s, policy);
  return static_cast<double>(covered) / static_cast<double>(total);
}

AdaptResult adapt_error_rate(const Corpus& corpus, double target, const AnnotatorPolicy& policy) {
  const std::size_t n = corpus.size();
  std::vector<long long> tokens(n), covered(n);
  long long total = 0, errors = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tokens[i] = static_cast<long long>(corpus.sentences[i].source.size());
    covered[i] = static_cast<long long>(covered_tokens(corpus.sentences[i], policy));
    total += tokens[i];
    errors += covered[i];
  }
  if (total == 0) throw ValidationError("error rate undefined for a corpus without tokens");

  std::vector<bool> alive(n, true);
  auto reached = [&]() { return static_cast<double>(errors) >= target * static_cast<double>(total); };

  while (!reached()) {
    // Candidate i leaves rate (E - c_i) / (T - t_i); compare fractions exactly.
    std::ptrdiff_t best = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i] || tokens[i] == 0 || tokens[i] >= total) continue;
      if (best < 0) {
        best = static_cast<std::ptrdiff_t>(i);
        continue;
      }
      auto b = static_cast<std::size_t>(best);
      __int128 lhs = static_cast<__int128>(errors - covered[i]) * (total - tokens[b]);
      __int128 rhs = static_cast<__int128>(errors - covered[b]) * (total - tokens[i]);
      if (lhs > rhs || (lhs == rhs && tokens[i] > tokens[b])) best = static_cast<std::ptrdiff_t>(i);
    }
    if (best < 0) break;
    auto b = static_cast<std::size_t>(best);
    // Only removals that strictly raise the rate: c_b / t_b < E / T.
    if (static_cast<__int128>(covered[b]) * total >= static_cast<__int128>(errors) * tokens[b]) break;
    alive[b] = false;
    total -= tokens[b];
    errors -= covered[b];
  }

  AdaptResult result;
  for (std::size_t i = 0; i < n; ++i) {
    if (alive[i]) result.kept.push_back(i);
  }
  result.corpus = subset(corpus, result.kept);
  result.rate = static_cast<double>(errors) / static_cast<double>(total);
  result.reached = reached();
  return result;
}

std::vector<std::vector<std::size_t>> fold_indices(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("make_folds: need k >= 2");
  if (k > n) throw std::invalid_argument("make_folds: more folds than sentences");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order, rng);
  std::vector<std::vector<std::size_t>> folds(k);
  for (std::size_t p = 0; p < n; ++p) folds[p % k].push_back(order[p]);
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

std::vector<Corpus> make_folds(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  std::vector<Corpus> out;
  for (const auto& idx : fold_indices(corpus.size(), k, seed)) out.push_back(subset(corpus, idx));
  return out;
}

Corpus subset(const Corpus& corpus, const std::vector<std::size_t>& indices) {
  Corpus out;
  out.sentences.reserve(indices.size());
  for (auto i : indices) out.sentences.push_back(corpus.sentences.at(i));
  return out;
}

}  // namespace gectune
