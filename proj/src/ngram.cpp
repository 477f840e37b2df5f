#include "gectune/ngram.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace gectune {

std::size_t NGramModel::KeyHash::operator()(std::span<const WordId> key) const {
  std::uint64_t h = 1469598103934665603ULL;
  for (WordId w : key) {
    h ^= w + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h *= 1099511628211ULL;
  }
  return static_cast<std::size_t>(h);
}

WordId NGramModel::intern(std::string_view word) {
  auto it = ids_.find(std::string(word));
  if (it != ids_.end()) return it->second;
  const auto id = static_cast<WordId>(words_.size());
  words_.emplace_back(word);
  ids_.emplace(words_.back(), id);
  return id;
}

void NGramModel::finalize_specials() {
  bos_ = intern(kBos);
  eos_ = intern(kEos);
  unk_ = intern(kUnk);
}

WordId NGramModel::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  return it == ids_.end() ? unk_ : it->second;
}

bool NGramModel::known(std::string_view word) const { return ids_.count(std::string(word)) > 0; }

const NGramEntry* NGramModel::find(std::span<const WordId> ngram) const {
  if (ngram.empty() || ngram.size() > tables_.size()) return nullptr;
  const auto& table = tables_[ngram.size() - 1];
  auto it = table.find(ngram);
  return it == table.end() ? nullptr : &it->second;
}

double NGramModel::score_word(std::span<const WordId> context, WordId w) const {
  const std::size_t max_ctx = order() > 0 ? order() - 1 : 0;
  if (context.size() > max_ctx) context = context.subspan(context.size() - max_ctx);
  std::vector<WordId> gram(context.begin(), context.end());
  gram.push_back(w);
  double acc = 0.0;
  for (std::size_t len = context.size();; --len) {
    std::span<const WordId> g(gram.data() + (context.size() - len), len + 1);
    if (const NGramEntry* e = find(g)) return acc + e->logprob;
    if (len == 0) return acc + kNoProb;
    if (const NGramEntry* ctx = find(g.first(len))) acc += ctx->backoff;
  }
}

double NGramModel::score_ids(std::span<const WordId> ids) const {
  std::vector<WordId> history{bos_};
  double total = 0.0;
  for (WordId w : ids) {
    total += score_word(history, w);
    history.push_back(w);
  }
  total += score_word(history, eos_);
  return total;
}

double NGramModel::score_seq(std::span<const std::string> tokens) const {
  std::vector<WordId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return score_ids(ids);
}

std::vector<WordId> NGramModel::predictable() const {
  std::vector<WordId> out;
  for (WordId w = 0; w < words_.size(); ++w) {
    if (w != bos_) out.push_back(w);
  }
  return out;
}

std::vector<std::pair<std::vector<WordId>, NGramEntry>> NGramModel::entries(std::size_t n) const {
  std::vector<std::pair<std::vector<WordId>, NGramEntry>> out(tables_.at(n - 1).begin(), tables_.at(n - 1).end());
  std::sort(out.begin(), out.end(), [this](const auto& a, const auto& b) {
    return std::lexicographical_compare(a.first.begin(), a.first.end(), b.first.begin(), b.first.end(),
                                        [this](WordId x, WordId y) { return words_[x] < words_[y]; });
  });
  return out;
}

NGramModel NGramModel::train(const std::vector<Tokens>& corpus, const NGramTrainOptions& options) {
  if (corpus.empty()) throw std::invalid_argument("ngram train: empty corpus");
  if (options.order < 1) throw std::invalid_argument("ngram train: order must be >= 1");
  const std::size_t order = options.order;

  NGramModel model;
  model.finalize_specials();
  using Counts = std::map<std::vector<WordId>, std::size_t>;
  std::vector<Counts> counts(order);
  for (const auto& sentence : corpus) {
    std::vector<WordId> ids{model.bos_};
    for (const auto& t : sentence) ids.push_back(model.intern(t));
    ids.push_back(model.eos_);
    for (std::size_t p = 1; p < ids.size(); ++p) {
      for (std::size_t n = 1; n <= order && n <= p + 1; ++n) {
        ++counts[n - 1][std::vector<WordId>(ids.begin() + static_cast<std::ptrdiff_t>(p + 1 - n),
                                            ids.begin() + static_cast<std::ptrdiff_t>(p + 1))];
      }
    }
  }

  model.tables_.assign(order, Table{});
  // Unrounded probabilities of stored n-grams, used for interpolation.
  std::vector<std::map<std::vector<WordId>, double>> prob(order);

  // Unigrams: interpolate with the uniform distribution over predictable symbols.
  {
    double total = 0.0, types = 0.0;
    for (const auto& [gram, c] : counts[0]) {
      total += static_cast<double>(c);
      types += 1.0;
    }
    const double vocab = static_cast<double>(model.words_.size() - 1);
    for (WordId w = 0; w < model.words_.size(); ++w) {
      if (w == model.bos_) continue;
      auto it = counts[0].find({w});
      const double c = it == counts[0].end() ? 0.0 : static_cast<double>(it->second);
      prob[0][{w}] = (c + types / vocab) / (total + types);
    }
  }

  auto is_pruned = [&](std::size_t n, std::size_t c) {
    return options.prune_count > 0 && n >= 3 && c <= options.prune_count;
  };

  for (std::size_t n = 2; n <= order; ++n) {
    std::map<std::vector<WordId>, std::pair<double, double>> ctx;  // context -> (count, types)
    for (const auto& [gram, c] : counts[n - 1]) {
      auto& s = ctx[std::vector<WordId>(gram.begin(), gram.end() - 1)];
      s.first += static_cast<double>(c);
      s.second += 1.0;
    }
    for (const auto& [gram, c] : counts[n - 1]) {
      if (is_pruned(n, c)) continue;
      const auto& [ctx_count, ctx_types] = ctx[std::vector<WordId>(gram.begin(), gram.end() - 1)];
      const double lower = prob[n - 2].at(std::vector<WordId>(gram.begin() + 1, gram.end()));
      prob[n - 1][gram] = (static_cast<double>(c) + ctx_types * lower) / (ctx_count + ctx_types);
    }
  }

  // Store rounded log10 values; rounding makes ARPA text round-trips exact.
  auto quantize = [](double p) { return round_significant(std::log10(p), 7); };
  for (std::size_t n = 1; n <= order; ++n) {
    for (const auto& [gram, p] : prob[n - 1]) model.tables_[n - 1][gram] = NGramEntry{quantize(p), 0.0, false};
  }
  model.tables_[0][{model.bos_}] = NGramEntry{kNoProb, 0.0, false};

  // Backoff weights, lowest order first so queries into lower orders are complete.
  for (std::size_t n = 2; n <= order; ++n) {
    std::map<std::vector<WordId>, std::vector<WordId>> followers;
    std::map<std::vector<WordId>, std::pair<double, double>> ctx;
    bool pruned_any = false;
    for (const auto& [gram, c] : counts[n - 1]) {
      std::vector<WordId> h(gram.begin(), gram.end() - 1);
      auto& s = ctx[h];
      s.first += static_cast<double>(c);
      s.second += 1.0;
      if (is_pruned(n, c)) {
        pruned_any = true;
      } else {
        followers[h].push_back(gram.back());
      }
    }
    for (const auto& [h, s] : ctx) {
      auto it = model.tables_[n - 2].find(h);
      if (it == model.tables_[n - 2].end()) continue;  // context itself pruned
      double bow = s.second / (s.first + s.second);
      if (pruned_any) {
        double kept_high = 0.0, kept_low = 0.0;
        std::vector<WordId> lower_ctx(h.begin() + 1, h.end());
        for (WordId w : followers[h]) {
          std::vector<WordId> g = h;
          g.push_back(w);
          kept_high += std::pow(10.0, model.tables_[n - 1].at(g).logprob);
          kept_low += std::pow(10.0, model.score_word(lower_ctx, w));
        }
        if (kept_high < 1.0 && kept_low < 1.0) bow = (1.0 - kept_high) / (1.0 - kept_low);
      }
      it->second.backoff = quantize(bow);
      it->second.has_backoff = true;
    }
  }
  return model;
}

std::string NGramModel::save_arpa() const {
  std::ostringstream out;
  out << "\\data\\\n";
  for (std::size_t n = 1; n <= order(); ++n) out << "ngram " << n << '=' << tables_[n - 1].size() << '\n';
  for (std::size_t n = 1; n <= order(); ++n) {
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [gram, e] : entries(n)) {
      out << format_double(e.logprob) << '\t';
      for (std::size_t i = 0; i < gram.size(); ++i) out << (i ? " " : "") << words_[gram[i]];
      if (e.has_backoff) out << '\t' << format_double(e.backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

NGramModel NGramModel::load_arpa(std::string_view text) {
  NGramModel model;
  std::vector<std::size_t> declared;
  std::size_t line_no = 0, pos = 0;
  enum class State { Preamble, Data, Grams, End } state = State::Preamble;
  std::size_t current = 0;

  auto next_line = [&](std::string_view& line) {
    if (pos >= text.size()) return false;
    std::size_t nl = text.find('\n', pos);
    line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    line = trim(line);
    return true;
  };

  std::string_view line;
  while (next_line(line)) {
    if (state == State::End) {
      if (!line.empty()) throw ParseError(line_no, "content after \\end\\");
      continue;
    }
    if (line.empty()) continue;
    if (state == State::Preamble) {
      if (line == "\\data\\") state = State::Data;
      continue;
    }
    if (line == "\\end\\") {
      if (declared.empty()) throw ParseError(line_no, "empty \\data\\ section");
      state = State::End;
      continue;
    }
    if (line.front() == '\\') {
      if (declared.empty()) throw ParseError(line_no, "empty \\data\\ section");
      if (line.size() < 9 || line.substr(line.size() - 7) != "-grams:") {
        throw ParseError(line_no, "unknown section header '" + std::string(line) + "'");
      }
      const auto n = static_cast<std::size_t>(parse_int(line.substr(1, line.size() - 8), line_no));
      if (n < 1 || n > declared.size()) throw ParseError(line_no, "section for undeclared order");
      if (n != current + 1) throw ParseError(line_no, "n-gram sections out of order");
      current = n;
      state = State::Grams;
      continue;
    }
    if (state == State::Data) {
      if (line.substr(0, 6) != "ngram ") throw ParseError(line_no, "expected 'ngram N=count'");
      auto eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'ngram N=count'");
      const auto n = static_cast<std::size_t>(parse_int(line.substr(6, eq - 6), line_no));
      if (n != declared.size() + 1) throw ParseError(line_no, "ngram counts must be listed in order");
      declared.push_back(static_cast<std::size_t>(parse_int(line.substr(eq + 1), line_no)));
      model.tables_.emplace_back();
      continue;
    }
    // n-gram line
    Tokens fields = split_ws(line);
    if (fields.size() != current + 1 && fields.size() != current + 2) {
      throw ParseError(line_no, "expected " + std::to_string(current) + "-gram entry");
    }
    NGramEntry e;
    e.logprob = parse_double(fields[0], line_no);
    std::vector<WordId> gram;
    for (std::size_t i = 1; i <= current; ++i) gram.push_back(model.intern(fields[i]));
    if (fields.size() == current + 2) {
      e.backoff = parse_double(fields.back(), line_no);
      e.has_backoff = true;
    }
    model.tables_[current - 1][std::move(gram)] = e;
  }
  if (state == State::Preamble) throw ParseError(line_no, "missing \\data\\ header");
  if (declared.empty()) throw ParseError(line_no, "empty \\data\\ section");
  if (state != State::End) throw ParseError(line_no, "missing \\end\\");
  for (std::size_t n = 0; n < declared.size(); ++n) {
    if (model.tables_[n].size() != declared[n]) {
      throw ParseError(line_no, std::to_string(n + 1) + "-gram count " + std::to_string(model.tables_[n].size()) +
                                    " does not match declared " + std::to_string(declared[n]));
    }
  }
  model.finalize_specials();
  return model;
}

NGramModel NGramModel::load_arpa_file(const std::string& path) { return load_arpa(read_file(path)); }

const std::string& ClassMap::lookup(const std::string& word) const {
  auto it = map_.find(word);
  return it == map_.end() ? unk_class_ : it->second;
}

ClassMap ClassMap::parse(std::string_view text) {
  std::unordered_map<std::string, std::string> map;
  std::size_t line_no = 0;
  for (const auto& raw : split_on(text, "\n")) {
    ++line_no;
    Tokens fields = split_ws(raw);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(line_no, "class map line must be 'word<TAB>class'");
    map[fields[0]] = fields[1];
  }
  return ClassMap(std::move(map));
}

ClassMap ClassMap::load(const std::string& path) { return parse(read_file(path)); }

std::string ClassMap::save() const {
  std::map<std::string, std::string> sorted(map_.begin(), map_.end());
  std::ostringstream out;
  for (const auto& [w, c] : sorted) out << w << '\t' << c << '\n';
  return out.str();
}

Tokens project_classes(std::span<const std::string> tokens, const ClassMap& classes) {
  Tokens out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(classes.lookup(t));
  return out;
}

double cross_entropy(const NGramModel& model, std::span<const std::string> tokens) {
  return -model.score_seq(tokens) / static_cast<double>(tokens.size() + 1);
}

MooreLewisResult moore_lewis(const std::vector<Tokens>& corpus, const NGramModel& in_domain,
                             const NGramModel& general) {
  if (in_domain.order() != general.order()) throw std::invalid_argument("moore_lewis: models differ in order");
  MooreLewisResult out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const double score = cross_entropy(in_domain, corpus[i]) - cross_entropy(general, corpus[i]);
    out.scores.push_back(score);
    if (score < 0) out.kept.push_back(i);
  }
  return out;
}

}  // namespace gectune
