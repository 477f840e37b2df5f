#include "gectune/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace gectune {

namespace {
constexpr double kLn10 = std::numbers::ln10;
constexpr std::uint32_t kSep = 0xffffffffu;
}  // namespace

std::string_view family_name(SparseFamily family) {
  switch (family) {
    case SparseFamily::E0:
      return "E0";
    case SparseFamily::E1:
      return "E1";
    case SparseFamily::E0C10:
      return "E0C10";
    case SparseFamily::E1C11:
      return "E1C11";
    case SparseFamily::E0C11:
      return "E0C11";
  }
  return "";
}

SparseFamily parse_family(std::string_view name) {
  for (auto f : {SparseFamily::E0, SparseFamily::E1, SparseFamily::E0C10, SparseFamily::E1C11, SparseFamily::E0C11}) {
    if (family_name(f) == name) return f;
  }
  throw ConfigError("unknown sparse feature family '" + std::string(name) + "'");
}

bool SparseFeatureConfig::edit_classes() const { return family == SparseFamily::E1 || family == SparseFamily::E1C11; }
bool SparseFeatureConfig::context_classes() const {
  return family == SparseFamily::E1C11 || family == SparseFamily::E0C11;
}
bool SparseFeatureConfig::has_context() const {
  return family == SparseFamily::E0C10 || family == SparseFamily::E1C11 || family == SparseFamily::E0C11;
}

std::map<std::string, double> sparse_features(const Tokens& src, const Tokens& tgt, const std::string& left,
                                              const std::string& right, const SparseFeatureConfig& config) {
  if ((config.edit_classes() || config.context_classes()) && !config.classes) {
    throw ConfigError("sparse family " + std::string(family_name(config.family)) + " needs a class map");
  }
  auto project = [&](const std::string& tok, bool classes) -> std::string {
    if (!classes || tok == kBos || tok == kEos) return tok;
    return config.classes->lookup(tok);
  };
  auto e = [&](const std::string& tok) { return project(tok, config.edit_classes()); };
  auto c = [&](const std::string& tok) { return project(tok, config.context_classes()); };
  const std::string prefix = std::string(family_name(config.family)) + "~";

  std::map<std::string, double> out;
  const auto path = lev_align(src, tgt).path;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const AlignOp& op = path[k];
    std::string base, l, r;
    switch (op.kind) {
      case OpKind::Match:
        continue;
      case OpKind::Subst:
        base = "subst(" + e(src[*op.src]) + "," + e(tgt[*op.tgt]) + ")";
        break;
      case OpKind::Ins:
        base = "insert(" + e(tgt[*op.tgt]) + ")";
        break;
      case OpKind::Del:
        base = "del(" + e(src[*op.src]) + ")";
        break;
    }
    out[prefix + base] += 1.0;
    if (!config.has_context()) continue;
    if (op.kind == OpKind::Ins) {
      // Left neighbor is the token produced just before the insertion; the
      // right neighbor is the next source token.
      l = *op.tgt > 0 ? tgt[*op.tgt - 1] : left;
      r = right;
      for (std::size_t q = k + 1; q < path.size(); ++q) {
        if (path[q].src) {
          r = src[*path[q].src];
          break;
        }
      }
    } else {
      const std::size_t i = *op.src;
      l = i > 0 ? src[i - 1] : left;
      r = i + 1 < src.size() ? src[i + 1] : right;
    }
    l = c(l);
    r = c(r);
    out[prefix + l + "_" + base] += 1.0;
    out[prefix + base + "_" + r] += 1.0;
    out[prefix + l + "_" + base + "_" + r] += 1.0;
  }
  return out;
}

void DecoderConfig::validate() const {
  if (distortion_limit != 0) throw ConfigError("distortion limit must be 0 (monotone decoding)");
  if (beam == 0) throw ConfigError("beam must be positive");
  if (nbest == 0) throw ConfigError("nbest must be positive");
  if (nbest_factor == 0) throw ConfigError("nbest_factor must be positive");
  if (table_limit == 0) throw ConfigError("table_limit must be positive");
  if (sparse && (sparse->edit_classes() || sparse->context_classes()) && !sparse->classes) {
    throw ConfigError("sparse family " + std::string(family_name(sparse->family)) + " needs a class map");
  }
}

void Models::validate(const DecoderConfig& config) const {
  if (!table) throw ConfigError("decoder needs a phrase table");
  if (config.features.lm && !lm) throw ConfigError("language model feature enabled without a language model");
  if (config.features.class_lm && (!class_lm || !classes)) {
    throw ConfigError("class LM feature enabled without a class LM and class map");
  }
  if (config.features.osm && !osm) throw ConfigError("OSM feature enabled without an operation sequence model");
}

FeatureVec option_features(const Tokens& src_phrase, const Tokens& tgt, const PhraseEntry* entry,
                           const std::string& left, const std::string& right, const DecoderConfig& config) {
  FeatureVec f;
  const FeatureSet& fs = config.features;
  if (fs.tm && entry) {
    f[Dense::TmPhiFwd] = std::log(entry->phi_fwd);
    f[Dense::TmLexFwd] = std::log(entry->lex_fwd);
    f[Dense::TmPhiBwd] = std::log(entry->phi_bwd);
    f[Dense::TmLexBwd] = std::log(entry->lex_bwd);
  }
  if (fs.ld || fs.ops) {
    const EditCounts counts = edit_op_counts(src_phrase, tgt);
    if (fs.ld) f[Dense::Ld] = static_cast<double>(counts.ld);
    if (fs.ops) {
      f[Dense::EditDel] = static_cast<double>(counts.d);
      f[Dense::EditIns] = static_cast<double>(counts.i);
      f[Dense::EditSub] = static_cast<double>(counts.s);
    }
  }
  if (fs.penalties) {
    f[Dense::WordPenalty] = static_cast<double>(tgt.size());
    f[Dense::PhrasePenalty] = 1.0;
  }
  if (config.sparse) f.sparse = sparse_features(src_phrase, tgt, left, right, *config.sparse);
  return f;
}

std::vector<TranslationOption> build_options(const Tokens& sentence, const PhraseTable& table,
                                             const DecoderConfig& config) {
  std::vector<TranslationOption> out;
  const std::size_t n = sentence.size();
  const std::string bos(kBos), eos(kEos);
  for (std::size_t start = 0; start < n; ++start) {
    const std::string& left = start > 0 ? sentence[start - 1] : bos;
    for (std::size_t len = 1; len <= table.max_len() && start + len <= n; ++len) {
      const std::size_t end = start + len;
      const std::string& right = end < n ? sentence[end] : eos;
      std::span<const std::string> span(sentence.data() + start, len);
      const auto& entries = table.lookup(span);
      const Tokens src(span.begin(), span.end());
      if (entries.empty() && len == 1) {
        TranslationOption copy{start, end, src, true, {}};
        copy.features = option_features(src, src, nullptr, left, right, config);
        out.push_back(std::move(copy));
        continue;
      }
      for (std::size_t k = 0; k < entries.size() && k < config.table_limit; ++k) {
        TranslationOption opt{start, end, entries[k].tgt, false, {}};
        opt.features = option_features(src, entries[k].tgt, &entries[k], left, right, config);
        out.push_back(std::move(opt));
      }
    }
  }
  return out;
}

namespace {

Tokens option_ops(const Tokens& sentence, const TranslationOption& opt, OpAlphabet alphabet) {
  const Tokens src(sentence.begin() + static_cast<std::ptrdiff_t>(opt.start),
                   sentence.begin() + static_cast<std::ptrdiff_t>(opt.end));
  return op_sequence(src, opt.tgt, alphabet);
}

struct Arc {
  int prev = -1;
  std::size_t option = 0;
  double delta = 0.0;
};

struct Node {
  std::size_t pos = 0;
  std::vector<WordId> lm_ctx, class_ctx, osm_ctx;
  double best = 0.0;
  std::vector<Arc> arcs;
  bool alive = false;
};

// Entry of a node's k-best derivation list.
struct Deriv {
  double score;
  int arc;   // -1 for the root
  std::size_t rank;  // rank in the predecessor's list
};

struct KeyHash {
  std::size_t operator()(const std::vector<std::uint32_t>& v) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (auto x : v) h = (h ^ x) * 1099511628211ULL;
    return static_cast<std::size_t>(h);
  }
};

void advance(const NGramModel& model, std::vector<WordId>& ctx, std::span<const WordId> ids, double& logprob) {
  const std::size_t keep = model.order() > 0 ? model.order() - 1 : 0;
  for (WordId w : ids) {
    logprob += model.score_word(ctx, w);
    ctx.push_back(w);
    if (ctx.size() > keep) ctx.erase(ctx.begin(), ctx.end() - static_cast<std::ptrdiff_t>(keep));
  }
}

}  // namespace

FeatureVec derivation_features(const Tokens& sentence, const std::vector<const TranslationOption*>& derivation,
                               const Models& models, const DecoderConfig& config) {
  FeatureVec f;
  Tokens surface, ops;
  for (const TranslationOption* opt : derivation) {
    f += opt->features;
    surface.insert(surface.end(), opt->tgt.begin(), opt->tgt.end());
    if (config.features.osm) {
      Tokens o = option_ops(sentence, *opt, config.osm_alphabet);
      ops.insert(ops.end(), o.begin(), o.end());
    }
  }
  if (config.features.lm) f[Dense::Lm] = models.lm->score_seq(surface) * kLn10;
  if (config.features.class_lm) {
    f[Dense::ClassLm] = models.class_lm->score_seq(project_classes(surface, *models.classes)) * kLn10;
  }
  if (config.features.osm) f[Dense::Osm] = models.osm->score_seq(ops) * kLn10;
  return f;
}

NBest decode(const Tokens& sentence, const Models& models, const WeightVec& weights, const DecoderConfig& config) {
  config.validate();
  models.validate(config);
  const FeatureSet& fs = config.features;
  const std::size_t n = sentence.size();

  const auto options = build_options(sentence, *models.table, config);
  std::vector<std::vector<std::size_t>> starting(n + 1);
  std::vector<double> stateless(options.size());
  std::vector<std::vector<WordId>> lm_ids(options.size()), class_ids(options.size()), osm_ids(options.size());
  for (std::size_t k = 0; k < options.size(); ++k) {
    const auto& opt = options[k];
    starting[opt.start].push_back(k);
    stateless[k] = dot(weights, opt.features);
    if (fs.lm) {
      for (const auto& w : opt.tgt) lm_ids[k].push_back(models.lm->id(w));
    }
    if (fs.class_lm) {
      for (const auto& w : opt.tgt) class_ids[k].push_back(models.class_lm->id(models.classes->lookup(w)));
    }
    if (fs.osm) {
      for (const auto& o : option_ops(sentence, opt, config.osm_alphabet)) osm_ids[k].push_back(models.osm->id(o));
    }
  }
  const double w_lm = weights[Dense::Lm] * kLn10;
  const double w_class = weights[Dense::ClassLm] * kLn10;
  const double w_osm = weights[Dense::Osm] * kLn10;

  std::vector<Node> nodes;
  std::vector<std::vector<int>> stacks(n + 1);
  std::vector<std::unordered_map<std::vector<std::uint32_t>, int, KeyHash>> index(n + 1);

  Node root;
  if (fs.lm) root.lm_ctx = {models.lm->bos()};
  if (fs.class_lm) root.class_ctx = {models.class_lm->bos()};
  if (fs.osm) root.osm_ctx = {models.osm->bos()};
  nodes.push_back(root);
  stacks[0].push_back(0);

  auto prune = [&](std::size_t p) {
    auto& stack = stacks[p];
    std::stable_sort(stack.begin(), stack.end(), [&](int a, int b) { return nodes[a].best > nodes[b].best; });
    if (stack.size() > config.beam) stack.resize(config.beam);
    for (int id : stack) nodes[id].alive = true;
  };

  for (std::size_t p = 0; p < n; ++p) {
    prune(p);
    for (int from : stacks[p]) {
      for (std::size_t k : starting[p]) {
        const Node& src_node = nodes[from];
        Node next;
        next.pos = options[k].end;
        double delta = stateless[k];
        next.lm_ctx = src_node.lm_ctx;
        next.class_ctx = src_node.class_ctx;
        next.osm_ctx = src_node.osm_ctx;
        if (fs.lm) {
          double lp = 0.0;
          advance(*models.lm, next.lm_ctx, lm_ids[k], lp);
          delta += w_lm * lp;
        }
        if (fs.class_lm) {
          double lp = 0.0;
          advance(*models.class_lm, next.class_ctx, class_ids[k], lp);
          delta += w_class * lp;
        }
        if (fs.osm) {
          double lp = 0.0;
          advance(*models.osm, next.osm_ctx, osm_ids[k], lp);
          delta += w_osm * lp;
        }
        std::vector<std::uint32_t> key = next.lm_ctx;
        key.push_back(kSep);
        key.insert(key.end(), next.class_ctx.begin(), next.class_ctx.end());
        key.push_back(kSep);
        key.insert(key.end(), next.osm_ctx.begin(), next.osm_ctx.end());

        const double total = src_node.best + delta;
        auto [it, inserted] = index[next.pos].emplace(std::move(key), static_cast<int>(nodes.size()));
        if (inserted) {
          next.best = total;
          next.arcs.push_back({from, k, delta});
          stacks[next.pos].push_back(it->second);
          nodes.push_back(std::move(next));
        } else {
          Node& existing = nodes[it->second];
          existing.arcs.push_back({from, k, delta});
          if (total > existing.best) existing.best = total;
        }
      }
    }
  }
  prune(n);

  // k-best derivation lists per surviving node, in topological order.
  const std::size_t per_node = config.nbest * config.nbest_factor;
  std::vector<std::vector<Deriv>> lists(nodes.size());
  lists[0] = {{0.0, -1, 0}};
  for (std::size_t p = 1; p <= n; ++p) {
    for (int id : stacks[p]) {
      const Node& node = nodes[id];
      using Item = std::pair<double, std::pair<std::size_t, std::size_t>>;  // score, (arc, rank)
      auto cmp = [](const Item& a, const Item& b) {
        if (a.first != b.first) return a.first < b.first;
        return a.second > b.second;  // earlier arc / rank first on ties
      };
      std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
      for (std::size_t a = 0; a < node.arcs.size(); ++a) {
        const auto& prev = lists[node.arcs[a].prev];
        if (!prev.empty()) heap.push({prev[0].score + node.arcs[a].delta, {a, 0}});
      }
      auto& list = lists[id];
      while (!heap.empty() && list.size() < per_node) {
        auto [score, ar] = heap.top();
        heap.pop();
        list.push_back({score, static_cast<int>(ar.first), ar.second});
        const Arc& arc = node.arcs[ar.first];
        const auto& prev = lists[arc.prev];
        if (ar.second + 1 < prev.size()) heap.push({prev[ar.second + 1].score + arc.delta, {ar.first, ar.second + 1}});
      }
    }
  }

  struct Final {
    double score;
    int node;
    std::size_t rank;
  };
  std::vector<Final> finals;
  for (int id : stacks[n]) {
    const Node& node = nodes[id];
    double end = 0.0;
    if (fs.lm) end += w_lm * models.lm->score_word(node.lm_ctx, models.lm->eos());
    if (fs.class_lm) end += w_class * models.class_lm->score_word(node.class_ctx, models.class_lm->eos());
    if (fs.osm) end += w_osm * models.osm->score_word(node.osm_ctx, models.osm->eos());
    for (std::size_t r = 0; r < lists[id].size(); ++r) finals.push_back({lists[id][r].score + end, id, r});
  }
  std::stable_sort(finals.begin(), finals.end(), [](const Final& a, const Final& b) { return a.score > b.score; });

  NBest out;
  std::unordered_set<std::string> seen;
  for (const Final& fin : finals) {
    if (out.size() >= config.nbest) break;
    std::vector<const TranslationOption*> derivation;
    int node = fin.node;
    std::size_t rank = fin.rank;
    while (node != 0) {
      const Deriv& d = lists[node][rank];
      const Arc& arc = nodes[node].arcs[static_cast<std::size_t>(d.arc)];
      derivation.push_back(&options[arc.option]);
      node = arc.prev;
      rank = d.rank;
    }
    std::reverse(derivation.begin(), derivation.end());
    Tokens surface;
    for (const auto* opt : derivation) surface.insert(surface.end(), opt->tgt.begin(), opt->tgt.end());
    if (!seen.insert(join(surface)).second) continue;

    Hypothesis hyp;
    hyp.surface = std::move(surface);
    hyp.features = derivation_features(sentence, derivation, models, config);
    const double recomputed = dot(weights, hyp.features);
    if (std::abs(recomputed - fin.score) > 1e-9 * std::max(1.0, std::abs(recomputed))) {
      throw std::logic_error("decoder: incremental score " + format_double(fin.score) +
                             " differs from recomputed score " + format_double(recomputed));
    }
    hyp.score = fin.score;
    out.push_back(std::move(hyp));
  }
  return out;
}

std::string format_nbest(std::size_t sid, const NBest& nbest, const FeatureSet& features) {
  std::ostringstream out;
  for (const auto& h : nbest) {
    out << sid << " ||| " << join(h.surface) << " |||";
    for (std::size_t s = 0; s < kDenseCount; ++s) {
      if (features.enabled(s)) out << ' ' << dense_name(s) << "= " << format_double(h.features.dense[s]);
    }
    for (const auto& [name, v] : h.features.sparse) out << ' ' << name << "= " << format_double(v);
    out << " ||| " << format_double(h.score) << '\n';
  }
  return out.str();
}

std::vector<NBestEntry> parse_nbest(std::string_view text) {
  std::vector<NBestEntry> out;
  std::size_t line_no = 0;
  for (const auto& raw : split_on(text, "\n")) {
    ++line_no;
    if (trim(raw).empty()) continue;
    auto fields = split_on(raw, "|||");
    if (fields.size() != 4) throw ParseError(line_no, "n-best line needs 4 '|||' fields");
    NBestEntry e;
    e.sid = static_cast<std::size_t>(parse_int(trim(fields[0]), line_no));
    e.hyp.surface = split_ws(fields[1]);
    Tokens feats = split_ws(fields[2]);
    for (std::size_t i = 0; i < feats.size(); ++i) {
      const std::string& name = feats[i];
      if (name.size() < 2 || name.back() != '=' || i + 1 >= feats.size()) {
        throw ParseError(line_no, "features must be 'name= value' pairs");
      }
      const std::string key = name.substr(0, name.size() - 1);
      const double v = parse_double(feats[++i], line_no);
      if (auto s = dense_slot(key)) {
        e.hyp.features.dense[*s] = v;
      } else {
        e.hyp.features.sparse[key] = v;
      }
    }
    e.hyp.score = parse_double(trim(fields[3]), line_no);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace gectune
