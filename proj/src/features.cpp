#include "gectune/features.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace gectune {

namespace {
constexpr std::array<std::string_view, kDenseCount> kDenseNames = {
    "tm_phi_fwd", "tm_lex_fwd", "tm_phi_bwd", "tm_lex_bwd", "lm",          "class_lm",      "osm",
    "ld",         "edit_del",   "edit_ins",   "edit_sub",   "word_penalty", "phrase_penalty",
};
}  // namespace

std::string_view dense_name(std::size_t slot) { return kDenseNames.at(slot); }

std::optional<std::size_t> dense_slot(std::string_view name) {
  for (std::size_t i = 0; i < kDenseCount; ++i) {
    if (kDenseNames[i] == name) return i;
  }
  return std::nullopt;
}

FeatureVec& FeatureVec::operator+=(const FeatureVec& o) {
  for (std::size_t i = 0; i < kDenseCount; ++i) dense[i] += o.dense[i];
  for (const auto& [name, v] : o.sparse) sparse[name] += v;
  return *this;
}

FeatureVec& FeatureVec::operator*=(double c) {
  for (double& v : dense) v *= c;
  for (auto& [name, v] : sparse) v *= c;
  return *this;
}

double FeatureVec::get(const std::string& name) const {
  auto it = sparse.find(name);
  return it == sparse.end() ? 0.0 : it->second;
}

double dot(const WeightVec& weights, const FeatureVec& features) {
  double total = 0.0;
  for (std::size_t i = 0; i < kDenseCount; ++i) total += weights.dense[i] * features.dense[i];
  // Iterate the smaller map.
  if (features.sparse.size() <= weights.sparse.size()) {
    for (const auto& [name, v] : features.sparse) total += weights.get(name) * v;
  } else {
    for (const auto& [name, w] : weights.sparse) total += w * features.get(name);
  }
  return total;
}

double l1_norm(const FeatureVec& v) {
  double n = 0.0;
  for (double x : v.dense) n += std::abs(x);
  for (const auto& [name, x] : v.sparse) n += std::abs(x);
  return n;
}

std::string save_weights(const WeightVec& weights) {
  std::ostringstream out;
  for (std::size_t i = 0; i < kDenseCount; ++i) out << dense_name(i) << '\t' << format_double(weights.dense[i]) << '\n';
  for (const auto& [name, v] : weights.sparse) out << name << '\t' << format_double(v) << '\n';
  return out.str();
}

WeightVec parse_weights(std::string_view text) {
  WeightVec w;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  for (const auto& raw : split_on(text, "\n")) {
    ++line_no;
    Tokens fields = split_ws(raw);
    if (fields.empty()) continue;
    if (fields.size() != 2) throw ParseError(line_no, "weights line must be 'name<TAB>value'");
    if (!seen.insert(fields[0]).second) throw ParseError(line_no, "duplicate weight '" + fields[0] + "'");
    const double v = parse_double(fields[1], line_no);
    if (!std::isfinite(v)) throw ParseError(line_no, "non-finite weight");
    if (auto s = dense_slot(fields[0])) {
      w.dense[*s] = v;
    } else {
      w.sparse[fields[0]] = v;
    }
  }
  return w;
}

WeightVec load_weights(const std::string& path) { return parse_weights(read_file(path)); }

bool FeatureSet::enabled(std::size_t s) const {
  switch (static_cast<Dense>(s)) {
    case Dense::TmPhiFwd:
    case Dense::TmLexFwd:
    case Dense::TmPhiBwd:
    case Dense::TmLexBwd:
      return tm;
    case Dense::Lm:
      return lm;
    case Dense::ClassLm:
      return class_lm;
    case Dense::Osm:
      return osm;
    case Dense::Ld:
      return ld;
    case Dense::EditDel:
    case Dense::EditIns:
    case Dense::EditSub:
      return ops;
    case Dense::WordPenalty:
    case Dense::PhrasePenalty:
      return penalties;
  }
  return false;
}

FeatureSet feature_preset(std::string_view name) {
  FeatureSet f;
  if (name == "vanilla") return f;
  f.ld = true;
  if (name == "ld") return f;
  f.ops = true;
  if (name == "ops") return f;
  f.osm = f.class_lm = true;
  if (name == "all") return f;
  throw ConfigError("unknown feature set '" + std::string(name) + "' (expected vanilla, ld, ops or all)");
}

}  // namespace gectune
