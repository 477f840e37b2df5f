#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "gectune/common.hpp"

namespace gectune {

/// Dense feature slots in canonical order.
enum class Dense : std::size_t {
  TmPhiFwd,
  TmLexFwd,
  TmPhiBwd,
  TmLexBwd,
  Lm,
  ClassLm,
  Osm,
  Ld,
  EditDel,
  EditIns,
  EditSub,
  WordPenalty,
  PhrasePenalty,
};

inline constexpr std::size_t kDenseCount = 13;

std::string_view dense_name(std::size_t slot);
std::optional<std::size_t> dense_slot(std::string_view name);

inline constexpr std::size_t slot(Dense d) { return static_cast<std::size_t>(d); }

/// Dense array plus named sparse values. The same structure holds weights.
struct FeatureVec {
  std::array<double, kDenseCount> dense{};
  std::map<std::string, double> sparse;

  double& operator[](Dense d) { return dense[slot(d)]; }
  double operator[](Dense d) const { return dense[slot(d)]; }

  FeatureVec& operator+=(const FeatureVec& o);
  friend FeatureVec operator+(FeatureVec a, const FeatureVec& b) { return a += b; }
  FeatureVec& operator*=(double c);

  /// Value of a sparse feature, 0 when absent.
  double get(const std::string& name) const;

  friend bool operator==(const FeatureVec&, const FeatureVec&) = default;
};

using WeightVec = FeatureVec;

/// Sum over dense slots and sparse names; absent sparse weights read as 0.
double dot(const WeightVec& weights, const FeatureVec& features);

/// Sum of absolute values of every coordinate.
double l1_norm(const FeatureVec& v);

/// `name<TAB>value` lines: all dense slots in canonical order, then sparse
/// names in sorted order.
std::string save_weights(const WeightVec& weights);
WeightVec parse_weights(std::string_view text);
WeightVec load_weights(const std::string& path);

/// Dense feature groups that can be switched on and off.
struct FeatureSet {
  bool tm = true;
  bool lm = true;
  bool class_lm = false;
  bool osm = false;
  bool ld = false;
  bool ops = false;  // separate deletion / insertion / substitution counts
  bool penalties = true;

  bool enabled(std::size_t slot) const;
  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

/// Named dense feature sets: "vanilla", "ld", "ops" (LD plus D/I/S counts)
/// and "all" (ops plus OSM and class LM).
FeatureSet feature_preset(std::string_view name);

}  // namespace gectune
