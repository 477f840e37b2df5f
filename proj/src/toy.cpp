#include "gectune/toy.hpp"

#include <array>
#include <string_view>
#include <unordered_map>

namespace gectune {

namespace {

struct Noun {
  std::string_view sg, pl;
};
struct Verb {
  std::string_view base, third;
};

constexpr std::array<Noun, 28> kNouns = {{
    {"cat", "cats"},         {"dog", "dogs"},           {"student", "students"}, {"teacher", "teachers"},
    {"apple", "apples"},     {"idea", "ideas"},         {"engineer", "engineers"}, {"city", "cities"},
    {"problem", "problems"}, {"book", "books"},         {"owl", "owls"},         {"umbrella", "umbrellas"},
    {"child", "children"},   {"friend", "friends"},     {"house", "houses"},     {"car", "cars"},
    {"elephant", "elephants"}, {"island", "islands"},   {"river", "rivers"},     {"garden", "gardens"},
    {"letter", "letters"},   {"computer", "computers"}, {"answer", "answers"},   {"example", "examples"},
    {"office", "offices"},   {"school", "schools"},     {"game", "games"},       {"artist", "artists"},
}};
constexpr std::array<std::string_view, 14> kAdjectives = {"old",   "big",     "small",     "new",   "red",
                                                          "interesting", "young", "happy", "empty", "quiet",
                                                          "important",   "green", "early", "strange"};
constexpr std::array<Verb, 12> kTransitive = {{{"see", "sees"},
                                               {"like", "likes"},
                                               {"find", "finds"},
                                               {"want", "wants"},
                                               {"visit", "visits"},
                                               {"need", "needs"},
                                               {"watch", "watches"},
                                               {"carry", "carries"},
                                               {"open", "opens"},
                                               {"read", "reads"},
                                               {"help", "helps"},
                                               {"love", "loves"}}};
constexpr std::array<Verb, 6> kIntransitive = {
    {{"sleep", "sleeps"}, {"run", "runs"}, {"work", "works"}, {"wait", "waits"}, {"arrive", "arrives"},
     {"smile", "smiles"}}};
constexpr std::array<std::string_view, 6> kAdverbs = {"today", "quickly", "again", "often", "slowly", "now"};
constexpr std::array<std::string_view, 4> kPreps = {"in", "near", "behind", "under"};

bool vowel_initial(std::string_view w) { return std::string_view("aeiou").find(w.front()) != std::string_view::npos; }

struct Segment {
  Tokens src;
  Tokens tgt;
};

class Generator {
 public:
  Generator(std::uint64_t seed, double error_prob) : rng_(seed), p_(error_prob) {}

  std::vector<Segment> sentence(bool with_errors) {
    errors_ = with_errors;
    std::vector<Segment> out;
    bool plural = false;
    if (chance(0.2)) {
      static constexpr std::array<std::string_view, 5> kPronouns = {"he", "she", "they", "we", "i"};
      const auto pron = pick(kPronouns);
      plural = !(pron == "he" || pron == "she");
      out.push_back(same(pron));
    } else {
      plural = chance(0.4);
      noun_phrase(out, plural);
    }
    const bool transitive = chance(0.7);
    const Verb v = transitive ? pick(kTransitive) : pick(kIntransitive);
    const std::string_view right = plural ? v.base : v.third;
    if (corrupt()) {
      out.push_back({{std::string(plural ? v.third : v.base)}, {std::string(right)}});
    } else {
      out.push_back(same(right));
    }
    if (transitive) noun_phrase(out, chance(0.4));
    if (chance(0.3)) {
      out.push_back(same(pick(kPreps)));
      noun_phrase(out, chance(0.3));
    }
    if (chance(0.3)) out.push_back(same(pick(kAdverbs)));
    out.push_back(same("."));
    return out;
  }

 private:
  template <typename T, std::size_t N>
  T pick(const std::array<T, N>& items) {
    return items[uniform_index(rng_, N)];
  }
  bool chance(double p) { return uniform_real(rng_) < p; }
  bool corrupt() { return errors_ && chance(p_); }
  static Segment same(std::string_view w) { return {{std::string(w)}, {std::string(w)}}; }

  void noun_phrase(std::vector<Segment>& out, bool plural) {
    const Noun n = pick(kNouns);
    std::string adj;
    if (chance(0.3)) adj = std::string(pick(kAdjectives));
    const std::string head(plural ? n.pl : n.sg);
    const std::string& first = adj.empty() ? head : adj;

    if (!plural) {
      const int det = static_cast<int>(uniform_index(rng_, 4));  // 0,1: indefinite, 2: the, 3: this/my
      if (det <= 1) {
        const std::string right = vowel_initial(first) ? "an" : "a";
        const std::string wrong = right == "an" ? "a" : "an";
        if (corrupt()) {
          if (chance(0.6)) {
            out.push_back({{wrong}, {right}});
          } else {
            out.push_back({{}, {right}});
          }
        } else {
          out.push_back(same(right));
        }
      } else if (det == 2) {
        if (corrupt()) {
          out.push_back({{}, {"the"}});
        } else {
          out.push_back(same("the"));
        }
      } else {
        out.push_back(same(chance(0.5) ? "this" : "my"));
      }
      if (!adj.empty()) out.push_back(same(adj));
      out.push_back(same(head));
      return;
    }

    const int det = static_cast<int>(uniform_index(rng_, 4));  // 0: bare, 1: the, 2: these/many, 3: my
    bool number_slot = false;
    if (det == 0) {
      if (corrupt()) out.push_back({{vowel_initial(first) ? "an" : "a"}, {}});
    } else if (det == 1) {
      out.push_back(same("the"));
    } else if (det == 2) {
      out.push_back(same(chance(0.5) ? "these" : "many"));
      number_slot = true;
    } else {
      out.push_back(same("my"));
    }
    if (!adj.empty()) out.push_back(same(adj));
    if (number_slot && corrupt()) {
      out.push_back({{std::string(n.sg)}, {head}});
    } else {
      out.push_back(same(head));
    }
  }

  Rng rng_;
  double p_;
  bool errors_ = true;
};

AnnotatedSentence annotate(const std::vector<Segment>& segments) {
  AnnotatedSentence s;
  EditSet edits;
  for (const auto& seg : segments) {
    const std::size_t start = s.source.size();
    s.source.insert(s.source.end(), seg.src.begin(), seg.src.end());
    if (seg.src != seg.tgt) {
      Edit e;
      e.start = start;
      e.end = s.source.size();
      e.replacement = seg.tgt;
      e.etype = seg.src.empty() ? "Missing" : seg.tgt.empty() ? "Unnecessary" : "Replace";
      edits.push_back(std::move(e));
    }
  }
  s.gold[0] = std::move(edits);
  return s;
}

ClassMap toy_classes() {
  std::unordered_map<std::string, std::string> map;
  for (const auto& n : kNouns) {
    map[std::string(n.sg)] = "NN";
    map[std::string(n.pl)] = "NNS";
  }
  for (auto a : kAdjectives) map[std::string(a)] = "JJ";
  for (const auto& list : {std::span<const Verb>(kTransitive), std::span<const Verb>(kIntransitive)}) {
    for (const auto& v : list) {
      map[std::string(v.base)] = "VB";
      map[std::string(v.third)] = "VBZ";
    }
  }
  for (auto a : kAdverbs) map[std::string(a)] = "RB";
  for (auto p : kPreps) map[std::string(p)] = "IN";
  for (auto d : {"a", "an"}) map[d] = "DTI";
  for (auto d : {"the", "this", "these", "many", "my"}) map[d] = "DT";
  for (auto p : {"he", "she"}) map[p] = "PRP3";
  for (auto p : {"they", "we", "i"}) map[p] = "PRP";
  map["."] = "PUNCT";
  return ClassMap(std::move(map));
}

}  // namespace

ToyData make_toy(const ToyOptions& options) {
  ToyData data;
  Generator gen(options.seed, options.error_prob);
  auto fill = [&](Corpus& c, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) c.sentences.push_back(annotate(gen.sentence(true)));
  };
  fill(data.train, options.train);
  fill(data.dev, options.dev);
  fill(data.test, options.test);
  for (std::size_t i = 0; i < options.mono; ++i) {
    Tokens clean;
    for (const auto& seg : gen.sentence(false)) clean.insert(clean.end(), seg.tgt.begin(), seg.tgt.end());
    data.mono.push_back(std::move(clean));
  }
  data.classes = toy_classes();
  return data;
}

}  // namespace gectune
