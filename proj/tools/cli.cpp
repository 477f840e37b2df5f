#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "gectune/corpus.hpp"
#include "gectune/decoder.hpp"
#include "gectune/editops.hpp"
#include "gectune/metric.hpp"
#include "gectune/ngram.hpp"
#include "gectune/phrasetable.hpp"
#include "gectune/pipeline.hpp"
#include "gectune/toy.hpp"
#include "gectune/tuner.hpp"

namespace gectune::cli {

namespace {

namespace fs = std::filesystem;

enum class Kind { In, Out, Dir, Int, Real, Bool, Text };

struct KeySpec {
  std::string_view name;
  std::string_view def;
  Kind kind;
  std::string_view help;
};

// clang-format off
constexpr KeySpec kKeys[] = {
    {"seed", "1", Kind::Int, "seed all randomness is derived from"},
    {"jobs", "0", Kind::Int, "parallel workers (0: all cores); GECTUNE_JOBS overrides"},
    {"hyp", "", Kind::In, "system output, one tokenized sentence per line"},
    {"m2", "", Kind::In, "annotated corpus in M2 format"},
    {"ref", "", Kind::In, "reference text, one sentence per line"},
    {"text", "", Kind::In, "tokenized text, one sentence per line"},
    {"src", "", Kind::In, "source side of a parallel corpus"},
    {"tgt", "", Kind::In, "target side of a parallel corpus"},
    {"input", "", Kind::In, "input text to decode"},
    {"table", "", Kind::In, "phrase table"},
    {"lm", "", Kind::In, "word language model (ARPA)"},
    {"class_lm", "", Kind::In, "word-class language model (ARPA)"},
    {"classes", "", Kind::In, "word-class map, 'word<TAB>class' lines"},
    {"osm", "", Kind::In, "operation sequence model (ARPA)"},
    {"weights", "", Kind::In, "weights file; equal dense weights when unset"},
    {"mono", "", Kind::In, "extra monolingual text for language models"},
    {"in_domain", "", Kind::In, "in-domain language model (ARPA)"},
    {"general", "", Kind::In, "general-domain language model (ARPA)"},
    {"log", "", Kind::In, "tuning log or variance report to summarize"},
    {"output", "", Kind::Out, "output file (stdout when unset)"},
    {"lm_out", "", Kind::Out, "where to write the ARPA model"},
    {"table_out", "", Kind::Out, "where to write the phrase table"},
    {"nbest_out", "", Kind::Out, "where to write the n-best list"},
    {"weights_out", "", Kind::Out, "where to write tuned weights"},
    {"log_out", "", Kind::Out, "where to write the per-iteration tuning log"},
    {"variance_out", "", Kind::Out, "where to write per-run dev metrics"},
    {"m2_out", "", Kind::Out, "where to write the selected corpus"},
    {"sentence_tsv", "", Kind::Out, "where to write per-sentence statistics"},
    {"scores_out", "", Kind::Out, "where to write per-sentence scores"},
    {"out_prefix", "", Kind::Out, "output path prefix"},
    {"out_dir", "", Kind::Dir, "output directory (created if missing)"},
    {"beta", "0.5", Kind::Real, "F-measure beta"},
    {"max_unchanged", "2", Kind::Int, "unchanged tokens allowed inside a merged edit"},
    {"annotator_mode", "per_sentence", Kind::Text, "annotator choice: per_sentence or cumulative"},
    {"bleu_order", "4", Kind::Int, "maximum BLEU n-gram order"},
    {"lm_kind", "word", Kind::Text, "model to train: word, class or osm"},
    {"order", "5", Kind::Int, "n-gram order"},
    {"prune_count", "0", Kind::Int, "drop n-grams (order >= 3) seen at most this often"},
    {"osm_alphabet", "plain", Kind::Text, "edit operation symbols: plain or lexicalized"},
    {"max_phrase_len", "7", Kind::Int, "maximum phrase length"},
    {"model1_iterations", "5", Kind::Int, "IBM Model 1 EM iterations"},
    {"lexical_weights", "true", Kind::Bool, "compute lexical weights"},
    {"features", "vanilla", Kind::Text, "dense feature set: vanilla, ld, ops or all"},
    {"sparse_family", "none", Kind::Text, "sparse edit features: none, E0, E1, E0C10, E1C11, E0C11"},
    {"beam", "100", Kind::Int, "hypotheses kept per stack"},
    {"nbest", "1", Kind::Int, "n-best size for decode"},
    {"nbest_factor", "4", Kind::Int, "derivations kept per search node, as a multiple of nbest"},
    {"table_limit", "20", Kind::Int, "translation options per source phrase"},
    {"optimizer", "mert", Kind::Text, "mert, pro or mira"},
    {"metric", "m2", Kind::Text, "tuning metric: m2 or bleu"},
    {"folds", "4", Kind::Int, "cross-validation folds"},
    {"repetitions", "5", Kind::Int, "repetitions of the cross-fold procedure"},
    {"iterations", "10", Kind::Int, "decode/optimize iterations per tuning run"},
    {"tune_nbest", "100", Kind::Int, "n-best size while tuning"},
    {"random_directions", "20", Kind::Int, "random MERT directions per round"},
    {"mira_decay", "0.999", Kind::Real, "Mira background decay"},
    {"mira_model_bg", "false", Kind::Bool, "Mira background from model-best hypotheses"},
    {"mira_c", "0.01", Kind::Real, "Mira step cap"},
    {"mira_epochs", "60", Kind::Int, "Mira passes over the pool"},
    {"pro_samples", "5000", Kind::Int, "PRO sampled pairs per sentence"},
    {"pro_keep", "50", Kind::Int, "PRO pairs kept per sentence"},
    {"pro_min_diff", "0.05", Kind::Real, "PRO minimum metric difference"},
    {"pro_interpolation", "0.1", Kind::Real, "PRO weight of the new vector"},
    {"lm_order", "5", Kind::Int, "word LM order"},
    {"class_lm_order", "9", Kind::Int, "class LM order"},
    {"osm_order", "5", Kind::Int, "OSM order"},
    {"target_rate", "0.15", Kind::Real, "error rate to reach"},
    {"annotator", "any", Kind::Text, "annotator whose edits count: any or an id"},
    {"report_kind", "variance", Kind::Text, "input kind: variance or log"},
    {"toy_train", "2000", Kind::Int, "toy training sentences"},
    {"toy_dev", "200", Kind::Int, "toy dev sentences"},
    {"toy_test", "200", Kind::Int, "toy test sentences"},
    {"toy_mono", "2000", Kind::Int, "toy monolingual sentences"},
    {"error_prob", "0.25", Kind::Real, "toy error probability per eligible slot"},
};
// clang-format on

const KeySpec* find_key(std::string_view name) {
  for (const auto& k : kKeys) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

struct Command {
  std::string_view name;
  std::string_view help;
  std::vector<std::string_view> keys;
  std::vector<std::string_view> required;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> kCommands = {
      {"score", "M2 score of system output against an annotated corpus",
       {"hyp", "m2", "beta", "max_unchanged", "annotator_mode", "sentence_tsv"},
       {"hyp", "m2"}},
      {"bleu", "corpus BLEU of system output", {"hyp", "ref", "bleu_order"}, {"hyp", "ref"}},
      {"train-lm", "train a word, class or edit-operation n-gram model",
       {"lm_kind", "text", "m2", "classes", "order", "prune_count", "osm_alphabet", "lm_out"},
       {"lm_out"}},
      {"train-tm", "train a phrase table",
       {"m2", "src", "tgt", "max_phrase_len", "model1_iterations", "lexical_weights", "table_out"},
       {"table_out"}},
      {"decode", "correct text with a trained system",
       {"input", "table", "lm", "class_lm", "classes", "osm", "weights", "features", "sparse_family", "beam", "nbest",
        "nbest_factor", "table_limit", "max_phrase_len", "osm_alphabet", "output", "nbest_out", "jobs"},
       {"input", "table"}},
      {"tune", "cross-fold tuning of log-linear weights",
       {"m2",          "mono",           "classes",       "features",      "sparse_family",    "optimizer",
        "metric",      "beta",           "max_unchanged", "bleu_order",    "folds",            "repetitions",
        "iterations",  "tune_nbest",     "nbest_factor",  "beam",          "table_limit",      "random_directions",
        "mira_decay",  "mira_model_bg",  "mira_c",        "mira_epochs",   "pro_samples",      "pro_keep",
        "pro_min_diff", "pro_interpolation", "lm_order",  "class_lm_order", "osm_order",       "osm_alphabet",
        "max_phrase_len", "model1_iterations", "lexical_weights", "seed", "jobs", "weights_out", "log_out",
        "variance_out"},
       {"m2", "weights_out"}},
      {"adapt-devset", "drop sentences until the corpus error rate reaches a target",
       {"m2", "target_rate", "annotator", "m2_out"},
       {"m2", "m2_out"}},
      {"make-folds", "split an annotated corpus into folds", {"m2", "folds", "seed", "out_prefix"}, {"m2", "out_prefix"}},
      {"filter-mono", "cross-entropy difference filtering of monolingual text",
       {"text", "in_domain", "general", "output", "scores_out"},
       {"text", "in_domain", "general"}},
      {"report", "summarize a tuning log or variance report", {"log", "report_kind", "output"}, {"log"}},
      {"make-toy", "generate the synthetic learner corpus",
       {"out_dir", "toy_train", "toy_dev", "toy_test", "toy_mono", "error_prob", "seed"},
       {"out_dir"}},
  };
  return kCommands;
}

std::string flag_of(std::string_view key) {
  std::string f = "--" + std::string(key);
  for (char& c : f) {
    if (c == '_') c = '-';
  }
  return f;
}

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Settings {
 public:
  explicit Settings(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  const std::string& str(std::string_view key) const {
    auto it = values_.find(std::string(key));
    if (it == values_.end()) throw std::logic_error("setting '" + std::string(key) + "' not declared for command");
    return it->second;
  }
  bool has(std::string_view key) const { return !str(key).empty(); }
  long long integer(std::string_view key) const {
    try {
      return parse_int(str(key));
    } catch (const ParseError&) {
      throw ConfigError(std::string(key) + ": expected an integer, got '" + str(key) + "'");
    }
  }
  std::size_t count(std::string_view key) const {
    const long long v = integer(key);
    if (v < 0) throw ConfigError(std::string(key) + ": must not be negative");
    return static_cast<std::size_t>(v);
  }
  double real(std::string_view key) const {
    try {
      return parse_double(str(key));
    } catch (const ParseError&) {
      throw ConfigError(std::string(key) + ": expected a number, got '" + str(key) + "'");
    }
  }
  bool boolean(std::string_view key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(std::string(key) + ": expected true or false, got '" + v + "'");
  }

 private:
  std::map<std::string, std::string> values_;
};

void validate_settings(const Command& cmd, const Settings& s) {
  for (auto req : cmd.required) {
    if (!s.has(req)) throw UsageError("missing required setting '" + std::string(req) + "' (" + flag_of(req) + ")");
  }
  for (auto key : cmd.keys) {
    const KeySpec* spec = find_key(key);
    switch (spec->kind) {
      case Kind::Int:
        s.integer(key);
        break;
      case Kind::Real:
        s.real(key);
        break;
      case Kind::Bool:
        s.boolean(key);
        break;
      case Kind::In:
        if (s.has(key) && !fs::is_regular_file(s.str(key))) {
          throw UsageError(std::string(key) + ": no such file '" + s.str(key) + "'");
        }
        break;
      case Kind::Out:
        if (s.has(key)) {
          const fs::path parent = fs::path(s.str(key)).parent_path();
          if (!parent.empty() && !fs::is_directory(parent)) {
            throw UsageError(std::string(key) + ": directory '" + parent.string() + "' does not exist");
          }
        }
        break;
      case Kind::Dir:
      case Kind::Text:
        break;
    }
  }
}

void write_output(const Settings& s, std::string_view key, std::string_view content, std::ostream& out) {
  if (s.has(key)) {
    write_file(s.str(key), content);
  } else {
    out << content;
  }
}

std::vector<Tokens> read_sentences(const std::string& path) {
  std::vector<Tokens> out;
  for (const auto& line : read_lines(path)) out.push_back(split_ws(line));
  return out;
}

std::size_t jobs_of(const Settings& s) {
  if (const char* env = std::getenv("GECTUNE_JOBS"); env && *env) {
    try {
      const long long v = parse_int(env);
      if (v >= 0) return resolve_jobs(static_cast<std::size_t>(v));
    } catch (const ParseError&) {
    }
    throw ConfigError("GECTUNE_JOBS: expected a non-negative integer");
  }
  return resolve_jobs(s.count("jobs"));
}

MetricConfig metric_config(const Settings& s) {
  MetricConfig m;
  m.beta = s.real("beta");
  if (!(m.beta > 0)) throw ConfigError("beta must be positive");
  m.max_unchanged = s.count("max_unchanged");
  const std::string& mode = s.str("annotator_mode");
  if (mode == "per_sentence") {
    m.mode = AnnotatorMode::PerSentence;
  } else if (mode == "cumulative") {
    m.mode = AnnotatorMode::Cumulative;
  } else {
    throw ConfigError("annotator_mode must be per_sentence or cumulative");
  }
  return m;
}

OpAlphabet alphabet_of(const Settings& s) {
  const std::string& a = s.str("osm_alphabet");
  if (a == "plain") return OpAlphabet::Plain;
  if (a == "lexicalized") return OpAlphabet::Lexicalized;
  throw ConfigError("osm_alphabet must be plain or lexicalized");
}

std::optional<SparseFeatureConfig> sparse_of(const Settings& s, const ClassMap* classes) {
  const std::string& name = s.str("sparse_family");
  if (name == "none") return std::nullopt;
  SparseFeatureConfig cfg{parse_family(name), classes};
  if ((cfg.edit_classes() || cfg.context_classes()) && !classes) {
    throw ConfigError("sparse_family " + name + " needs a class map (--classes)");
  }
  return cfg;
}

// ---- subcommands ----

int cmd_score(const Settings& s, std::ostream& out) {
  const Corpus corpus = load_m2(s.str("m2"));
  const auto hyps = read_sentences(s.str("hyp"));
  if (hyps.size() != corpus.size()) {
    throw ValidationError("hypothesis file has " + std::to_string(hyps.size()) + " lines but the corpus has " +
                          std::to_string(corpus.size()) + " sentences");
  }
  const M2Report report = corpus_m2(corpus, hyps, metric_config(s));
  out << format_report(report);
  if (s.has("sentence_tsv")) write_file(s.str("sentence_tsv"), format_sentence_tsv(report));
  return kExitOk;
}

int cmd_bleu(const Settings& s, std::ostream& out) {
  const auto hyps = read_sentences(s.str("hyp"));
  const auto refs = read_sentences(s.str("ref"));
  if (hyps.size() != refs.size()) {
    throw ValidationError("hypothesis file has " + std::to_string(hyps.size()) + " lines but the reference has " +
                          std::to_string(refs.size()));
  }
  const std::size_t order = s.count("bleu_order");
  if (order == 0) throw ConfigError("bleu_order must be positive");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "BLEU = %.4f\n", bleu(hyps, refs, order).score);
  out << buf;
  return kExitOk;
}

int cmd_train_lm(const Settings& s, std::ostream& out) {
  const std::string& kind = s.str("lm_kind");
  NGramTrainOptions opts{s.count("order"), s.count("prune_count")};
  if (opts.order == 0) throw ConfigError("order must be positive");
  std::vector<Tokens> corpus;
  if (kind == "word" || kind == "class") {
    if (!s.has("text")) throw UsageError("train-lm --lm-kind " + kind + " needs --text");
    corpus = read_sentences(s.str("text"));
    if (kind == "class") {
      if (!s.has("classes")) throw UsageError("train-lm --lm-kind class needs --classes");
      const ClassMap classes = ClassMap::load(s.str("classes"));
      for (auto& t : corpus) t = project_classes(t, classes);
    }
  } else if (kind == "osm") {
    if (!s.has("m2")) throw UsageError("train-lm --lm-kind osm needs --m2");
    for (const auto& p : parallel_pairs(load_m2(s.str("m2")))) {
      corpus.push_back(op_sequence(p.src, p.tgt, alphabet_of(s)));
    }
  } else {
    throw ConfigError("lm_kind must be word, class or osm");
  }
  if (corpus.empty()) throw ValidationError("training text is empty");
  const NGramModel model = NGramModel::train(corpus, opts);
  write_file(s.str("lm_out"), model.save_arpa());
  out << "trained " << kind << " model of order " << model.order() << " on " << corpus.size() << " sentences\n";
  return kExitOk;
}

int cmd_train_tm(const Settings& s, std::ostream& out) {
  std::vector<SentencePair> pairs;
  if (s.has("m2")) {
    if (s.has("src") || s.has("tgt")) throw UsageError("give either --m2 or --src/--tgt, not both");
    pairs = parallel_pairs(load_m2(s.str("m2")));
  } else {
    if (!s.has("src") || !s.has("tgt")) throw UsageError("train-tm needs --m2 or both --src and --tgt");
    const auto src = read_sentences(s.str("src"));
    const auto tgt = read_sentences(s.str("tgt"));
    if (src.size() != tgt.size()) {
      throw ValidationError("source has " + std::to_string(src.size()) + " lines but target has " +
                            std::to_string(tgt.size()));
    }
    for (std::size_t i = 0; i < src.size(); ++i) pairs.push_back({src[i], tgt[i]});
  }
  if (pairs.empty()) throw ValidationError("parallel corpus is empty");
  TmTrainOptions opts;
  opts.max_len = s.count("max_phrase_len");
  if (opts.max_len == 0) throw ConfigError("max_phrase_len must be positive");
  opts.model1.iterations = s.count("model1_iterations");
  opts.lexical_weights = s.boolean("lexical_weights");
  const PhraseTable table = train_translation_model(pairs, opts);
  write_file(s.str("table_out"), table.save());
  out << "extracted " << table.size() << " phrase pairs from " << pairs.size() << " sentence pairs\n";
  return kExitOk;
}

int cmd_decode(const Settings& s, std::ostream& out) {
  DecoderConfig cfg;
  cfg.features = feature_preset(s.str("features"));
  cfg.beam = s.count("beam");
  cfg.nbest = s.count("nbest");
  cfg.nbest_factor = s.count("nbest_factor");
  cfg.table_limit = s.count("table_limit");
  cfg.osm_alphabet = alphabet_of(s);

  const PhraseTable table = PhraseTable::load_file(s.str("table"), s.count("max_phrase_len"));
  std::optional<NGramModel> lm, class_lm, osm;
  std::optional<ClassMap> classes;
  if (s.has("lm")) lm = NGramModel::load_arpa_file(s.str("lm"));
  if (s.has("class_lm")) class_lm = NGramModel::load_arpa_file(s.str("class_lm"));
  if (s.has("classes")) classes = ClassMap::load(s.str("classes"));
  if (s.has("osm")) osm = NGramModel::load_arpa_file(s.str("osm"));
  cfg.sparse = sparse_of(s, classes ? &*classes : nullptr);

  Models models;
  models.table = &table;
  models.lm = lm ? &*lm : nullptr;
  models.class_lm = class_lm ? &*class_lm : nullptr;
  models.classes = classes ? &*classes : nullptr;
  models.osm = osm ? &*osm : nullptr;
  cfg.validate();
  models.validate(cfg);

  const WeightVec weights = s.has("weights") ? load_weights(s.str("weights")) : uniform_weights(cfg.features);
  const auto sources = read_sentences(s.str("input"));
  const auto nbests = decode_all(sources, models, weights, cfg, jobs_of(s));

  std::string best, nbest_text;
  for (std::size_t i = 0; i < nbests.size(); ++i) {
    best += join(nbests[i].front().surface) + "\n";
    if (s.has("nbest_out")) nbest_text += format_nbest(i, nbests[i], cfg.features);
  }
  write_output(s, "output", best, out);
  if (s.has("nbest_out")) write_file(s.str("nbest_out"), nbest_text);
  return kExitOk;
}

int cmd_tune(const Settings& s, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_m2(s.str("m2"));
  const std::vector<Tokens> mono = s.has("mono") ? read_sentences(s.str("mono")) : std::vector<Tokens>{};
  std::optional<ClassMap> classes;
  if (s.has("classes")) classes = ClassMap::load(s.str("classes"));
  const ClassMap* class_ptr = classes ? &*classes : nullptr;

  DecoderConfig dc;
  dc.features = feature_preset(s.str("features"));
  if (dc.features.class_lm && !class_ptr) throw ConfigError("feature set '" + s.str("features") + "' needs --classes");
  dc.beam = s.count("beam");
  dc.nbest = s.count("tune_nbest");
  dc.nbest_factor = s.count("nbest_factor");
  dc.table_limit = s.count("table_limit");
  dc.osm_alphabet = alphabet_of(s);
  dc.sparse = sparse_of(s, class_ptr);
  dc.validate();

  TunerConfig tc;
  tc.optimizer = parse_optimizer(s.str("optimizer"));
  const std::string& metric = s.str("metric");
  if (metric == "m2") {
    tc.metric.kind = MetricKind::M2;
  } else if (metric == "bleu") {
    tc.metric.kind = MetricKind::Bleu;
  } else {
    throw ConfigError("metric must be m2 or bleu");
  }
  tc.metric.m2.beta = s.real("beta");
  tc.metric.m2.max_unchanged = s.count("max_unchanged");
  tc.metric.bleu_order = s.count("bleu_order");
  tc.iterations = s.count("iterations");
  tc.features = dc.features;
  tc.mert.random_directions = s.count("random_directions");
  tc.mira.decay = s.real("mira_decay");
  if (!(tc.mira.decay > 0.0 && tc.mira.decay <= 1.0)) throw ConfigError("mira_decay must be in (0, 1]");
  tc.mira.model_bg = s.boolean("mira_model_bg");
  tc.mira.c = s.real("mira_c");
  tc.mira.epochs = s.count("mira_epochs");
  tc.pro.samples = s.count("pro_samples");
  tc.pro.keep = s.count("pro_keep");
  if (tc.pro.keep > tc.pro.samples) throw ConfigError("pro_keep must not exceed pro_samples");
  tc.pro.min_diff = s.real("pro_min_diff");
  tc.pro.interpolation = s.real("pro_interpolation");

  TuningPlan plan;
  plan.folds = s.count("folds");
  plan.repetitions = s.count("repetitions");
  plan.seed = static_cast<std::uint64_t>(s.integer("seed"));
  plan.validate();

  SystemOptions so;
  so.tm.max_len = s.count("max_phrase_len");
  so.tm.model1.iterations = s.count("model1_iterations");
  so.tm.lexical_weights = s.boolean("lexical_weights");
  so.lm_order = s.count("lm_order");
  so.class_lm_order = s.count("class_lm_order");
  so.osm_order = s.count("osm_order");
  so.osm_alphabet = dc.osm_alphabet;
  const std::size_t jobs = jobs_of(s);

  const TrainFn train = [&](const Corpus& part) -> SystemFn {
    auto sys = std::make_shared<TrainedSystem>(
        train_system(part, mono, dc.features.class_lm ? class_ptr : nullptr, dc.features.osm, so));
    return [sys, &dc, jobs](const std::vector<Tokens>& sources, const WeightVec& w) {
      return decode_all(sources, sys->models(), w, dc, jobs);
    };
  };
  const CrossfoldResult result = crossfold_tune(corpus, plan, tc, train);

  write_file(s.str("weights_out"), save_weights(result.weights));
  if (s.has("log_out")) {
    std::string log;
    for (const auto& f : result.folds) {
      log += "# run " + std::to_string(f.run) + " fold " + std::to_string(f.fold) + "\n" + format_tune_log(f.log);
    }
    write_file(s.str("log_out"), log);
  }
  if (s.has("variance_out")) write_file(s.str("variance_out"), format_variance_tsv(result));
  char buf[160];
  std::snprintf(buf, sizeof(buf), "dev metric over %zu runs: min %.4f max %.4f mean %.4f stddev %.4f\n",
                result.run_metrics.size(), result.variance.min, result.variance.max, result.variance.mean,
                result.variance.stddev);
  out << buf;
  (void)err;
  return kExitOk;
}

int cmd_adapt(const Settings& s, std::ostream& out) {
  const Corpus corpus = load_m2(s.str("m2"));
  const double target = s.real("target_rate");
  if (!(target >= 0.0 && target <= 1.0)) throw ConfigError("target_rate must be in [0, 1]");
  AnnotatorPolicy policy = AnnotatorPolicy::any();
  if (s.str("annotator") != "any") policy = AnnotatorPolicy::single(static_cast<int>(s.integer("annotator")));
  const AdaptResult r = adapt_error_rate(corpus, target, policy);
  write_file(s.str("m2_out"), write_m2(r.corpus));
  char buf[200];
  std::snprintf(buf, sizeof(buf), "kept %zu of %zu sentences, error rate %.4f (%s %.4f)\n", r.kept.size(),
                corpus.size(), r.rate, r.reached ? "reached" : "could not reach", target);
  out << buf;
  return kExitOk;
}

int cmd_make_folds(const Settings& s, std::ostream& out) {
  const Corpus corpus = load_m2(s.str("m2"));
  const std::size_t k = s.count("folds");
  if (k < 2) throw ConfigError("folds must be at least 2");
  if (corpus.size() < k) throw ValidationError("corpus has fewer sentences than folds");
  const auto folds = fold_indices(corpus.size(), k, static_cast<std::uint64_t>(s.integer("seed")));
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> rest;
    for (std::size_t g = 0; g < k; ++g) {
      if (g != f) rest.insert(rest.end(), folds[g].begin(), folds[g].end());
    }
    std::sort(rest.begin(), rest.end());
    const std::string prefix = s.str("out_prefix") + std::to_string(f);
    write_file(prefix + ".dev.m2", write_m2(subset(corpus, folds[f])));
    write_file(prefix + ".train.m2", write_m2(subset(corpus, rest)));
    out << prefix << ".dev.m2\t" << folds[f].size() << '\n';
  }
  return kExitOk;
}

int cmd_filter_mono(const Settings& s, std::ostream& out) {
  const auto text = read_sentences(s.str("text"));
  const NGramModel in = NGramModel::load_arpa_file(s.str("in_domain"));
  const NGramModel gen = NGramModel::load_arpa_file(s.str("general"));
  const MooreLewisResult r = moore_lewis(text, in, gen);
  std::string kept;
  for (std::size_t i : r.kept) kept += join(text[i]) + "\n";
  write_output(s, "output", kept, out);
  if (s.has("scores_out")) {
    std::string scores;
    for (double v : r.scores) scores += format_double(v) + "\n";
    write_file(s.str("scores_out"), scores);
  }
  return kExitOk;
}

int cmd_report(const Settings& s, std::ostream& out) {
  const std::string& kind = s.str("report_kind");
  std::ostringstream rep;
  std::size_t line_no = 0;
  if (kind == "variance") {
    std::map<std::size_t, std::vector<double>> runs;
    std::vector<double> all;
    for (const auto& line : read_lines(s.str("log"))) {
      ++line_no;
      Tokens f = split_ws(line);
      if (f.empty() || f[0].front() == '#') continue;
      if (f.size() != 3) throw ParseError(line_no, "expected 'run<TAB>fold<TAB>dev_metric'");
      const double v = parse_double(f[2], line_no);
      runs[static_cast<std::size_t>(parse_int(f[0], line_no))].push_back(v);
      all.push_back(v);
    }
    rep << "run\tfolds\tmean_dev_metric\n";
    std::vector<double> means;
    for (const auto& [run, values] : runs) {
      const VarianceSummary v = summarize(values);
      means.push_back(v.mean);
      rep << run << '\t' << values.size() << '\t' << format_double(v.mean) << '\n';
    }
    const VarianceSummary v = summarize(means);
    rep << "min\t" << format_double(v.min) << "\nmax\t" << format_double(v.max) << "\nmean\t"
        << format_double(v.mean) << "\nstddev\t" << format_double(v.stddev) << '\n';
  } else if (kind == "log") {
    rep << "run\tfold\titer\tmetric\tpool_size\n";
    std::string run = "0", fold = "0";
    for (const auto& line : read_lines(s.str("log"))) {
      ++line_no;
      Tokens f = split_ws(line);
      if (f.empty()) continue;
      if (f[0] == "#") {
        if (f.size() == 5) {
          run = f[2];
          fold = f[4];
        }
        continue;
      }
      if (f.size() != 3) throw ParseError(line_no, "expected 'iter<TAB>metric<TAB>pool_size'");
      parse_int(f[0], line_no);
      parse_double(f[1], line_no);
      parse_int(f[2], line_no);
      rep << run << '\t' << fold << '\t' << f[0] << '\t' << f[1] << '\t' << f[2] << '\n';
    }
  } else {
    throw ConfigError("report_kind must be variance or log");
  }
  write_output(s, "output", rep.str(), out);
  return kExitOk;
}

int cmd_make_toy(const Settings& s, std::ostream& out) {
  ToyOptions o;
  o.train = s.count("toy_train");
  o.dev = s.count("toy_dev");
  o.test = s.count("toy_test");
  o.mono = s.count("toy_mono");
  o.error_prob = s.real("error_prob");
  o.seed = static_cast<std::uint64_t>(s.integer("seed"));
  const ToyData d = make_toy(o);
  const fs::path dir(s.str("out_dir"));
  fs::create_directories(dir);
  write_file((dir / "train.m2").string(), write_m2(d.train));
  write_file((dir / "dev.m2").string(), write_m2(d.dev));
  write_file((dir / "test.m2").string(), write_m2(d.test));
  std::string mono;
  for (const auto& t : d.mono) mono += join(t) + "\n";
  write_file((dir / "mono.txt").string(), mono);
  write_file((dir / "classes.tsv").string(), d.classes.save());
  out << "wrote toy corpus to " << dir.string() << '\n';
  return kExitOk;
}

int dispatch(std::string_view name, const Settings& s, std::ostream& out, std::ostream& err) {
  if (name == "score") return cmd_score(s, out);
  if (name == "bleu") return cmd_bleu(s, out);
  if (name == "train-lm") return cmd_train_lm(s, out);
  if (name == "train-tm") return cmd_train_tm(s, out);
  if (name == "decode") return cmd_decode(s, out);
  if (name == "tune") return cmd_tune(s, out, err);
  if (name == "adapt-devset") return cmd_adapt(s, out);
  if (name == "make-folds") return cmd_make_folds(s, out);
  if (name == "filter-mono") return cmd_filter_mono(s, out);
  if (name == "report") return cmd_report(s, out);
  if (name == "make-toy") return cmd_make_toy(s, out);
  throw UsageError("unknown command '" + std::string(name) + "'");
}

}  // namespace

std::vector<std::string> known_keys() {
  std::vector<std::string> keys;
  for (const auto& k : kKeys) keys.emplace_back(k.name);
  return keys;
}

std::map<std::string, std::string> parse_config(std::string_view text) {
  std::map<std::string, std::string> values;
  std::size_t line_no = 0;
  for (const auto& raw : split_on(text, "\n")) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!find_key(key)) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (!values.emplace(key, value).second) {
      throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    }
  }
  return values;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistical grammatical error correction toolkit", "gectune"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "show help for every command");

  struct Parsed {
    std::string config;
    std::map<std::string, std::string> flags;
  };
  std::map<std::string, Parsed> parsed;
  std::map<std::string, CLI::App*> subs;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(std::string(cmd.name), std::string(cmd.help));
    auto& p = parsed[std::string(cmd.name)];
    sub->add_option("--config", p.config, "file of 'key = value' settings");
    for (auto key : cmd.keys) {
      const KeySpec* spec = find_key(key);
      std::string help(spec->help);
      if (!spec->def.empty()) help += " [" + std::string(spec->def) + "]";
      sub->add_option_function<std::string>(
          flag_of(key), [&p, key](const std::string& v) { p.flags[std::string(key)] = v; }, help);
    }
    subs[std::string(cmd.name)] = sub;
  }

  std::vector<const char*> argv{"gectune"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const Command* cmd = nullptr;
  for (const auto& c : commands()) {
    if (subs[std::string(c.name)]->parsed()) cmd = &c;
  }
  const Parsed& p = parsed[std::string(cmd->name)];

  std::map<std::string, std::string> values;
  try {
    for (auto key : cmd->keys) values[std::string(key)] = std::string(find_key(key)->def);
    if (!p.config.empty()) {
      if (!fs::is_regular_file(p.config)) throw UsageError("config: no such file '" + p.config + "'");
      for (const auto& [k, v] : parse_config(read_file(p.config))) {
        // Settings of other commands may share one config file.
        if (values.count(k)) values[k] = v;
      }
    }
    for (const auto& [k, v] : p.flags) values[k] = v;

    err << "# effective configuration for " << cmd->name << '\n';
    for (auto key : cmd->keys) err << key << " = " << values[std::string(key)] << '\n';

    const Settings settings(values);
    validate_settings(*cmd, settings);
    return dispatch(cmd->name, settings, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace gectune::cli
