#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "gectune/common.hpp"
#include "gectune/corpus.hpp"
#include "gectune/decoder.hpp"
#include "gectune/ngram.hpp"
#include "gectune/phrasetable.hpp"

namespace gectune {

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. The first exception
/// thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

/// Worker count: `requested` if positive, else the hardware concurrency.
std::size_t resolve_jobs(std::size_t requested);

/// Source / first-annotator corrected pairs of an annotated corpus.
std::vector<SentencePair> parallel_pairs(const Corpus& corpus);

struct SystemOptions {
  TmTrainOptions tm;
  std::size_t lm_order = 5;
  std::size_t class_lm_order = 9;
  std::size_t osm_order = 5;
  OpAlphabet osm_alphabet = OpAlphabet::Plain;
};

/// Every model a decoder may need, trained from one parallel corpus plus
/// optional extra monolingual text.
struct TrainedSystem {
  PhraseTable table;
  NGramModel lm;
  std::optional<NGramModel> class_lm;
  std::optional<ClassMap> classes;
  std::optional<NGramModel> osm;

  Models models() const;
};

/// Trains the translation model and a word LM (targets plus `mono`). The
/// class LM is built when `classes` is given; the OSM when `with_osm`.
TrainedSystem train_system(const Corpus& train, const std::vector<Tokens>& mono, const ClassMap* classes,
                           bool with_osm, const SystemOptions& options = {});

/// Decodes every sentence, preserving input order.
std::vector<NBest> decode_all(const std::vector<Tokens>& sources, const Models& models, const WeightVec& weights,
                              const DecoderConfig& config, std::size_t jobs = 1);

}  // namespace gectune
