#pragma once

#include <cstdint>
#include <vector>

#include "gectune/common.hpp"
#include "gectune/corpus.hpp"
#include "gectune/ngram.hpp"

namespace gectune {

struct ToyOptions {
  std::size_t train = 2000;
  std::size_t dev = 200;
  std::size_t test = 200;
  std::size_t mono = 2000;  // extra clean sentences for language models
  double error_prob = 0.25; // chance of corrupting each eligible slot
  std::uint64_t seed = 1;
};

/// Synthetic learner corpus: sentences from a small agreement grammar with
/// planted article and subject-verb agreement errors, annotated with the
/// gold edits that undo them.
struct ToyData {
  Corpus train, dev, test;
  std::vector<Tokens> mono;
  ClassMap classes;  // part-of-speech-like word classes
};

ToyData make_toy(const ToyOptions& options);

}  // namespace gectune
