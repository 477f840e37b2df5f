#include "gectune/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "gectune/metric.hpp"

namespace gectune {

std::size_t resolve_jobs(std::size_t requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::min(std::max<std::size_t>(jobs, 1), n);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<SentencePair> parallel_pairs(const Corpus& corpus) {
  std::vector<SentencePair> pairs;
  pairs.reserve(corpus.size());
  for (const auto& s : corpus.sentences) pairs.push_back({s.source, corrected(s, annotator_ids(s).front())});
  return pairs;
}

Models TrainedSystem::models() const {
  Models m;
  m.table = &table;
  m.lm = &lm;
  m.class_lm = class_lm ? &*class_lm : nullptr;
  m.classes = classes ? &*classes : nullptr;
  m.osm = osm ? &*osm : nullptr;
  return m;
}

TrainedSystem train_system(const Corpus& train, const std::vector<Tokens>& mono, const ClassMap* classes,
                           bool with_osm, const SystemOptions& options) {
  const auto pairs = parallel_pairs(train);
  TrainedSystem sys;
  sys.table = train_translation_model(pairs, options.tm);

  std::vector<Tokens> text;
  text.reserve(pairs.size() + mono.size());
  for (const auto& p : pairs) text.push_back(p.tgt);
  text.insert(text.end(), mono.begin(), mono.end());
  sys.lm = NGramModel::train(text, {options.lm_order, 0});

  if (classes) {
    std::vector<Tokens> class_text;
    class_text.reserve(text.size());
    for (const auto& t : text) class_text.push_back(project_classes(t, *classes));
    sys.class_lm = NGramModel::train(class_text, {options.class_lm_order, 0});
    sys.classes = *classes;
  }
  if (with_osm) {
    std::vector<Tokens> ops;
    ops.reserve(pairs.size());
    for (const auto& p : pairs) ops.push_back(op_sequence(p.src, p.tgt, options.osm_alphabet));
    sys.osm = NGramModel::train(ops, {options.osm_order, 0});
  }
  return sys;
}

std::vector<NBest> decode_all(const std::vector<Tokens>& sources, const Models& models, const WeightVec& weights,
                              const DecoderConfig& config, std::size_t jobs) {
  std::vector<NBest> out(sources.size());
  parallel_for(sources.size(), jobs, [&](std::size_t i) { out[i] = decode(sources[i], models, weights, config); });
  return out;
}

}  // namespace gectune
