#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/eval.h"
#include "kbanon/extract.h"
#include "kbanon/pipeline.h"

namespace kbanon {

struct SynthSpec {
  std::size_t n_docs = 200;
  std::size_t min_entities = 3;
  std::size_t max_entities = 8;
  std::map<std::string, double> label_mix = default_label_mix();
  std::uint64_t seed = 42;
  std::size_t vocab_size = 400;  // pool of per-document distinctive words

  // Throws InvalidArgument: probabilities must be >= 0 and sum to 1 +- 1e-9,
  // labels must be ones the generator can plant, ranges must be sane.
  void validate() const;

  static std::map<std::string, double> default_label_mix();
  static std::vector<std::string> supported_labels();
};

struct SynthCorpus {
  Corpus corpus;                            // texts only, no entities attached
  std::vector<std::vector<Entity>> annotations;  // ground truth, aligned with corpus.docs
  Lexicon lexicon;                          // every planted surface -> label
  std::vector<std::string> queries;         // retrieval queries
  std::vector<AttackQuery> attacks;         // extraction attacks on direct identifiers
  std::vector<CalibrationRecord> calibration;  // direct identifiers per document
};

// Deterministic for a given spec. n_docs == 0 yields empty outputs. The result
// is checked for closed-world extraction: the reference extractor built from
// the emitted lexicon recovers exactly the annotations.
SynthCorpus generate_corpus(const SynthSpec& spec);

// Writes corpus.jsonl, annotations.jsonl, lexicon.json, queries.jsonl,
// attacks.jsonl and calibration.jsonl into `dir` (created if missing).
void write_synth(const SynthCorpus& synth, const std::string& dir);

}  // namespace kbanon
