#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/embed.h"
#include "kbanon/eval.h"
#include "kbanon/extract.h"
#include "kbanon/generalize.h"
#include "kbanon/scoring.h"
#include "kbanon/select.h"

#include "json.hpp"

namespace kbanon {

struct RetrievalConfig {
  std::size_t k = 5;
  Metric metric = Metric::kL2;
};

struct PipelineConfig {
  Weights weights;
  double tau = 0.6237;
  EmbedderSpec embedder;
  ExtractorSpec extractor;
  PrivacyScorerSpec privacy_scorer;
  std::optional<std::string> map_path;  // built-in table when absent
  RetrievalConfig retrieval;
  OptimizeParams optimize;
  std::uint64_t seed = 42;
  std::size_t workers = 1;

  // Throws ConfigError on any violated invariant (NaN tau, k == 0, missing
  // files, bad weights, incomplete backend specs).
  void validate() const;
  nlohmann::json to_json() const;
};

// Parses a config document. Relative paths resolve against `base_dir`.
// Unknown keys at any level are rejected. tau accepts a number or one of the
// strings "inf", "+inf", "-inf".
PipelineConfig parse_config(const nlohmann::json& j, const std::string& base_dir = ".");
PipelineConfig load_config(const std::string& path);

// Instantiated backends shared (read-only) by all workers.
struct Backends {
  std::shared_ptr<const Embedder> embedder;
  std::shared_ptr<const EntityExtractor> extractor;
  std::shared_ptr<const PrivacyScorer> scorer;
  GeneralizationMap map;

  static Backends from_config(const PipelineConfig& config);
};

struct DocOutcome {
  std::optional<Document> scored;  // empty on failure
  std::string error;
};

// Extracts entities (replacing any already attached) and scores them.
Document prepare_document(Document doc, const Backends& backends, const Weights& weights);

// prepare_document over the corpus on a bounded worker pool. Output order
// matches input order; failures are captured per document.
std::vector<DocOutcome> score_corpus(const Corpus& corpus, const Backends& backends,
                                     const Weights& weights, std::size_t workers);

struct DocSummary {
  std::string id;
  std::size_t n_entities = 0;
  std::size_t n_generalized = 0;
  double mean_psi = 0.0;
  double entropy_bits = 0.0;
  std::string error;
};

struct PipelineSummary {
  std::vector<DocSummary> docs;
  std::size_t failures = 0;
  double tau = 0.0;

  nlohmann::json to_json() const;
};

struct PipelineResult {
  AnonymizedCorpus anonymized;
  PipelineSummary summary;
};

// Threshold selection + generalization of already-scored documents. Failed
// documents are reported in the summary and left out of the output.
PipelineResult anonymize_scored(const std::vector<DocOutcome>& outcomes, double tau,
                                const GeneralizationMap& map, const OptimizeParams& optimize);

PipelineResult run_pipeline(const PipelineConfig& config, const Corpus& corpus,
                            const Backends& backends);

// Loads `corpus_path`, anonymizes it and writes the JSONL result to
// `out_path`.
PipelineResult run_pipeline(const PipelineConfig& config, const std::string& corpus_path,
                            const std::string& out_path,
                            const std::string& text_field = "text",
                            const std::optional<std::string>& id_field = "id");

enum class BaselineKind { kOrigin, kRedact };

BaselineKind parse_baseline(const std::string& name);

// origin: passthrough. redact: every extracted entity generalized.
AnonymizedCorpus run_baseline(BaselineKind kind, const Corpus& corpus,
                              const Backends& backends);

// Calibration file records: {"id": ..., "critical": [entity index, ...]}.
struct CalibrationRecord {
  std::string id;
  std::set<std::size_t> critical;
};

std::vector<CalibrationRecord> load_calibration(const std::string& path);
void write_calibration(const std::vector<CalibrationRecord>& records, const std::string& path);

// Pairs records with scored documents by id. Throws if an id is unknown.
std::vector<CalibrationSample> calibration_samples(const std::vector<CalibrationRecord>& records,
                                                   const std::vector<DocOutcome>& scored);

}  // namespace kbanon
