#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/embed.h"
#include "kbanon/eval.h"
#include "kbanon/generalize.h"
#include "kbanon/pipeline.h"
#include "kbanon/scoring.h"
#include "kbanon/select.h"

#include "json.hpp"

namespace kbanon {

// Evaluates anonymized variants of one original corpus. The original index
// and the query embeddings are computed once at construction.
class Evaluator {
 public:
  Evaluator(Corpus orig, std::vector<std::string> queries, std::vector<AttackQuery> attacks,
            std::shared_ptr<const Embedder> embedder, Metric metric,
            std::vector<std::size_t> ks = {1, 5, 10}, std::size_t leakage_k = 5);

  // Recall@k for every configured k, BLEU / ROUGE-L of anonymized against
  // original text, and the leakage rate when attack queries were given.
  // Throws InvalidArgument when `anon` does not cover the same document ids.
  EvalReport evaluate(const AnonymizedCorpus& anon) const;

  const Corpus& original() const { return orig_; }
  const VectorIndex& original_index() const { return orig_index_; }

 private:
  Corpus orig_;
  std::vector<std::string> queries_;
  std::vector<Vector> query_vectors_;
  std::vector<AttackQuery> attacks_;
  std::shared_ptr<const Embedder> embedder_;
  Metric metric_;
  std::vector<std::size_t> ks_;
  std::size_t leakage_k_;
  VectorIndex orig_index_;
};

enum class TauPolicy { kFixed, kCalibrate };

TauPolicy parse_tau_policy(const std::string& name);
std::string tau_policy_name(TauPolicy p);

struct SweepSpec {
  std::vector<double> betas{0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
  std::vector<double> gammas{0.2, 0.4, 0.5, 0.6, 0.8, 1.0};
  double alpha = 1.0;
  TauPolicy tau_policy = TauPolicy::kFixed;
  double tau = 0.6237;                        // used by kFixed
  std::vector<CalibrationRecord> calibration;  // used by kCalibrate
  double margin = 0.01;

  void validate() const;
};

// {"beta": [...], "gamma": [...], "alpha": 1, "tau_policy": "fixed",
//  "tau": 0.5, "margin": 0.01}; every key optional. Calibration records are
// attached separately.
SweepSpec parse_sweep_spec(const nlohmann::json& j);

struct SweepCell {
  double beta = 0.0;
  double gamma = 0.0;
  double tau = 0.0;
  std::size_t n_generalized = 0;
  std::optional<EvalReport> report;  // empty when the cell failed
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // beta-major grid order
  double alpha = 1.0;
  std::optional<double> spearman_weight_recall;  // rho(beta + gamma, Recall@5)
  std::string spearman_error;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

// Anonymizes already-scored documents under each (beta, gamma) cell and
// evaluates the result. Scores are reused across cells; only psi and the
// threshold change. Cells run on up to `workers` threads; a failing cell is
// recorded without aborting the grid.
SweepResult sweep(const std::vector<DocOutcome>& scored, const SweepSpec& spec,
                  const GeneralizationMap& map, const OptimizeParams& optimize,
                  const Evaluator& evaluator, std::size_t workers = 1);

}  // namespace kbanon
