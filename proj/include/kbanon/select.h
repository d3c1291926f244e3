#pragma once

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/scoring.h"

#include "json.hpp"

namespace kbanon {

// x_e = 0 for indices in generalize_set, x_e = 1 for keep_set.
struct Selection {
  std::string doc_id;
  std::set<std::size_t> generalize_set;
  std::set<std::size_t> keep_set;
  double tau_used = 0.0;

  friend bool operator==(const Selection&, const Selection&) = default;
};

struct CalibrationSample {
  Document doc;  // scored
  std::set<std::size_t> critical_indices;
};

struct KnapsackInstance {
  std::vector<double> utilities;
  std::vector<double> risks;
  double b_priv = 0.5;
  double eta = 8.0;
  int min_delta = 16;

  void validate() const;
};

struct OptimizeParams {
  double b_priv = 0.5;
  double eta = 8.0;
  int min_delta = 16;
};

// Largest instance exact_select will enumerate.
inline constexpr std::size_t kMaxExactEntities = 22;

struct ExactResult {
  bool feasible = false;
  Selection selection;
  double utility = 0.0;
};

// beta * s_retr + gamma * s_knw
double utility_contribution(const ScoreVector& s, const Weights& w);

// Sum of utility_contribution over sel.keep_set.
double total_utility(const Document& doc, const Selection& sel, const Weights& w);

// Generalizes every entity with psi > tau (strict).
Selection select_by_threshold(const Document& doc, double tau);

// Generalizes every entity.
Selection select_all(const Document& doc);

// min psi over all critical entities, minus margin.
double calibrate_threshold(std::span<const CalibrationSample> samples, double margin);

// Exhaustive search over all 2^n keep/generalize assignments. Maximizes the
// kept utility subject to sum(kept risk) <= b_priv and
// |generalized| * log2(min_delta) >= eta. Ties prefer fewer generalized
// entities, then the lexicographically smallest kept index list.
ExactResult exact_select(const KnapsackInstance& inst);

// Builds the knapsack view of a scored document.
KnapsackInstance knapsack_from_document(const Document& doc, const Weights& w,
                                        const OptimizeParams& params);

// Whether `sel` satisfies the knapsack constraints of `inst`.
struct ConstraintCheck {
  bool budget_ok = true;
  bool entropy_ok = true;
  bool ok() const { return budget_ok && entropy_ok; }
};
ConstraintCheck check_constraints(const KnapsackInstance& inst, const Selection& sel);

struct GapEntry {
  std::string doc_id;
  std::size_t n_entities = 0;
  double greedy_utility = 0.0;
  double exact_utility = 0.0;
  double ratio = 1.0;  // greedy / exact
  bool greedy_feasible = true;
  bool budget_violation = false;
  bool entropy_violation = false;
  bool exact_feasible = true;
  bool skipped = false;  // too many entities for exhaustive search
};

struct GapReport {
  std::vector<GapEntry> entries;
  double mean_ratio = 1.0;  // over entries where both sides are feasible
  double min_ratio = 1.0;
  std::size_t compared = 0;
  std::size_t greedy_infeasible = 0;
  std::size_t exact_infeasible = 0;
  std::size_t skipped = 0;

  nlohmann::json to_json() const;
};

// Compares threshold selection against the exact optimum per document.
GapReport greedy_gap_report(std::span<const Document> docs, double tau, const Weights& w,
                            const OptimizeParams& params);

struct EntropyBound {
  double sum_bits = 0.0;         // sum log2(size_i)
  double simplified_bits = 0.0;  // |E_G| * log2(min size)
};

// Residual entropy of the generalized slots. Every class size must be >= 2.
EntropyBound entropy_lower_bound(std::span<const int> class_sizes);

}  // namespace kbanon
