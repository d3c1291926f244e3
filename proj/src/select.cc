#include "kbanon/select.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include "kbanon/error.h"

namespace kbanon {

namespace {

const ScoreVector& scores_of(const Document& doc, std::size_t i) {
  if (i >= doc.entities.size()) {
    throw InvalidArgument("entity index " + std::to_string(i) + " out of range for '" +
                          doc.id + "'");
  }
  const auto& s = doc.entities[i].scores;
  if (!s) {
    throw InvalidArgument("entity " + std::to_string(i) + " of '" + doc.id +
                          "' has not been scored");
  }
  return *s;
}

bool entropy_satisfied(std::size_t generalized, double eta, int min_delta) {
  return static_cast<double>(generalized) * std::log2(static_cast<double>(min_delta)) >= eta;
}

}  // namespace

void KnapsackInstance::validate() const {
  if (utilities.size() != risks.size()) {
    throw InvalidArgument("utilities and risks differ in length");
  }
  for (double u : utilities) {
    if (!std::isfinite(u) || u < 0.0) throw InvalidArgument("utilities must be finite and >= 0");
  }
  for (double r : risks) {
    if (!std::isfinite(r)) throw InvalidArgument("risks must be finite");
  }
  if (!std::isfinite(b_priv) || b_priv < 0.0) throw InvalidArgument("b_priv must be >= 0");
  if (!std::isfinite(eta) || eta < 0.0) throw InvalidArgument("eta must be >= 0");
  if (min_delta < 2) throw InvalidArgument("min_delta must be >= 2");
}

double utility_contribution(const ScoreVector& s, const Weights& w) {
  return w.beta * s.s_retr + w.gamma * s.s_knw;
}

double total_utility(const Document& doc, const Selection& sel, const Weights& w) {
  double total = 0.0;
  for (std::size_t i : sel.keep_set) total += utility_contribution(scores_of(doc, i), w);
  return total;
}

Selection select_by_threshold(const Document& doc, double tau) {
  Selection sel;
  sel.doc_id = doc.id;
  sel.tau_used = tau;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) {
    if (scores_of(doc, i).psi > tau) {
      sel.generalize_set.insert(i);
    } else {
      sel.keep_set.insert(i);
    }
  }
  return sel;
}

Selection select_all(const Document& doc) {
  Selection sel;
  sel.doc_id = doc.id;
  sel.tau_used = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < doc.entities.size(); ++i) sel.generalize_set.insert(i);
  return sel;
}

double calibrate_threshold(std::span<const CalibrationSample> samples, double margin) {
  if (!std::isfinite(margin) || margin < 0.0) {
    throw InvalidArgument("calibration margin must be finite and >= 0");
  }
  double lowest = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& sample : samples) {
    for (std::size_t i : sample.critical_indices) {
      lowest = std::min(lowest, scores_of(sample.doc, i).psi);
      any = true;
    }
  }
  if (!any) throw InvalidArgument("no calibration signal");
  return lowest - margin;
}

ExactResult exact_select(const KnapsackInstance& inst) {
  inst.validate();
  const std::size_t n = inst.utilities.size();
  if (n > kMaxExactEntities) {
    throw InvalidArgument("exact_select supports at most " +
                          std::to_string(kMaxExactEntities) + " entities (got " +
                          std::to_string(n) + "); use threshold selection instead");
  }

  bool found = false;
  std::uint32_t best_mask = 0;
  double best_utility = 0.0;
  int best_kept = -1;

  // Lexicographic order of the kept index lists of two masks.
  auto kept_lex_less = [n](std::uint32_t a, std::uint32_t b) {
    std::size_t ia = 0, ib = 0;
    while (true) {
      while (ia < n && !(a >> ia & 1U)) ++ia;
      while (ib < n && !(b >> ib & 1U)) ++ib;
      if (ia == n || ib == n) return ia == n && ib != n;
      if (ia != ib) return ia < ib;
      ++ia;
      ++ib;
    }
  };

  const std::uint32_t limit = n == 0 ? 1U : (1U << n);
  for (std::uint32_t mask = 0; mask < limit; ++mask) {
    double risk = 0.0, utility = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        risk += inst.risks[i];
        utility += inst.utilities[i];
      }
    }
    const int kept = std::popcount(mask);
    if (risk > inst.b_priv) continue;
    if (!entropy_satisfied(n - static_cast<std::size_t>(kept), inst.eta, inst.min_delta)) {
      continue;
    }
    bool better = !found || utility > best_utility;
    if (found && utility == best_utility) {
      better = kept > best_kept || (kept == best_kept && kept_lex_less(mask, best_mask));
    }
    if (better) {
      found = true;
      best_mask = mask;
      best_utility = utility;
      best_kept = kept;
    }
  }

  ExactResult result;
  result.feasible = found;
  if (!found) return result;
  result.utility = best_utility;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask >> i & 1U) {
      result.selection.keep_set.insert(i);
    } else {
      result.selection.generalize_set.insert(i);
    }
  }
  return result;
}

KnapsackInstance knapsack_from_document(const Document& doc, const Weights& w,
                                        const OptimizeParams& params) {
  KnapsackInstance inst;
  inst.b_priv = params.b_priv;
  inst.eta = params.eta;
  inst.min_delta = params.min_delta;
  for (std::size_t i = 0; i < doc.entities.size(); ++i) {
    const auto& s = scores_of(doc, i);
    inst.utilities.push_back(utility_contribution(s, w));
    inst.risks.push_back(s.s_priv);
  }
  return inst;
}

ConstraintCheck check_constraints(const KnapsackInstance& inst, const Selection& sel) {
  ConstraintCheck c;
  double risk = 0.0;
  for (std::size_t i : sel.keep_set) risk += inst.risks.at(i);
  c.budget_ok = risk <= inst.b_priv;
  c.entropy_ok = entropy_satisfied(sel.generalize_set.size(), inst.eta, inst.min_delta);
  return c;
}

GapReport greedy_gap_report(std::span<const Document> docs, double tau, const Weights& w,
                            const OptimizeParams& params) {
  GapReport report;
  double ratio_sum = 0.0;
  for (const auto& doc : docs) {
    GapEntry entry;
    entry.doc_id = doc.id;
    entry.n_entities = doc.entities.size();
    if (doc.entities.empty()) {
      entry.ratio = 1.0;
    } else if (doc.entities.size() > kMaxExactEntities) {
      entry.skipped = true;
      ++report.skipped;
      report.entries.push_back(std::move(entry));
      continue;
    } else {
      const auto inst = knapsack_from_document(doc, w, params);
      const auto greedy = select_by_threshold(doc, tau);
      const auto check = check_constraints(inst, greedy);
      entry.greedy_utility = total_utility(doc, greedy, w);
      entry.budget_violation = !check.budget_ok;
      entry.entropy_violation = !check.entropy_ok;
      entry.greedy_feasible = check.ok();

      const auto exact = exact_select(inst);
      entry.exact_feasible = exact.feasible;
      entry.exact_utility = exact.utility;
      if (!exact.feasible) {
        entry.ratio = 0.0;
      } else if (exact.utility > 0.0) {
        entry.ratio = entry.greedy_utility / exact.utility;
      } else {
        entry.ratio = entry.greedy_utility == 0.0 ? 1.0 : 0.0;
      }
    }
    if (!entry.exact_feasible) ++report.exact_infeasible;
    if (!entry.greedy_feasible) ++report.greedy_infeasible;
    if (entry.exact_feasible && entry.greedy_feasible) {
      if (report.compared == 0 || entry.ratio < report.min_ratio) report.min_ratio = entry.ratio;
      ratio_sum += entry.ratio;
      ++report.compared;
    }
    report.entries.push_back(std::move(entry));
  }
  report.mean_ratio = report.compared == 0 ? 1.0 : ratio_sum / static_cast<double>(report.compared);
  return report;
}

nlohmann::json GapReport::to_json() const {
  nlohmann::json docs = nlohmann::json::array();
  for (const auto& e : entries) {
    docs.push_back({{"id", e.doc_id},
                    {"n_entities", e.n_entities},
                    {"greedy_utility", e.greedy_utility},
                    {"exact_utility", e.exact_utility},
                    {"ratio", e.ratio},
                    {"greedy_feasible", e.greedy_feasible},
                    {"budget_violation", e.budget_violation},
                    {"entropy_violation", e.entropy_violation},
                    {"exact_feasible", e.exact_feasible},
                    {"skipped", e.skipped}});
  }
  return {{"docs", std::move(docs)},
          {"mean_ratio", mean_ratio},
          {"min_ratio", min_ratio},
          {"compared", compared},
          {"greedy_infeasible", greedy_infeasible},
          {"exact_infeasible", exact_infeasible},
          {"skipped", skipped}};
}

EntropyBound entropy_lower_bound(std::span<const int> class_sizes) {
  EntropyBound bound;
  if (class_sizes.empty()) return bound;
  int smallest = std::numeric_limits<int>::max();
  for (int size : class_sizes) {
    if (size < 2) {
      throw InvalidArgument("generalization class of size " + std::to_string(size) +
                            " hides nothing; sizes must be >= 2");
    }
    smallest = std::min(smallest, size);
    bound.sum_bits += std::log2(static_cast<double>(size));
  }
  // Repeated addition keeps the comparison exact under rounding: floating
  // addition is monotone in each operand.
  const double per_slot = std::log2(static_cast<double>(smallest));
  for (std::size_t i = 0; i < class_sizes.size(); ++i) bound.simplified_bits += per_slot;
  if (bound.sum_bits < bound.simplified_bits) {
    throw std::logic_error("entropy bound violated: sum form below simplified form");
  }
  return bound;
}

}  // namespace kbanon
