#include "kbanon/harness.h"

#include <atomic>
#include <cmath>
#include <iomanip>
#include <set>
#include <sstream>
#include <thread>

#include "kbanon/error.h"

namespace kbanon {

using nlohmann::json;

namespace {

constexpr const char* kLeakageNote =
    "leakage_rate counts sensitive surfaces in retrieved contexts; no answers are generated";
constexpr const char* kUtilityNote =
    "bleu and rouge_l compare anonymized document text with the original text";

}  // namespace

Evaluator::Evaluator(Corpus orig, std::vector<std::string> queries,
                     std::vector<AttackQuery> attacks, std::shared_ptr<const Embedder> embedder,
                     Metric metric, std::vector<std::size_t> ks, std::size_t leakage_k)
    : orig_(std::move(orig)),
      queries_(std::move(queries)),
      attacks_(std::move(attacks)),
      embedder_(std::move(embedder)),
      metric_(metric),
      ks_(std::move(ks)),
      leakage_k_(leakage_k),
      orig_index_(build_index(orig_, *embedder_, metric_)) {
  if (ks_.empty()) throw InvalidArgument("at least one k is required");
  for (std::size_t k : ks_) {
    if (k == 0) throw InvalidArgument("k must be >= 1");
  }
  if (leakage_k_ == 0) throw InvalidArgument("leakage k must be >= 1");
  if (!queries_.empty()) query_vectors_ = embedder_->embed(queries_);
}

EvalReport Evaluator::evaluate(const AnonymizedCorpus& anon) const {
  EvalReport report;
  const auto anon_index = build_index(anon, *embedder_, metric_);
  for (std::size_t k : ks_) {
    report.recall_at_k[static_cast<int>(k)] =
        query_vectors_.empty() ? 1.0 : recall_at_k(orig_index_, anon_index, query_vectors_, k);
  }
  const auto utility = text_utility(orig_, anon);
  report.bleu = utility.bleu;
  report.rouge_l = utility.rouge_l;
  report.notes.push_back(kUtilityNote);
  if (!attacks_.empty()) {
    std::map<std::string, std::string> texts;
    for (const auto& d : anon.docs) texts.emplace(d.id, d.text);
    report.leakage_rate = leakage_rate(anon_index, attacks_, leakage_k_, *embedder_, texts);
    report.notes.push_back(kLeakageNote);
  }
  report.config = {{"metric", metric_name(metric_)},
                   {"queries", queries_.size()},
                   {"attacks", attacks_.size()},
                   {"leakage_k", leakage_k_}};
  return report;
}

TauPolicy parse_tau_policy(const std::string& name) {
  if (name == "fixed") return TauPolicy::kFixed;
  if (name == "calibrate") return TauPolicy::kCalibrate;
  throw ConfigError("tau_policy must be 'fixed' or 'calibrate', got '" + name + "'");
}

std::string tau_policy_name(TauPolicy p) {
  return p == TauPolicy::kCalibrate ? "calibrate" : "fixed";
}

void SweepSpec::validate() const {
  if (betas.empty() || gammas.empty()) throw ConfigError("sweep grid must be non-empty");
  for (double v : betas) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("beta values must be finite and >= 0");
  }
  for (double v : gammas) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("gamma values must be finite and >= 0");
  }
  if (!std::isfinite(alpha) || alpha < 0.0) throw ConfigError("alpha must be finite and >= 0");
  if (tau_policy == TauPolicy::kFixed && std::isnan(tau)) throw ConfigError("tau is NaN");
  if (tau_policy == TauPolicy::kCalibrate && (!std::isfinite(margin) || margin < 0.0)) {
    throw ConfigError("margin must be finite and >= 0");
  }
}

SweepSpec parse_sweep_spec(const json& j) {
  if (!j.is_object()) throw ConfigError("sweep grid must be a JSON object");
  SweepSpec spec;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "beta") spec.betas = value.get<std::vector<double>>();
      else if (key == "gamma") spec.gammas = value.get<std::vector<double>>();
      else if (key == "alpha") spec.alpha = value.get<double>();
      else if (key == "tau_policy") spec.tau_policy = parse_tau_policy(value.get<std::string>());
      else if (key == "tau") spec.tau = value.get<double>();
      else if (key == "margin") spec.margin = value.get<double>();
      else throw ConfigError("unknown key '" + key + "' in sweep grid");
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("invalid sweep grid value: ") + ex.what());
  }
  spec.validate();
  return spec;
}

json SweepResult::to_json() const {
  json cells_j = json::array();
  for (const auto& c : cells) {
    json item{{"alpha", alpha},
              {"beta", c.beta},
              {"gamma", c.gamma},
              {"tau", c.tau},
              {"n_generalized", c.n_generalized}};
    if (c.report) {
      item["report"] = c.report->to_json();
    } else {
      item["error"] = c.error;
    }
    cells_j.push_back(std::move(item));
  }
  json j{{"cells", std::move(cells_j)}, {"alpha", alpha}};
  if (spearman_weight_recall) {
    j["spearman_weight_sum_vs_recall_at_5"] = *spearman_weight_recall;
  } else {
    j["spearman_error"] = spearman_error;
  }
  return j;
}

std::string SweepResult::to_csv() const {
  std::set<int> ks;
  for (const auto& c : cells) {
    if (c.report) {
      for (const auto& [k, v] : c.report->recall_at_k) ks.insert(k);
    }
  }
  std::ostringstream out;
  out << std::setprecision(10);
  out << "alpha,beta,gamma,tau,n_generalized";
  for (int k : ks) out << ",recall_at_" << k;
  out << ",bleu,rouge_l,leakage_rate,error\n";
  for (const auto& c : cells) {
    out << alpha << ',' << c.beta << ',' << c.gamma << ',' << c.tau << ',' << c.n_generalized;
    for (int k : ks) {
      out << ',';
      if (c.report && c.report->recall_at_k.contains(k)) out << c.report->recall_at_k.at(k);
    }
    out << ',';
    if (c.report) out << c.report->bleu;
    out << ',';
    if (c.report) out << c.report->rouge_l;
    out << ',';
    if (c.report && c.report->leakage_rate) out << *c.report->leakage_rate;
    out << ',';
    if (!c.report) {
      // Quote the message; embedded quotes are doubled.
      out << '"';
      for (char ch : c.error) out << (ch == '"' ? std::string("\"\"") : std::string(1, ch));
      out << '"';
    }
    out << '\n';
  }
  return out.str();
}

SweepResult sweep(const std::vector<DocOutcome>& scored, const SweepSpec& spec,
                  const GeneralizationMap& map, const OptimizeParams& optimize,
                  const Evaluator& evaluator, std::size_t workers) {
  spec.validate();
  SweepResult result;
  result.alpha = spec.alpha;
  for (double b : spec.betas) {
    for (double g : spec.gammas) {
      SweepCell cell;
      cell.beta = b;
      cell.gamma = g;
      result.cells.push_back(cell);
    }
  }

  auto run_cell = [&](SweepCell& cell) {
    try {
      const Weights w{spec.alpha, cell.beta, cell.gamma};
      w.validate();
      std::vector<DocOutcome> local = scored;
      for (auto& o : local) {
        if (o.scored) reprioritize(*o.scored, w);
      }
      cell.tau = spec.tau;
      if (spec.tau_policy == TauPolicy::kCalibrate) {
        const auto samples = calibration_samples(spec.calibration, local);
        cell.tau = calibrate_threshold(samples, spec.margin);
      }
      const auto anonymized = anonymize_scored(local, cell.tau, map, optimize);
      if (anonymized.summary.failures > 0) {
        throw InvalidArgument(std::to_string(anonymized.summary.failures) +
                              " documents failed in this cell");
      }
      for (const auto& d : anonymized.summary.docs) cell.n_generalized += d.n_generalized;
      cell.report = evaluator.evaluate(anonymized.anonymized);
      cell.report->config["weights"] = {
          {"alpha", spec.alpha}, {"beta", cell.beta}, {"gamma", cell.gamma}};
      cell.report->config["tau"] = cell.tau;
      cell.report->config["tau_policy"] = tau_policy_name(spec.tau_policy);
    } catch (const std::exception& ex) {
      cell.report.reset();
      cell.error = ex.what();
    }
  };

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) run_cell(result.cells[i]);
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, result.cells.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }

  std::vector<double> weight_sums, recalls;
  for (const auto& c : result.cells) {
    if (c.report && c.report->recall_at_k.contains(5)) {
      weight_sums.push_back(c.beta + c.gamma);
      recalls.push_back(c.report->recall_at_k.at(5));
    }
  }
  try {
    result.spearman_weight_recall = spearman(weight_sums, recalls);
  } catch (const std::exception& ex) {
    result.spearman_error = ex.what();
  }
  return result;
}

}  // namespace kbanon
