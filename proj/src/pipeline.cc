#include "kbanon/pipeline.h"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "kbanon/error.h"

namespace kbanon {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

BackendKind parse_kind(const json& j, const std::string& where) {
  const auto kind = j.get<std::string>();
  if (kind == "reference") return BackendKind::kReference;
  if (kind == "remote") return BackendKind::kRemote;
  throw ConfigError(where + ".kind must be 'reference' or 'remote', got '" + kind + "'");
}

std::string kind_name(BackendKind k) { return k == BackendKind::kRemote ? "remote" : "reference"; }

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base_dir) / p).lexically_normal().string();
}

double parse_tau(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError("tau must be a number or one of \"inf\", \"+inf\", \"-inf\"");
}

json tau_to_json(double tau) {
  if (std::isinf(tau)) return tau > 0 ? json("inf") : json("-inf");
  return json(tau);
}

}  // namespace

void PipelineConfig::validate() const {
  weights.validate();
  if (std::isnan(tau)) throw ConfigError("tau must not be NaN");
  embedder.validate();
  extractor.validate();
  privacy_scorer.validate();
  if (retrieval.k == 0) throw ConfigError("retrieval.k must be >= 1");
  if (!(optimize.b_priv >= 0.0) || !(optimize.eta >= 0.0) || optimize.min_delta < 2) {
    throw ConfigError("optimize needs b_priv >= 0, eta >= 0 and min_delta >= 2");
  }
  if (workers == 0) throw ConfigError("workers must be >= 1");
  if (extractor.kind == BackendKind::kReference && !fs::exists(*extractor.lexicon_path)) {
    throw ConfigError("lexicon_path '" + *extractor.lexicon_path + "' does not exist");
  }
  if (map_path && !fs::exists(*map_path)) {
    throw ConfigError("map_path '" + *map_path + "' does not exist");
  }
}

json PipelineConfig::to_json() const {
  json extractor_j{{"kind", kind_name(extractor.kind)}, {"labels", extractor.labels}};
  if (extractor.lexicon_path) extractor_j["lexicon_path"] = *extractor.lexicon_path;
  if (extractor.endpoint) extractor_j["endpoint"] = *extractor.endpoint;
  json embedder_j{{"kind", kind_name(embedder.kind)}, {"dim", embedder.dim}};
  if (embedder.endpoint) embedder_j["endpoint"] = *embedder.endpoint;
  json scorer_j{{"kind", kind_name(privacy_scorer.kind)}, {"lexicon", privacy_scorer.lexicon}};
  if (privacy_scorer.endpoint) scorer_j["endpoint"] = *privacy_scorer.endpoint;

  json j{{"weights", {{"alpha", weights.alpha}, {"beta", weights.beta}, {"gamma", weights.gamma}}},
         {"tau", tau_to_json(tau)},
         {"embedder", std::move(embedder_j)},
         {"extractor", std::move(extractor_j)},
         {"privacy_scorer", std::move(scorer_j)},
         {"retrieval", {{"k", retrieval.k}, {"metric", metric_name(retrieval.metric)}}},
         {"optimize",
          {{"b_priv", optimize.b_priv}, {"eta", optimize.eta}, {"min_delta", optimize.min_delta}}},
         {"seed", seed},
         {"workers", workers}};
  if (map_path) j["map_path"] = *map_path;
  return j;
}

PipelineConfig parse_config(const json& j, const std::string& base_dir) {
  PipelineConfig c;
  try {
    check_keys(j,
               {"weights", "tau", "embedder", "extractor", "privacy_scorer", "map_path",
                "retrieval", "optimize", "seed", "workers"},
               "config");
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      check_keys(w, {"alpha", "beta", "gamma"}, "weights");
      c.weights.alpha = w.value("alpha", c.weights.alpha);
      c.weights.beta = w.value("beta", c.weights.beta);
      c.weights.gamma = w.value("gamma", c.weights.gamma);
    }
    if (j.contains("tau")) c.tau = parse_tau(j["tau"]);
    if (j.contains("embedder")) {
      const auto& e = j["embedder"];
      check_keys(e, {"kind", "dim", "endpoint"}, "embedder");
      if (e.contains("kind")) c.embedder.kind = parse_kind(e["kind"], "embedder");
      c.embedder.dim = e.value("dim", c.embedder.dim);
      if (e.contains("endpoint") && !e["endpoint"].is_null()) {
        c.embedder.endpoint = e["endpoint"].get<std::string>();
      }
    }
    if (j.contains("extractor")) {
      const auto& e = j["extractor"];
      check_keys(e, {"kind", "labels", "lexicon_path", "endpoint"}, "extractor");
      if (e.contains("kind")) c.extractor.kind = parse_kind(e["kind"], "extractor");
      if (e.contains("labels")) c.extractor.labels = e["labels"].get<std::vector<std::string>>();
      if (e.contains("lexicon_path") && !e["lexicon_path"].is_null()) {
        c.extractor.lexicon_path = resolve_path(e["lexicon_path"].get<std::string>(), base_dir);
      }
      if (e.contains("endpoint") && !e["endpoint"].is_null()) {
        c.extractor.endpoint = e["endpoint"].get<std::string>();
      }
    }
    if (j.contains("privacy_scorer")) {
      const auto& p = j["privacy_scorer"];
      check_keys(p, {"kind", "lexicon", "endpoint"}, "privacy_scorer");
      if (p.contains("kind")) c.privacy_scorer.kind = parse_kind(p["kind"], "privacy_scorer");
      if (p.contains("lexicon")) c.privacy_scorer.lexicon = p["lexicon"].get<RiskLexicon>();
      if (p.contains("endpoint") && !p["endpoint"].is_null()) {
        c.privacy_scorer.endpoint = p["endpoint"].get<std::string>();
      }
    }
    if (j.contains("map_path") && !j["map_path"].is_null()) {
      c.map_path = resolve_path(j["map_path"].get<std::string>(), base_dir);
    }
    if (j.contains("retrieval")) {
      const auto& r = j["retrieval"];
      check_keys(r, {"k", "metric"}, "retrieval");
      if (r.contains("k")) {
        const auto k = r["k"].get<long long>();
        if (k < 1) throw ConfigError("retrieval.k must be >= 1");
        c.retrieval.k = static_cast<std::size_t>(k);
      }
      if (r.contains("metric")) c.retrieval.metric = parse_metric(r["metric"].get<std::string>());
    }
    if (j.contains("optimize")) {
      const auto& o = j["optimize"];
      check_keys(o, {"b_priv", "eta", "min_delta"}, "optimize");
      c.optimize.b_priv = o.value("b_priv", c.optimize.b_priv);
      c.optimize.eta = o.value("eta", c.optimize.eta);
      c.optimize.min_delta = o.value("min_delta", c.optimize.min_delta);
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("workers")) {
      const auto w = j["workers"].get<long long>();
      if (w < 1) throw ConfigError("workers must be >= 1");
      c.workers = static_cast<std::size_t>(w);
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("invalid config value: ") + ex.what());
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& ex) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + ex.what());
  }
  const auto dir = fs::path(path).parent_path();
  return parse_config(j, dir.empty() ? "." : dir.string());
}

Backends Backends::from_config(const PipelineConfig& config) {
  Backends b;
  b.embedder = std::shared_ptr<const Embedder>(make_embedder(config.embedder));
  b.extractor = make_extractor(config.extractor);
  b.scorer = make_privacy_scorer(config.privacy_scorer, b.extractor);
  b.map = config.map_path ? load_generalization_map(*config.map_path)
                          : default_generalization_map();
  if (const auto* ref = dynamic_cast<const ReferenceExtractor*>(b.extractor.get())) {
    b.map.check_against_lexicon(ref->lexicon());
  }
  return b;
}

Document prepare_document(Document doc, const Backends& backends, const Weights& weights) {
  doc.entities = backends.extractor->extract(doc.text);
  validate_document(doc);
  return score_document(std::move(doc), weights, *backends.embedder, *backends.scorer);
}

std::vector<DocOutcome> score_corpus(const Corpus& corpus, const Backends& backends,
                                     const Weights& weights, std::size_t workers) {
  std::vector<DocOutcome> out(corpus.docs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < corpus.docs.size(); i = next++) {
      try {
        out[i].scored = prepare_document(corpus.docs[i], backends, weights);
      } catch (const std::exception& ex) {
        out[i].error = ex.what();
      }
    }
  };
  const std::size_t n_threads = std::max<std::size_t>(1, std::min(workers, corpus.docs.size()));
  if (n_threads == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
  }
  return out;
}

json PipelineSummary::to_json() const {
  json docs_j = json::array();
  for (const auto& d : docs) {
    json item{{"id", d.id},
              {"n_entities", d.n_entities},
              {"n_generalized", d.n_generalized},
              {"mean_psi", d.mean_psi},
              {"entropy_bits", d.entropy_bits}};
    if (!d.error.empty()) item["error"] = d.error;
    docs_j.push_back(std::move(item));
  }
  return {{"docs", std::move(docs_j)}, {"failures", failures}, {"tau", tau_to_json(tau)}};
}

PipelineResult anonymize_scored(const std::vector<DocOutcome>& outcomes, double tau,
                                const GeneralizationMap& map, const OptimizeParams& optimize) {
  PipelineResult result;
  result.summary.tau = tau;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& outcome = outcomes[i];
    DocSummary summary;
    if (!outcome.scored) {
      summary.id = "#" + std::to_string(i);
      summary.error = outcome.error;
      ++result.summary.failures;
      result.summary.docs.push_back(std::move(summary));
      continue;
    }
    const Document& doc = *outcome.scored;
    summary.id = doc.id;
    try {
      const auto sel = select_by_threshold(doc, tau);
      auto anon = generalize_document(doc, sel, map);
      summary.n_entities = doc.entities.size();
      summary.n_generalized = sel.generalize_set.size();
      double psi_sum = 0.0;
      for (const auto& e : doc.entities) psi_sum += e.scores->psi;
      summary.mean_psi = doc.entities.empty() ? 0.0 : psi_sum / static_cast<double>(doc.entities.size());
      const std::vector<int> sizes(sel.generalize_set.size(), optimize.min_delta);
      summary.entropy_bits = entropy_lower_bound(sizes).simplified_bits;
      result.anonymized.docs.push_back(std::move(anon));
    } catch (const std::exception& ex) {
      summary.error = ex.what();
      ++result.summary.failures;
    }
    result.summary.docs.push_back(std::move(summary));
  }
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& config, const Corpus& corpus,
                            const Backends& backends) {
  const auto scored = score_corpus(corpus, backends, config.weights, config.workers);
  auto result = anonymize_scored(scored, config.tau, backends.map, config.optimize);
  // Failed documents carry their source id when it is known.
  for (std::size_t i = 0, s = 0; i < scored.size(); ++i, ++s) {
    if (!scored[i].scored) result.summary.docs[s].id = corpus.docs[i].id;
  }
  return result;
}

PipelineResult run_pipeline(const PipelineConfig& config, const std::string& corpus_path,
                            const std::string& out_path, const std::string& text_field,
                            const std::optional<std::string>& id_field) {
  const auto corpus = load_corpus(corpus_path, text_field, id_field);
  const auto backends = Backends::from_config(config);
  auto result = run_pipeline(config, corpus, backends);
  write_corpus(result.anonymized, out_path, text_field);
  return result;
}

BaselineKind parse_baseline(const std::string& name) {
  if (name == "origin") return BaselineKind::kOrigin;
  if (name == "redact") return BaselineKind::kRedact;
  throw ConfigError("unsupported baseline '" + name + "' (expected origin or redact)");
}

AnonymizedCorpus run_baseline(BaselineKind kind, const Corpus& corpus,
                              const Backends& backends) {
  AnonymizedCorpus out;
  out.docs.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) {
    if (kind == BaselineKind::kOrigin) {
      out.docs.push_back(AnonymizedDocument{doc.id, doc.text, {}, doc.entities});
      continue;
    }
    Document extracted = doc;
    extracted.entities = backends.extractor->extract(doc.text);
    out.docs.push_back(generalize_document(extracted, select_all(extracted), backends.map));
  }
  return out;
}

std::vector<CalibrationRecord> load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration file '" + path + "'");
  std::vector<CalibrationRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      CalibrationRecord r;
      r.id = j.at("id").is_string() ? j["id"].get<std::string>() : j["id"].dump();
      for (const auto& idx : j.at("critical")) r.critical.insert(idx.get<std::size_t>());
      out.push_back(std::move(r));
    } catch (const json::exception& ex) {
      throw FormatError(path + ": bad calibration record at line " + std::to_string(line_no) +
                        ": " + ex.what());
    }
  }
  return out;
}

void write_calibration(const std::vector<CalibrationRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& r : records) {
    out << json{{"id", r.id}, {"critical", r.critical}}.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<CalibrationSample> calibration_samples(const std::vector<CalibrationRecord>& records,
                                                   const std::vector<DocOutcome>& scored) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& o : scored) {
    if (o.scored) by_id.emplace(o.scored->id, &*o.scored);
  }
  std::vector<CalibrationSample> out;
  for (const auto& r : records) {
    const auto it = by_id.find(r.id);
    if (it == by_id.end()) {
      throw InvalidArgument("calibration id '" + r.id + "' has no scored document");
    }
    for (std::size_t i : r.critical) {
      if (i >= it->second->entities.size()) {
        throw InvalidArgument("calibration id '" + r.id + "' names entity " + std::to_string(i) +
                              " but the document has " +
                              std::to_string(it->second->entities.size()));
      }
    }
    out.push_back(CalibrationSample{*it->second, r.critical});
  }
  return out;
}

}  // namespace kbanon
