#include "kbanon/scoring.h"

#include <algorithm>
#include <cmath>

#include "http_json.h"
#include "kbanon/error.h"
#include "kbanon/generalize.h"
#include "kbanon/taxonomy.h"

namespace kbanon {

void Weights::validate() const {
  for (double v : {alpha, beta, gamma}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ConfigError("weights must be finite and non-negative");
    }
  }
}

RiskLexicon default_risk_lexicon() {
  RiskLexicon out;
  for (const auto& info : builtin_labels()) {
    out.emplace(std::string(info.label), level_risk(info.level));
  }
  return out;
}

void PrivacyScorerSpec::validate() const {
  if (kind == BackendKind::kRemote) {
    if (!endpoint || endpoint->empty()) {
      throw ConfigError("remote privacy scorer requires an endpoint");
    }
    return;
  }
  for (const auto& [label, risk] : lexicon) {
    if (!(risk >= 0.0 && risk <= 1.0)) {
      throw ConfigError("privacy risk for '" + label + "' must lie in [0, 1]");
    }
  }
}

double PrivacyScorer::score_one(std::string_view text) const {
  const std::string owned(text);
  return score(std::span<const std::string>(&owned, 1)).front();
}

ReferencePrivacyScorer::ReferencePrivacyScorer(
    RiskLexicon lexicon, std::shared_ptr<const EntityExtractor> extractor)
    : lexicon_(std::move(lexicon)), extractor_(std::move(extractor)) {
  if (!extractor_) throw ConfigError("reference privacy scorer needs an extractor");
}

double ReferencePrivacyScorer::score_entities(std::span<const Entity> entities) const {
  double keep = 1.0;
  for (const auto& e : entities) {
    const auto it = lexicon_.find(e.label);
    if (it == lexicon_.end()) {
      std::lock_guard lock(warn_mu_);
      unknown_.insert(e.label);
      ++unknown_hits_;
      continue;
    }
    keep *= 1.0 - it->second;
  }
  return 1.0 - keep;
}

std::vector<double> ReferencePrivacyScorer::score(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(score_entities(extractor_->extract(t)));
  return out;
}

std::set<std::string> ReferencePrivacyScorer::unknown_labels() const {
  std::lock_guard lock(warn_mu_);
  return unknown_;
}

std::size_t ReferencePrivacyScorer::unknown_label_hits() const {
  std::lock_guard lock(warn_mu_);
  return unknown_hits_;
}

RemotePrivacyScorer::RemotePrivacyScorer(std::string endpoint)
    : endpoint_(std::move(endpoint)) {}

std::vector<double> RemotePrivacyScorer::score(std::span<const std::string> texts) const {
  std::vector<double> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += kMaxBatch) {
    const auto chunk = texts.subspan(begin, std::min(kMaxBatch, texts.size() - begin));
    nlohmann::json body{{"texts", nlohmann::json::array()}};
    for (const auto& t : chunk) body["texts"].push_back(t);
    const auto reply = detail::post_json(endpoint_, "/privacy_score", body);
    try {
      const auto& scores = reply.at("scores");
      if (!scores.is_array() || scores.size() != chunk.size()) {
        throw ContractError(endpoint_ + "/privacy_score returned " +
                            std::to_string(scores.size()) + " scores for " +
                            std::to_string(chunk.size()) + " texts");
      }
      for (const auto& s : scores) {
        const double v = s.get<double>();
        if (!std::isfinite(v)) {
          throw ContractError(endpoint_ + "/privacy_score returned a non-finite score");
        }
        out.push_back(std::clamp(v, 0.0, 1.0));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ContractError(endpoint_ + "/privacy_score: malformed response: " + ex.what());
    }
  }
  return out;
}

std::shared_ptr<const PrivacyScorer> make_privacy_scorer(
    const PrivacyScorerSpec& spec, std::shared_ptr<const EntityExtractor> extractor) {
  spec.validate();
  if (spec.kind == BackendKind::kRemote) {
    return std::make_shared<RemotePrivacyScorer>(*spec.endpoint);
  }
  return std::make_shared<ReferencePrivacyScorer>(spec.lexicon, std::move(extractor));
}

double privacy_score_text(const PrivacyScorerSpec& spec, std::string_view text,
                          const ExtractorSpec& extractor) {
  std::shared_ptr<const EntityExtractor> ex;
  if (spec.kind == BackendKind::kReference) ex = make_extractor(extractor);
  return make_privacy_scorer(spec, std::move(ex))->score_one(text);
}

double marginal_privacy_risk(const Document& doc, const Entity& entity,
                             const PrivacyScorer& scorer) {
  const std::vector<std::string> texts{doc.text, mask_entity(doc.text, entity, kMaskToken)};
  const auto scores = scorer.score(texts);
  return scores[0] - scores[1];
}

double knowledge_divergence_raw(const Document& doc, const Entity& entity,
                                const Embedder& embedder) {
  const std::vector<std::string> texts{doc.text, mask_entity(doc.text, entity, kMaskToken)};
  const auto v = embedder.embed(texts);
  return 1.0 - cosine_similarity(v[0], v[1]);
}

double topical_relevance_raw(const Document& doc, const Entity& entity,
                             const Embedder& embedder) {
  (void)span_text(doc.text, entity.span);
  const std::vector<std::string> texts{entity.surface, doc.text};
  const auto v = embedder.embed(texts);
  return -l2_distance(v[0], v[1]);
}

std::vector<double> normalize_scores(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("normalize_scores needs at least one value");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("normalize_scores got a non-finite value");
  }
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo, max = *hi;
  std::vector<double> out(values.size(), 0.5);
  if (max == min) return out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = (values[i] - min) / (max - min);
  }
  return out;
}

double priority_score(const ScoreVector& s, const Weights& w) {
  return w.alpha * s.s_priv - w.beta * s.s_retr - w.gamma * s.s_knw;
}

Document score_document(Document doc, const Weights& weights, const Embedder& embedder,
                        const PrivacyScorer& scorer) {
  const std::size_t n = doc.entities.size();
  if (n == 0) return doc;

  std::vector<std::string> masked;
  masked.reserve(n + 1);
  masked.push_back(doc.text);
  for (const auto& e : doc.entities) {
    masked.push_back(mask_entity(doc.text, e, kMaskToken));
  }
  const auto priv = scorer.score(masked);

  // [T, masked_1..masked_n, surface_1..surface_n]
  std::vector<std::string> batch = masked;
  for (const auto& e : doc.entities) batch.push_back(e.surface);
  const auto vecs = embedder.embed(batch);
  if (vecs.size() != batch.size()) {
    throw ContractError("embedder returned " + std::to_string(vecs.size()) +
                        " vectors for " + std::to_string(batch.size()) + " texts");
  }
  const Vector& h_doc = vecs[0];

  std::vector<double> knw(n), retr(n);
  for (std::size_t i = 0; i < n; ++i) {
    knw[i] = 1.0 - cosine_similarity(h_doc, vecs[1 + i]);
    retr[i] = -l2_distance(vecs[1 + n + i], h_doc);
  }
  const auto knw_norm = normalize_scores(knw);
  const auto retr_norm = normalize_scores(retr);

  for (std::size_t i = 0; i < n; ++i) {
    ScoreVector s;
    s.s_priv = priv[0] - priv[1 + i];
    s.s_knw_raw = knw[i];
    s.s_retr_raw = retr[i];
    s.s_knw = knw_norm[i];
    s.s_retr = retr_norm[i];
    s.psi = priority_score(s, weights);
    doc.entities[i].scores = s;
  }
  return doc;
}

void reprioritize(Document& doc, const Weights& weights) {
  for (auto& e : doc.entities) {
    if (!e.scores) throw InvalidArgument("entity '" + e.surface + "' has no scores");
    e.scores->psi = priority_score(*e.scores, weights);
  }
}

}  // namespace kbanon
