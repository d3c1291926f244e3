#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/embed.h"
#include "kbanon/extract.h"

namespace kbanon {

// Placeholder substituted for an entity when measuring its marginal effect.
inline constexpr std::string_view kMaskToken = "[MASK]";

struct Weights {
  double alpha = 1.0;
  double beta = 0.5;
  double gamma = 0.4;

  void validate() const;
  friend bool operator==(const Weights&, const Weights&) = default;
};

// label -> base risk in [0, 1]
using RiskLexicon = std::map<std::string, double>;

// Every built-in label mapped to the midpoint of its rubric level.
RiskLexicon default_risk_lexicon();

struct PrivacyScorerSpec {
  BackendKind kind = BackendKind::kReference;
  RiskLexicon lexicon = default_risk_lexicon();
  std::optional<std::string> endpoint;

  void validate() const;
};

// Document-level privacy risk f_priv.
class PrivacyScorer {
 public:
  virtual ~PrivacyScorer() = default;
  virtual std::vector<double> score(std::span<const std::string> texts) const = 0;
  double score_one(std::string_view text) const;
};

// Noisy-or over detected entities: 1 - prod(1 - r(label)). Labels missing
// from the lexicon count as risk 0 and are recorded in unknown_labels().
class ReferencePrivacyScorer final : public PrivacyScorer {
 public:
  ReferencePrivacyScorer(RiskLexicon lexicon,
                         std::shared_ptr<const EntityExtractor> extractor);

  std::vector<double> score(std::span<const std::string> texts) const override;
  double score_entities(std::span<const Entity> entities) const;

  std::set<std::string> unknown_labels() const;
  std::size_t unknown_label_hits() const;

 private:
  RiskLexicon lexicon_;
  std::shared_ptr<const EntityExtractor> extractor_;
  mutable std::mutex warn_mu_;
  mutable std::set<std::string> unknown_;
  mutable std::size_t unknown_hits_ = 0;
};

// Client for POST {endpoint}/privacy_score; scores are clamped to [0, 1].
class RemotePrivacyScorer final : public PrivacyScorer {
 public:
  static constexpr std::size_t kMaxBatch = 64;

  explicit RemotePrivacyScorer(std::string endpoint);
  std::vector<double> score(std::span<const std::string> texts) const override;

 private:
  std::string endpoint_;
};

std::shared_ptr<const PrivacyScorer> make_privacy_scorer(
    const PrivacyScorerSpec& spec, std::shared_ptr<const EntityExtractor> extractor);

double privacy_score_text(const PrivacyScorerSpec& spec, std::string_view text,
                          const ExtractorSpec& extractor);

// f_priv(T) - f_priv(T with `entity` masked).
double marginal_privacy_risk(const Document& doc, const Entity& entity,
                             const PrivacyScorer& scorer);

// 1 - cos(E(T), E(T with `entity` masked)), in [0, 2].
double knowledge_divergence_raw(const Document& doc, const Entity& entity,
                                const Embedder& embedder);

// -|E(surface) - E(T)|_2, always <= 0.
double topical_relevance_raw(const Document& doc, const Entity& entity,
                             const Embedder& embedder);

// Min-max to [0, 1]; a constant list maps to 0.5 everywhere. Throws on NaN
// or an empty list.
std::vector<double> normalize_scores(std::span<const double> values);

double priority_score(const ScoreVector& s, const Weights& w);

// Populates every entity's ScoreVector. The document text, each masked
// variant and each entity surface are embedded in a single batch, and the
// privacy scorer sees one batch as well. s_knw and s_retr are normalized over
// this document's entities.
Document score_document(Document doc, const Weights& weights, const Embedder& embedder,
                        const PrivacyScorer& scorer);

// Recomputes psi for already-scored entities under new weights.
void reprioritize(Document& doc, const Weights& weights);

}  // namespace kbanon
