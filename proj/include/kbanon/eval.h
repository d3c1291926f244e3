#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/embed.h"

#include "json.hpp"

namespace kbanon {

enum class Metric { kL2, kCosine };

Metric parse_metric(std::string_view name);
std::string_view metric_name(Metric m);

// Exhaustive (flat) vector index over whole-document embeddings.
class VectorIndex {
 public:
  VectorIndex(Metric metric, std::size_t dim);

  void add(std::string id, Vector v);
  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  Metric metric() const { return metric_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::vector<Vector>& vectors() const { return vectors_; }

  // k nearest ids (l2 ascending, cosine descending), ties by id ascending.
  std::vector<std::string> topk(const Vector& query, std::size_t k) const;

  nlohmann::json to_json() const;
  static VectorIndex from_json(const nlohmann::json& j);

 private:
  Metric metric_;
  std::size_t dim_;
  std::vector<std::string> ids_;
  std::vector<Vector> vectors_;
};

VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& id_texts,
                        const Embedder& embedder, Metric metric);
VectorIndex build_index(const Corpus& corpus, const Embedder& embedder, Metric metric);
VectorIndex build_index(const AnonymizedCorpus& corpus, const Embedder& embedder,
                        Metric metric);

std::vector<std::string> query_topk(const VectorIndex& index, const std::string& query,
                                    std::size_t k, const Embedder& embedder);

// Mean over queries of |topk(orig) & topk(anon)| / k.
double recall_at_k(const VectorIndex& orig, const VectorIndex& anon,
                   std::span<const std::string> queries, std::size_t k,
                   const Embedder& embedder);
double recall_at_k(const VectorIndex& orig, const VectorIndex& anon,
                   std::span<const Vector> query_vectors, std::size_t k);

std::vector<std::string> whitespace_tokens(std::string_view text);

// Sentence BLEU with add-one smoothing on the n >= 2 precisions.
double bleu(std::string_view candidate, std::string_view reference, int max_n = 4);

// LCS F-measure over whitespace tokens.
double rouge_l(std::string_view candidate, std::string_view reference, double beta = 1.2);

struct AttackQuery {
  std::string query;
  std::vector<std::string> sensitive;
};

std::vector<AttackQuery> load_attack_queries(const std::string& path);
void write_attack_queries(std::span<const AttackQuery> queries, const std::string& path);

// Plain query list, JSONL {"query": ...}.
std::vector<std::string> load_queries(const std::string& path);
void write_queries(std::span<const std::string> queries, const std::string& path);

// Fraction of attacks whose retrieved top-k anonymized texts contain any of the
// listed sensitive surfaces (ASCII case-insensitive substring).
double leakage_rate(const VectorIndex& anon_index, std::span<const AttackQuery> attacks,
                    std::size_t k, const Embedder& embedder,
                    const std::map<std::string, std::string>& anon_texts);

// Pearson correlation of average ranks. Throws on length mismatch, fewer than
// two points, or a constant side.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Average (fractional) 1-based ranks.
std::vector<double> average_ranks(std::span<const double> values);

struct EvalReport {
  std::map<int, double> recall_at_k;
  double bleu = 0.0;
  double rouge_l = 0.0;
  std::optional<double> leakage_rate;
  std::map<std::string, double> spearman;
  nlohmann::json config;
  std::vector<std::string> notes;

  nlohmann::json to_json() const;
};

// Mean sentence-level BLEU / ROUGE-L of anonymized text against the original
// text of the same document id.
struct UtilityScores {
  double bleu = 0.0;
  double rouge_l = 0.0;
};
UtilityScores text_utility(const Corpus& orig, const AnonymizedCorpus& anon);

// Pairwise Spearman among (s_priv, s_knw, s_retr) over every scored entity.
std::map<std::string, double> feature_overlap(std::span<const Document> scored_docs);

}  // namespace kbanon
