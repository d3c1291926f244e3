#include "kbanon/eval.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_map>

#include "kbanon/error.h"

namespace kbanon {

using nlohmann::json;

Metric parse_metric(std::string_view name) {
  if (name == "l2") return Metric::kL2;
  if (name == "cosine") return Metric::kCosine;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected l2 or cosine)");
}

std::string_view metric_name(Metric m) { return m == Metric::kL2 ? "l2" : "cosine"; }

VectorIndex::VectorIndex(Metric metric, std::size_t dim) : metric_(metric), dim_(dim) {}

void VectorIndex::add(std::string id, Vector v) {
  if (v.dim() != dim_) {
    throw ContractError("index expects dim " + std::to_string(dim_) + " but '" + id +
                        "' has dim " + std::to_string(v.dim()));
  }
  if (std::find(ids_.begin(), ids_.end(), id) != ids_.end()) {
    throw InvalidArgument("duplicate id '" + id + "' in index");
  }
  ids_.push_back(std::move(id));
  vectors_.push_back(std::move(v));
}

std::vector<std::string> VectorIndex::topk(const Vector& query, std::size_t k) const {
  if (ids_.empty()) throw InvalidArgument("query against an empty index");
  if (k == 0) throw InvalidArgument("k must be >= 1");

  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    const double key = metric_ == Metric::kL2 ? l2_distance(query, vectors_[i])
                                              : -cosine_similarity(query, vectors_[i]);
    keyed.emplace_back(key, i);
  }
  const std::size_t take = std::min(k, keyed.size());
  auto less = [this](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return ids_[a.second] < ids_[b.second];
  };
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(take),
                    keyed.end(), less);
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(ids_[keyed[i].second]);
  return out;
}

json VectorIndex::to_json() const {
  json entries = json::array();
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    entries.push_back({{"id", ids_[i]},
                       {"vector", std::vector<double>(vectors_[i].values().begin(),
                                                      vectors_[i].values().end())}});
  }
  return {{"metric", metric_name(metric_)}, {"dim", dim_}, {"entries", std::move(entries)}};
}

VectorIndex VectorIndex::from_json(const json& j) {
  try {
    VectorIndex index(parse_metric(j.at("metric").get<std::string>()),
                      j.at("dim").get<std::size_t>());
    for (const auto& e : j.at("entries")) {
      index.add(e.at("id").get<std::string>(), Vector(e.at("vector").get<std::vector<double>>()));
    }
    return index;
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed index file: ") + ex.what());
  }
}

VectorIndex build_index(const std::vector<std::pair<std::string, std::string>>& id_texts,
                        const Embedder& embedder, Metric metric) {
  if (id_texts.empty()) throw InvalidArgument("cannot index an empty corpus");
  std::vector<std::string> texts;
  texts.reserve(id_texts.size());
  for (const auto& [id, text] : id_texts) texts.push_back(text);
  auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size()) {
    throw ContractError("embedder returned " + std::to_string(vectors.size()) +
                        " vectors for " + std::to_string(texts.size()) + " documents");
  }
  VectorIndex index(metric, vectors.front().dim());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    index.add(id_texts[i].first, std::move(vectors[i]));
  }
  return index;
}

VectorIndex build_index(const Corpus& corpus, const Embedder& embedder, Metric metric) {
  std::vector<std::pair<std::string, std::string>> id_texts;
  for (const auto& d : corpus.docs) id_texts.emplace_back(d.id, d.text);
  return build_index(id_texts, embedder, metric);
}

VectorIndex build_index(const AnonymizedCorpus& corpus, const Embedder& embedder,
                        Metric metric) {
  std::vector<std::pair<std::string, std::string>> id_texts;
  for (const auto& d : corpus.docs) id_texts.emplace_back(d.id, d.text);
  return build_index(id_texts, embedder, metric);
}

std::vector<std::string> query_topk(const VectorIndex& index, const std::string& query,
                                    std::size_t k, const Embedder& embedder) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  if (index.size() == 0) throw InvalidArgument("query against an empty index");
  const auto v = embedder.embed(std::span<const std::string>(&query, 1));
  return index.topk(v.front(), k);
}

double recall_at_k(const VectorIndex& orig, const VectorIndex& anon,
                   std::span<const Vector> query_vectors, std::size_t k) {
  if (k == 0) throw InvalidArgument("k must be >= 1");
  std::vector<std::string> a = orig.ids(), b = anon.ids();
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) throw InvalidArgument("recall_at_k needs indexes over the same document ids");
  if (query_vectors.empty()) throw InvalidArgument("recall_at_k needs at least one query");

  // Below k documents a perfect match returns fewer than k ids.
  const double denom = static_cast<double>(std::min(k, orig.size()));
  double sum = 0.0;
  for (const auto& q : query_vectors) {
    auto top_o = orig.topk(q, k);
    auto top_a = anon.topk(q, k);
    std::sort(top_o.begin(), top_o.end());
    std::sort(top_a.begin(), top_a.end());
    std::vector<std::string> both;
    std::set_intersection(top_o.begin(), top_o.end(), top_a.begin(), top_a.end(),
                          std::back_inserter(both));
    sum += static_cast<double>(both.size()) / denom;
  }
  return sum / static_cast<double>(query_vectors.size());
}

double recall_at_k(const VectorIndex& orig, const VectorIndex& anon,
                   std::span<const std::string> queries, std::size_t k,
                   const Embedder& embedder) {
  if (queries.empty()) throw InvalidArgument("recall_at_k needs at least one query");
  const auto vectors = embedder.embed(queries);
  return recall_at_k(orig, anon, std::span<const Vector>(vectors), k);
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

namespace {

using NgramCounts = std::unordered_map<std::string, int>;

NgramCounts count_ngrams(const std::vector<std::string>& tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key.push_back('\x1f');
      key += tokens[i + static_cast<std::size_t>(j)];
    }
    ++counts[key];
  }
  return counts;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  if (max_n < 1) throw InvalidArgument("bleu max_n must be >= 1");
  const auto ref = whitespace_tokens(reference);
  if (ref.empty()) throw InvalidArgument("bleu reference is empty");
  const auto cand = whitespace_tokens(candidate);
  if (cand.empty()) return 0.0;

  double log_sum = 0.0;
  for (int n = 1; n <= max_n; ++n) {
    const auto cand_counts = count_ngrams(cand, n);
    const auto ref_counts = count_ngrams(ref, n);
    double matched = 0.0, total = 0.0;
    for (const auto& [gram, count] : cand_counts) {
      total += count;
      const auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matched += std::min(count, it->second);
    }
    double precision;
    if (n == 1) {
      if (matched == 0.0) return 0.0;
      precision = matched / total;
    } else {
      precision = (matched + 1.0) / (total + 1.0);
    }
    log_sum += std::log(precision);
  }
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

double rouge_l(std::string_view candidate, std::string_view reference, double beta) {
  const auto cand = whitespace_tokens(candidate);
  const auto ref = whitespace_tokens(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(cand, ref));
  if (lcs == 0.0) return 0.0;
  const double p = lcs / static_cast<double>(cand.size());
  const double r = lcs / static_cast<double>(ref.size());
  const double b2 = beta * beta;
  return (1.0 + b2) * p * r / (r + b2 * p);
}

std::vector<AttackQuery> load_attack_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open attack queries '" + path + "'");
  std::vector<AttackQuery> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      AttackQuery q{j.at("query").get<std::string>(),
                    j.at("sensitive").get<std::vector<std::string>>()};
      if (q.sensitive.empty()) {
        throw FormatError(path + ": attack at line " + std::to_string(line_no) +
                          " lists no sensitive surfaces");
      }
      out.push_back(std::move(q));
    } catch (const json::exception& ex) {
      throw FormatError(path + ": bad attack query at line " + std::to_string(line_no) +
                        ": " + ex.what());
    }
  }
  return out;
}

void write_attack_queries(std::span<const AttackQuery> queries, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& q : queries) {
    out << json{{"query", q.query}, {"sensitive", q.sensitive}}.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<std::string> load_queries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open queries '" + path + "'");
  std::vector<std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).at("query").get<std::string>());
    } catch (const json::exception& ex) {
      throw FormatError(path + ": bad query at line " + std::to_string(line_no) + ": " +
                        ex.what());
    }
  }
  return out;
}

void write_queries(std::span<const std::string> queries, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& q : queries) out << json{{"query", q}}.dump() << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

double leakage_rate(const VectorIndex& anon_index, std::span<const AttackQuery> attacks,
                    std::size_t k, const Embedder& embedder,
                    const std::map<std::string, std::string>& anon_texts) {
  if (anon_index.size() == 0) throw InvalidArgument("leakage_rate against an empty index");
  if (attacks.empty()) throw InvalidArgument("leakage_rate needs at least one attack query");
  std::vector<std::string> queries;
  queries.reserve(attacks.size());
  for (const auto& a : attacks) {
    if (a.sensitive.empty()) throw InvalidArgument("attack query lists no sensitive surfaces");
    queries.push_back(a.query);
  }
  const auto vectors = embedder.embed(queries);

  std::size_t leaked = 0;
  for (std::size_t q = 0; q < attacks.size(); ++q) {
    std::string context;
    for (const auto& id : anon_index.topk(vectors[q], k)) {
      const auto it = anon_texts.find(id);
      if (it == anon_texts.end()) {
        throw InvalidArgument("index id '" + id + "' missing from anonymized corpus");
      }
      context += ascii_lower(it->second);
      context.push_back('\n');
    }
    const bool hit = std::any_of(
        attacks[q].sensitive.begin(), attacks[q].sensitive.end(), [&](const std::string& s) {
          return !s.empty() && context.find(ascii_lower(s)) != std::string::npos;
        });
    if (hit) ++leaked;
  }
  return static_cast<double>(leaked) / static_cast<double>(attacks.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    // positions i..j share the mean of 1-based ranks i+1..j+1
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw InvalidArgument("spearman inputs differ in length");
  if (xs.size() < 2) throw InvalidArgument("spearman needs at least two points");
  for (double v : xs) {
    if (std::isnan(v)) throw InvalidArgument("spearman input contains NaN");
  }
  for (double v : ys) {
    if (std::isnan(v)) throw InvalidArgument("spearman input contains NaN");
  }
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  const double n = static_cast<double>(xs.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean, dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw InvalidArgument("undefined correlation");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

json EvalReport::to_json() const {
  json recall = json::object();
  for (const auto& [k, v] : recall_at_k) recall[std::to_string(k)] = v;
  json j{{"recall_at_k", std::move(recall)},
         {"bleu", bleu},
         {"rouge_l", rouge_l},
         {"leakage_rate", leakage_rate ? json(*leakage_rate) : json(nullptr)},
         {"spearman", spearman},
         {"config", config},
         {"notes", notes}};
  return j;
}

UtilityScores text_utility(const Corpus& orig, const AnonymizedCorpus& anon) {
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : orig.docs) by_id.emplace(d.id, &d);
  UtilityScores out;
  std::size_t counted = 0;
  for (const auto& a : anon.docs) {
    const auto it = by_id.find(a.id);
    if (it == by_id.end()) {
      throw InvalidArgument("anonymized document '" + a.id + "' has no original");
    }
    if (whitespace_tokens(it->second->text).empty()) continue;
    out.bleu += bleu(a.text, it->second->text);
    out.rouge_l += rouge_l(a.text, it->second->text);
    ++counted;
  }
  if (counted > 0) {
    out.bleu /= static_cast<double>(counted);
    out.rouge_l /= static_cast<double>(counted);
  }
  return out;
}

std::map<std::string, double> feature_overlap(std::span<const Document> scored_docs) {
  std::vector<double> priv, knw, retr;
  for (const auto& d : scored_docs) {
    for (const auto& e : d.entities) {
      if (!e.scores) continue;
      priv.push_back(e.scores->s_priv);
      knw.push_back(e.scores->s_knw);
      retr.push_back(e.scores->s_retr);
    }
  }
  std::map<std::string, double> out;
  auto add = [&](const char* name, const std::vector<double>& a, const std::vector<double>& b) {
    try {
      out[name] = spearman(a, b);
    } catch (const InvalidArgument&) {
      // constant or too-short feature: correlation undefined, omitted
    }
  };
  add("s_priv~s_knw", priv, knw);
  add("s_priv~s_retr", priv, retr);
  add("s_knw~s_retr", knw, retr);
  return out;
}

}  // namespace kbanon
