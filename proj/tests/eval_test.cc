#include "kbanon/eval.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kbanon/error.h"
#include "test_util.h"

namespace kbanon {
namespace {

VectorIndex unit_index(Metric m, const std::vector<std::pair<std::string, Vector>>& rows) {
  VectorIndex idx(m, rows.front().second.dim());
  for (const auto& [id, v] : rows) idx.add(id, v);
  return idx;
}

TEST(Bleu, ShortCandidateIsPenalizedByBrevity) {
  // Unigram and bigram precision are 1; higher orders have no candidate
  // n-grams, so add-one smoothing gives 1/1. Only brevity remains.
  const double expected = std::exp(1.0 - 3.0 / 2.0);
  EXPECT_NEAR(bleu("the cat", "the cat sat"), expected, 1e-12);
  EXPECT_NEAR(bleu("the cat sat", "the cat sat"), 1.0, 1e-12);
  EXPECT_EQ(bleu("dog", "the cat sat"), 0.0);
  EXPECT_EQ(bleu("", "the cat"), 0.0);
  EXPECT_THROW(bleu("x", ""), InvalidArgument);
}

TEST(Bleu, HandComputedSmoothedCase) {
  // cand: a b c d, ref: a b x d e.
  // p1 = 3/4, p2 = (1+1)/(3+1), p3 = (0+1)/(2+1), p4 = (0+1)/(1+1), BP = exp(1 - 5/4).
  const double p = 0.75 * 0.5 * (1.0 / 3.0) * 0.5;
  EXPECT_NEAR(bleu("a b c d", "a b x d e"), std::exp(1.0 - 1.25) * std::pow(p, 0.25), 1e-12);
}

TEST(RougeL, Examples) {
  const double p = 2.0 / 3.0, r = 1.0, b2 = 1.2 * 1.2;
  EXPECT_NEAR(rouge_l("a b c", "a c"), (1 + b2) * p * r / (r + b2 * p), 1e-12);
  EXPECT_NEAR(rouge_l("a c", "a c"), 1.0, 1e-12);
  EXPECT_EQ(rouge_l("x y", "a c"), 0.0);
  EXPECT_EQ(rouge_l("", "a c"), 0.0);
}

TEST(Spearman, Examples) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 1, 4, 3, 5};
  EXPECT_NEAR(spearman(x, y), 0.8, 1e-12);
  const std::vector<double> rev{50, 40, 30, 20, 10};
  EXPECT_NEAR(spearman(x, x), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, rev), -1.0, 1e-12);
  const std::vector<double> flat{3, 3, 3, 3, 3};
  EXPECT_THROW(spearman(x, flat), InvalidArgument);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), InvalidArgument);
  EXPECT_THROW(spearman(x, std::vector<double>{1, 2}), InvalidArgument);
}

TEST(Spearman, MatchesClosedFormWithoutTies) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + rng() % 20;
    std::vector<double> x(n), y(n);
    std::iota(x.begin(), x.end(), 1.0);
    std::iota(y.begin(), y.end(), 1.0);
    std::shuffle(y.begin(), y.end(), rng);
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
    const double nd = static_cast<double>(n);
    EXPECT_NEAR(spearman(x, y), 1.0 - 6.0 * d2 / (nd * (nd * nd - 1.0)), 1e-12);
  }
}

TEST(AverageRanks, TiesShareTheMean) {
  EXPECT_EQ(average_ranks(std::vector<double>{10, 20, 20, 5}),
            (std::vector<double>{2.0, 3.5, 3.5, 1.0}));
}

TEST(VectorIndex, TopkOrderAndTies) {
  const auto idx = unit_index(Metric::kL2, {{"b", Vector({1.0, 0.0})},
                                            {"a", Vector({1.0, 0.0})},
                                            {"c", Vector({0.0, 1.0})}});
  EXPECT_EQ(idx.topk(Vector({1.0, 0.0}), 2), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(idx.topk(Vector({0.0, 1.0}), 1), (std::vector<std::string>{"c"}));
  EXPECT_EQ(idx.topk(Vector({0.0, 1.0}), 10).size(), 3u);
  const auto cos = unit_index(Metric::kCosine, {{"x", Vector({2.0, 0.0})}, {"y", Vector({0.0, 1.0})}});
  EXPECT_EQ(cos.topk(Vector({0.1, 0.0}), 1), (std::vector<std::string>{"x"}));
}

TEST(VectorIndex, JsonRoundTripAndErrors) {
  const auto idx = unit_index(Metric::kCosine, {{"a", Vector({0.6, 0.8})}, {"b", Vector({1.0, 0.0})}});
  const auto back = VectorIndex::from_json(nlohmann::json::parse(idx.to_json().dump()));
  EXPECT_EQ(back.ids(), idx.ids());
  EXPECT_EQ(back.vectors(), idx.vectors());
  EXPECT_EQ(back.metric(), Metric::kCosine);

  VectorIndex empty(Metric::kL2, 2);
  EXPECT_THROW(empty.topk(Vector({1.0, 0.0}), 1), InvalidArgument);
  VectorIndex dup(Metric::kL2, 2);
  dup.add("a", Vector({1.0, 0.0}));
  EXPECT_THROW(dup.add("a", Vector({0.0, 1.0})), InvalidArgument);
  EXPECT_THROW(dup.add("z", Vector({1.0})), ContractError);
  EXPECT_THROW(parse_metric("manhattan"), ConfigError);
}

TEST(Recall, Examples) {
  const Vector e1({1.0, 0.0, 0.0}), e2({0.0, 1.0, 0.0}), e3({0.0, 0.0, 1.0});
  const auto orig = unit_index(Metric::kL2, {{"d1", e1}, {"d2", e2}, {"d3", e3}});
  const std::vector<Vector> q{e1};
  EXPECT_EQ(recall_at_k(orig, orig, q, 1), 1.0);
  // Every document now sits where another one used to.
  const auto moved = unit_index(Metric::kL2, {{"d1", e3}, {"d2", e1}, {"d3", e2}});
  EXPECT_EQ(recall_at_k(orig, moved, q, 1), 0.0);
  const std::vector<Vector> two{e1, e2};
  EXPECT_EQ(recall_at_k(orig, moved, two, 1), 0.0);
  const std::vector<Vector> q2{e2};
  const auto half = unit_index(Metric::kL2, {{"d1", e2}, {"d2", e1}, {"d3", e3}});
  // orig top2 for e2: d2, then d1 (tie with d3, smaller id). anon top2: d1, then d2.
  EXPECT_EQ(recall_at_k(orig, half, q2, 2), 1.0);
  // top1: d2 vs d1.
  EXPECT_EQ(recall_at_k(orig, half, std::vector<Vector>{e2, e3}, 1), 0.5);
}

TEST(Recall, KBeyondCorpusUsesCorpusSize) {
  const auto orig = unit_index(Metric::kL2, {{"a", Vector({1.0, 0.0})}, {"b", Vector({0.0, 1.0})}});
  EXPECT_EQ(recall_at_k(orig, orig, std::vector<Vector>{Vector({1.0, 0.0})}, 10), 1.0);
}

TEST(Recall, RejectsMismatchedIndexes) {
  const auto a = unit_index(Metric::kL2, {{"a", Vector({1.0, 0.0})}});
  const auto b = unit_index(Metric::kL2, {{"b", Vector({1.0, 0.0})}});
  EXPECT_THROW(recall_at_k(a, b, std::vector<Vector>{Vector({1.0, 0.0})}, 1), InvalidArgument);
  EXPECT_THROW(recall_at_k(a, a, std::vector<Vector>{}, 1), InvalidArgument);
  EXPECT_THROW(recall_at_k(a, a, std::vector<Vector>{Vector({1.0, 0.0})}, 0), InvalidArgument);
}

TEST(Recall, TextQueriesThroughEmbedder) {
  const ReferenceEmbedder emb;
  Corpus c;
  c.docs = {Document{"1", "diabetes insulin care", {}, {}}, Document{"2", "city travel", {}, {}}};
  const auto idx = build_index(c, emb, Metric::kL2);
  EXPECT_EQ(query_topk(idx, "insulin", 1, emb), (std::vector<std::string>{"1"}));
  const std::vector<std::string> qs{"insulin", "travel"};
  EXPECT_EQ(recall_at_k(idx, idx, qs, 1, emb), 1.0);
}

TEST(Leakage, Examples) {
  const ReferenceEmbedder emb;
  const std::vector<std::pair<std::string, std::string>> rows{
      {"1", "Alice Smith has diabetes"}, {"2", "somebody has diabetes"}};
  const auto idx = build_index(rows, emb, Metric::kL2);
  const std::map<std::string, std::string> texts(rows.begin(), rows.end());
  const std::vector<AttackQuery> leak{{"Alice diabetes", {"alice smith"}}};
  EXPECT_EQ(leakage_rate(idx, leak, 2, emb, texts), 1.0);
  const std::vector<AttackQuery> safe{{"diabetes", {"Bob Jones"}}};
  EXPECT_EQ(leakage_rate(idx, safe, 2, emb, texts), 0.0);
  std::vector<AttackQuery> both = leak;
  both.push_back(safe[0]);
  EXPECT_EQ(leakage_rate(idx, both, 2, emb, texts), 0.5);
  const std::vector<AttackQuery> none{{"q", {}}};
  EXPECT_THROW(leakage_rate(idx, none, 2, emb, texts), InvalidArgument);
}

TEST(QueryFiles, RoundTrip) {
  testing::TempDir dir;
  const std::vector<std::string> qs{"first", "second \"quoted\""};
  write_queries(qs, dir.file("q.jsonl"));
  EXPECT_EQ(load_queries(dir.file("q.jsonl")), qs);
  const std::vector<AttackQuery> as{{"repeat", {"Alice", "Bob"}}};
  write_attack_queries(as, dir.file("a.jsonl"));
  const auto back = load_attack_queries(dir.file("a.jsonl"));
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].query, "repeat");
  EXPECT_EQ(back[0].sensitive, as[0].sensitive);
}

TEST(TextUtility, IdenticalCorporaScoreOne) {
  Corpus c;
  c.docs = {Document{"1", "a b c d", {}, {}}};
  AnonymizedCorpus a;
  a.docs.push_back(AnonymizedDocument{"1", "a b c d", {}, {}});
  const auto u = text_utility(c, a);
  EXPECT_NEAR(u.bleu, 1.0, 1e-12);
  EXPECT_NEAR(u.rouge_l, 1.0, 1e-12);
}

}  // namespace
}  // namespace kbanon
