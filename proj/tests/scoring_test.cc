#include "kbanon/scoring.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>

#include "kbanon/error.h"
#include "kbanon/eval.h"
#include "kbanon/generalize.h"
#include "kbanon/pipeline.h"
#include "kbanon/synth.h"
#include "test_util.h"

namespace kbanon {
namespace {

std::shared_ptr<const EntityExtractor> lexicon_extractor(Lexicon lex) {
  return std::make_shared<ReferenceExtractor>(std::move(lex), std::vector<std::string>{});
}

const Lexicon kPeople{{"Alice Smith", "person full name"},
                      {"Bob Jones", "person full name"},
                      {"diabetes", "disease"},
                      {"likes tea", "hobby"}};

class CountingEmbedder final : public Embedder {
 public:
  std::size_t dim() const override { return inner_.dim(); }
  std::vector<Vector> embed(std::span<const std::string> texts) const override {
    ++calls;
    return inner_.embed(texts);
  }
  mutable std::atomic<int> calls{0};

 private:
  ReferenceEmbedder inner_;
};

class CountingScorer final : public PrivacyScorer {
 public:
  explicit CountingScorer(std::shared_ptr<const PrivacyScorer> inner) : inner_(std::move(inner)) {}
  std::vector<double> score(std::span<const std::string> texts) const override {
    ++calls;
    return inner_->score(texts);
  }
  mutable std::atomic<int> calls{0};

 private:
  std::shared_ptr<const PrivacyScorer> inner_;
};

TEST(PrivacyScore, NoisyOrExamples) {
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), lexicon_extractor(kPeople));
  EXPECT_EQ(scorer.score_one("nothing sensitive"), 0.0);
  EXPECT_NEAR(scorer.score_one("Alice Smith called"), 0.85, 1e-12);
  EXPECT_NEAR(scorer.score_one("Alice Smith called Bob Jones"), 1.0 - 0.15 * 0.15, 1e-12);
  EXPECT_NEAR(scorer.score_one("Alice Smith called Bob Jones"), 0.9775, 1e-12);
}

TEST(PrivacyScore, ThroughSpecs) {
  const PrivacyScorerSpec spec;
  const ExtractorSpec ex{BackendKind::kReference, {},
                         testing::source_path("data/sample_lexicon.json"), std::nullopt};
  EXPECT_NEAR(privacy_score_text(spec, "Alice Smith", ex), 0.85, 1e-12);
  EXPECT_EQ(privacy_score_text(spec, "plain words", ex), 0.0);
}

TEST(PrivacyScore, UnknownLabelsCountAsZeroAndAreRecorded) {
  const ReferencePrivacyScorer scorer(
      default_risk_lexicon(),
      std::make_shared<ReferenceExtractor>(kPeople, std::vector<std::string>{"hobby"}));
  EXPECT_EQ(scorer.score_one("she likes tea"), 0.0);
  EXPECT_EQ(scorer.unknown_labels(), (std::set<std::string>{"hobby"}));
  EXPECT_EQ(scorer.unknown_label_hits(), 1u);
}

TEST(PrivacyScore, RejectsOutOfRangeRisk) {
  PrivacyScorerSpec spec;
  spec.lexicon["person full name"] = 1.5;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(MarginalRisk, SingleAndPairedEntities) {
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), lexicon_extractor(kPeople));
  Document one{"1", "Alice Smith called", {}, {}};
  one.entities = {testing::entity_at(one.text, "Alice Smith", "person full name")};
  EXPECT_NEAR(marginal_privacy_risk(one, one.entities[0], scorer), 0.85, 1e-12);

  Document two{"2", "Alice Smith called Bob Jones", {}, {}};
  two.entities = {testing::entity_at(two.text, "Alice Smith", "person full name"),
                  testing::entity_at(two.text, "Bob Jones", "person full name")};
  EXPECT_NEAR(marginal_privacy_risk(two, two.entities[0], scorer), 0.9775 - 0.85, 1e-12);
  EXPECT_NEAR(marginal_privacy_risk(two, two.entities[0], scorer), 0.1275, 1e-12);
}

TEST(MarginalRisk, ZeroRiskLabelGivesZero) {
  RiskLexicon risks = default_risk_lexicon();
  risks["hobby"] = 0.0;
  const ReferencePrivacyScorer scorer(risks, lexicon_extractor(kPeople));
  Document d{"d", "Alice Smith likes tea", {}, {}};
  d.entities = {testing::entity_at(d.text, "likes tea", "hobby")};
  EXPECT_EQ(marginal_privacy_risk(d, d.entities[0], scorer), 0.0);
}

TEST(MarginalRisk, SubAdditiveUnderNoisyOr) {
  // Risk of `a` with `b` present never exceeds its risk once `b` is masked.
  const Lexicon lex{{"alpha", "person full name"}, {"bravo", "disease"},
                    {"charlie", "city name"},      {"delta", "person age"},
                    {"echo", "gender"},            {"foxtrot", "phone number"}};
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), lexicon_extractor(lex));
  const ReferenceExtractor ex(lex, {});
  std::vector<std::string> words;
  for (const auto& [w, l] : lex) words.push_back(w);
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::string text = "note";
    const auto n = 2 + rng() % 5;
    for (std::size_t i = 0; i < n; ++i) text += " " + words[rng() % words.size()];
    Document doc{"r", text, ex.extract(text), {}};
    for (std::size_t a = 0; a < doc.entities.size(); ++a) {
      for (std::size_t b = 0; b < doc.entities.size(); ++b) {
        if (a == b) continue;
        const double with_b = marginal_privacy_risk(doc, doc.entities[a], scorer);
        Document without{"r", mask_entity(doc.text, doc.entities[b], kMaskToken), {}, {}};
        without.entities = ex.extract(without.text);
        const auto& ea = doc.entities[a];
        const long shift = b < a ? static_cast<long>(doc.entities[b].span.length()) -
                                       static_cast<long>(kMaskToken.size())
                                 : 0;
        Entity moved = ea;
        moved.span = Span{static_cast<std::size_t>(static_cast<long>(ea.span.start) - shift),
                          static_cast<std::size_t>(static_cast<long>(ea.span.end) - shift)};
        const double without_b = marginal_privacy_risk(without, moved, scorer);
        EXPECT_LE(with_b, without_b + 1e-12) << text;
      }
    }
  }
}

TEST(KnowledgeDivergence, Examples) {
  const ReferenceEmbedder emb;
  Document d{"d", "alice has diabetes", {}, {}};
  d.entities = {testing::entity_at(d.text, "alice", "person full name")};
  const double got = knowledge_divergence_raw(d, d.entities[0], emb);
  // Direct evaluation of 1 - cos(E(T), E(masked T)).
  const double expected =
      1.0 - cosine_similarity(emb.embed_one("alice has diabetes"), emb.embed_one("[MASK] has diabetes"));
  EXPECT_EQ(got, expected);
  EXPECT_GT(got, 0.0);

  // Only the placeholder token survives, so the two vectors share nothing.
  Document whole{"w", "alice", {}, {}};
  whole.entities = {testing::entity_at(whole.text, "alice", "person full name")};
  const double w = knowledge_divergence_raw(whole, whole.entities[0], emb);
  EXPECT_EQ(w, 1.0 - cosine_similarity(emb.embed_one("alice"), emb.embed_one("[MASK]")));
  EXPECT_GE(w, 0.0);
  EXPECT_LE(w, 2.0);
}

TEST(TopicalRelevance, Examples) {
  const ReferenceEmbedder emb;
  Document self{"s", "diabetes", {}, {}};
  self.entities = {testing::entity_at(self.text, "diabetes", "disease")};
  EXPECT_EQ(topical_relevance_raw(self, self.entities[0], emb), 0.0);

  Document d{"d", "alice has diabetes and diabetes care", {}, {}};
  d.entities = {testing::entity_at(d.text, "diabetes", "disease"),
                testing::entity_at(d.text, "alice", "person full name")};
  const double on_topic = topical_relevance_raw(d, d.entities[0], emb);
  const double off_topic = topical_relevance_raw(d, d.entities[1], emb);
  EXPECT_EQ(on_topic, -l2_distance(emb.embed_one("diabetes"), emb.embed_one(d.text)));
  EXPECT_LT(on_topic, 0.0);
  EXPECT_GT(on_topic, off_topic);

  // Orthogonal unit vectors sit sqrt(2) apart.
  EXPECT_NEAR(-l2_distance(Vector({1.0, 0.0}), Vector({0.0, 1.0})), -std::sqrt(2.0), 1e-15);
}

TEST(NormalizeScores, Examples) {
  EXPECT_EQ(normalize_scores(std::vector<double>{1, 2, 3}), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(normalize_scores(std::vector<double>{7, 7}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(normalize_scores(std::vector<double>{-3, -1}), (std::vector<double>{0, 1}));
  EXPECT_THROW(normalize_scores(std::vector<double>{}), InvalidArgument);
  EXPECT_THROW(normalize_scores(std::vector<double>{1, std::nan("")}), InvalidArgument);
}

TEST(NormalizeScores, IdempotentOnUnitRange) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> v{0.0, 1.0};
    for (int i = 0; i < 6; ++i) v.push_back(u(rng));
    std::shuffle(v.begin(), v.end(), rng);
    EXPECT_EQ(normalize_scores(v), v);
  }
}

TEST(PriorityScore, Examples) {
  const Weights defaults{1.0, 0.5, 0.4};
  ScoreVector s;
  s.s_priv = 0.8;
  s.s_retr = 0.4;
  s.s_knw = 0.5;
  EXPECT_NEAR(priority_score(s, defaults), 0.4, 1e-12);
  EXPECT_EQ(priority_score(ScoreVector{}, defaults), 0.0);
  ScoreVector only_priv;
  only_priv.s_priv = 1.0;
  EXPECT_EQ(priority_score(only_priv, defaults), 1.0);
}

TEST(PriorityScore, ScalingWeightsPreservesRankingAndScaledThreshold) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Weights w{1.0, 0.5, 0.4};
  for (double c : {0.25, 2.0, 7.5}) {
    const Weights wc{c * w.alpha, c * w.beta, c * w.gamma};
    std::vector<ScoreVector> ss(12);
    for (auto& s : ss) {
      s.s_priv = u(rng);
      s.s_retr = u(rng);
      s.s_knw = u(rng);
    }
    std::vector<std::size_t> order(ss.size()), order_c(ss.size());
    std::iota(order.begin(), order.end(), 0);
    std::iota(order_c.begin(), order_c.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) {
      return priority_score(ss[a], w) < priority_score(ss[b], w);
    });
    std::sort(order_c.begin(), order_c.end(), [&](auto a, auto b) {
      return priority_score(ss[a], wc) < priority_score(ss[b], wc);
    });
    EXPECT_EQ(order, order_c);
    const double tau = 0.1;
    for (const auto& s : ss) {
      EXPECT_EQ(priority_score(s, w) > tau, priority_score(s, wc) > c * tau);
    }
  }
}

TEST(ScoreDocument, EmptyAndSingleEntity) {
  const ReferenceEmbedder emb;
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), lexicon_extractor(kPeople));
  Document empty{"e", "no entities", {}, {}};
  EXPECT_EQ(score_document(empty, Weights{}, emb, scorer), empty);

  Document one{"o", "Alice Smith called", {}, {}};
  one.entities = {testing::entity_at(one.text, "Alice Smith", "person full name")};
  const auto scored = score_document(one, Weights{}, emb, scorer);
  ASSERT_TRUE(scored.entities[0].scores);
  EXPECT_EQ(scored.entities[0].scores->s_knw, 0.5);
  EXPECT_EQ(scored.entities[0].scores->s_retr, 0.5);
  EXPECT_NEAR(scored.entities[0].scores->s_priv, 0.85, 1e-12);
}

TEST(ScoreDocument, OneEmbedCallAndOneScorerCall) {
  const CountingEmbedder emb;
  const CountingScorer scorer(
      std::make_shared<ReferencePrivacyScorer>(default_risk_lexicon(), lexicon_extractor(kPeople)));
  Document d{"d", "Alice Smith and Bob Jones discussed diabetes", {}, {}};
  d.entities = ReferenceExtractor(kPeople, {}).extract(d.text);
  ASSERT_EQ(d.entities.size(), 3u);
  score_document(d, Weights{}, emb, scorer);
  EXPECT_EQ(emb.calls, 1);
  EXPECT_EQ(scorer.calls, 1);
}

TEST(ScoreDocument, ThreeEntitiesMatchScriptedEvaluation) {
  const ReferenceEmbedder emb;
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), lexicon_extractor(kPeople));
  Document d{"d", "Alice Smith has diabetes and met Bob Jones about diabetes care", {}, {}};
  d.entities = ReferenceExtractor(kPeople, {}).extract(d.text);
  ASSERT_EQ(d.entities.size(), 4u);
  d.entities.pop_back();  // keep three: Alice Smith, diabetes, Bob Jones
  const Weights w{1.0, 0.5, 0.4};
  const auto scored = score_document(d, w, emb, scorer);

  // Scripted oracle: each quantity from its defining formula, one at a time.
  std::vector<double> priv, knw, retr;
  for (const auto& e : d.entities) {
    priv.push_back(scorer.score_one(d.text) - scorer.score_one(mask_entity(d.text, e, "[MASK]")));
    knw.push_back(1.0 - cosine_similarity(emb.embed_one(d.text),
                                          emb.embed_one(mask_entity(d.text, e, "[MASK]"))));
    retr.push_back(-l2_distance(emb.embed_one(e.surface), emb.embed_one(d.text)));
  }
  auto minmax = [](std::vector<double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double a = *lo, b = *hi;
    for (double& x : v) x = a == b ? 0.5 : (x - a) / (b - a);
    return v;
  };
  const auto knw_n = minmax(knw), retr_n = minmax(retr);
  std::vector<double> psi(3);
  for (int i = 0; i < 3; ++i) psi[i] = priv[i] - 0.5 * retr_n[i] - 0.4 * knw_n[i];

  for (int i = 0; i < 3; ++i) {
    const auto& s = *scored.entities[i].scores;
    EXPECT_NEAR(s.s_priv, priv[i], 1e-12);
    EXPECT_NEAR(s.s_knw, knw_n[i], 1e-12);
    EXPECT_NEAR(s.s_retr, retr_n[i], 1e-12);
    EXPECT_NEAR(s.psi, psi[i], 1e-12);
  }
  std::vector<int> expected_order{0, 1, 2}, got_order{0, 1, 2};
  std::sort(expected_order.begin(), expected_order.end(),
            [&](int a, int b) { return psi[a] > psi[b]; });
  std::sort(got_order.begin(), got_order.end(), [&](int a, int b) {
    return scored.entities[a].scores->psi > scored.entities[b].scores->psi;
  });
  EXPECT_EQ(expected_order, got_order);
}

TEST(Reprioritize, MatchesRescoring) {
  const ReferenceEmbedder emb;
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), lexicon_extractor(kPeople));
  Document d{"d", "Alice Smith has diabetes and met Bob Jones", {}, {}};
  d.entities = ReferenceExtractor(kPeople, {}).extract(d.text);
  auto a = score_document(d, Weights{1.0, 0.5, 0.4}, emb, scorer);
  reprioritize(a, Weights{1.0, 0.9, 0.1});
  const auto b = score_document(d, Weights{1.0, 0.9, 0.1}, emb, scorer);
  EXPECT_EQ(a, b);
  Document unscored = d;
  EXPECT_THROW(reprioritize(unscored, Weights{}), InvalidArgument);
}

TEST(FeatureOverlap, SyntheticCorpusStaysDecorrelated) {
  const auto synth = generate_corpus(SynthSpec{});
  const auto extractor = std::make_shared<ReferenceExtractor>(synth.lexicon, std::vector<std::string>{});
  const ReferenceEmbedder emb;
  const ReferencePrivacyScorer scorer(default_risk_lexicon(), extractor);
  std::vector<Document> scored;
  for (auto d : synth.corpus.docs) {
    d.entities = extractor->extract(d.text);
    scored.push_back(score_document(d, Weights{}, emb, scorer));
  }
  const auto rho = feature_overlap(scored);
  ASSERT_EQ(rho.size(), 3u);
  for (const auto& [pair, r] : rho) {
    SCOPED_TRACE(pair);
    EXPECT_LE(std::abs(r), 0.75);
  }
}

}  // namespace
}  // namespace kbanon
