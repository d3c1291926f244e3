#include "kbanon/pipeline.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kbanon/error.h"
#include "test_util.h"

namespace kbanon {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PipelineConfig sample_config() {
  return load_config(testing::source_path("configs/default.json"));
}

Corpus sample_corpus() { return load_corpus(testing::source_path("data/sample_corpus.jsonl")); }

// Reference embedder that refuses any batch containing `poison`.
class PoisonedEmbedder final : public Embedder {
 public:
  explicit PoisonedEmbedder(std::string poison) : poison_(std::move(poison)) {}
  std::size_t dim() const override { return inner_.dim(); }
  std::vector<Vector> embed(std::span<const std::string> texts) const override {
    for (const auto& t : texts) {
      if (t.find(poison_) != std::string::npos) throw TransportError("embedder unavailable");
    }
    return inner_.embed(texts);
  }

 private:
  std::string poison_;
  ReferenceEmbedder inner_;
};

TEST(Config, DefaultFileLoads) {
  const auto c = sample_config();
  EXPECT_EQ(c.weights, (Weights{1.0, 0.5, 0.4}));
  EXPECT_EQ(c.tau, 0.6237);
  EXPECT_EQ(c.retrieval.k, 5u);
  EXPECT_EQ(c.optimize.min_delta, 16);
  EXPECT_EQ(c.embedder.dim, 256u);
  ASSERT_TRUE(c.extractor.lexicon_path);
  EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsUnknownKeysAtEveryLevel) {
  const nlohmann::json ok{
      {"extractor", {{"lexicon_path", testing::source_path("data/sample_lexicon.json")}}}};
  EXPECT_NO_THROW(parse_config(ok));
  auto top = ok;
  top["tua"] = 0.5;
  EXPECT_THROW(parse_config(top), ConfigError);
  auto weights = ok;
  weights["weights"] = {{"delta", 1.0}};
  EXPECT_THROW(parse_config(weights), ConfigError);
  auto nested = ok;
  nested["extractor"]["lexicon"] = "x";
  EXPECT_THROW(parse_config(nested), ConfigError);
}

TEST(Config, TauAcceptsInfinityStrings) {
  const auto lex = testing::source_path("data/sample_lexicon.json");
  nlohmann::json j{{"tau", "-inf"}, {"extractor", {{"lexicon_path", lex}}}};
  EXPECT_EQ(parse_config(j).tau, -kInf);
  j["tau"] = "+inf";
  EXPECT_EQ(parse_config(j).tau, kInf);
  j["tau"] = "lots";
  EXPECT_THROW(parse_config(j), ConfigError);
  j["tau"] = 0.25;
  const auto c = parse_config(j);
  EXPECT_EQ(parse_config(c.to_json()).tau, 0.25);
}

TEST(Config, InvalidValues) {
  auto c = sample_config();
  c.retrieval.k = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = sample_config();
  c.tau = std::nan("");
  EXPECT_THROW(c.validate(), ConfigError);
  c = sample_config();
  c.extractor.lexicon_path = "/does/not/exist.json";
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(load_config("/does/not/exist.json"), ConfigError);
}

TEST(Pipeline, NegativeInfinityEqualsRedact) {
  auto config = sample_config();
  config.tau = -kInf;
  const auto backends = Backends::from_config(config);
  const auto corpus = sample_corpus();
  const auto thresholded = run_pipeline(config, corpus, backends);
  const auto redact = run_baseline(BaselineKind::kRedact, corpus, backends);
  ASSERT_EQ(thresholded.anonymized.docs.size(), redact.docs.size());
  for (std::size_t i = 0; i < redact.docs.size(); ++i) {
    EXPECT_EQ(thresholded.anonymized.docs[i].text, redact.docs[i].text);
  }
}

TEST(Pipeline, PositiveInfinityKeepsText) {
  auto config = sample_config();
  config.tau = kInf;
  const auto backends = Backends::from_config(config);
  const auto corpus = sample_corpus();
  const auto out = run_pipeline(config, corpus, backends);
  const auto origin = run_baseline(BaselineKind::kOrigin, corpus, backends);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    EXPECT_EQ(out.anonymized.docs[i].text, corpus.docs[i].text);
    EXPECT_EQ(origin.docs[i].text, corpus.docs[i].text);
    EXPECT_TRUE(out.anonymized.docs[i].generalized.empty());
  }
}

TEST(Pipeline, RedactGeneralizesEverythingThresholdDoes) {
  auto config = sample_config();
  config.tau = 0.0;
  const auto backends = Backends::from_config(config);
  const auto corpus = sample_corpus();
  const auto thresholded = run_pipeline(config, corpus, backends);
  const auto redact = run_baseline(BaselineKind::kRedact, corpus, backends);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    std::set<std::pair<std::size_t, std::size_t>> all;
    for (const auto& g : redact.docs[i].generalized) all.insert({g.entity.span.start, g.entity.span.end});
    for (const auto& g : thresholded.anonymized.docs[i].generalized) {
      EXPECT_EQ(all.count({g.entity.span.start, g.entity.span.end}), 1u);
    }
  }
}

TEST(Pipeline, DeterministicAcrossRunsAndWorkers) {
  auto config = sample_config();
  config.tau = 0.0;
  const auto backends = Backends::from_config(config);
  Corpus corpus = sample_corpus();
  for (int rep = 0; rep < 5; ++rep) {
    for (auto d : sample_corpus().docs) {
      d.id += "-" + std::to_string(rep);
      corpus.docs.push_back(d);
    }
  }
  const auto one = run_pipeline(config, corpus, backends);
  config.workers = 4;
  const auto four = run_pipeline(config, corpus, backends);
  EXPECT_EQ(one.anonymized.docs, four.anonymized.docs);
  EXPECT_EQ(one.summary.to_json(), four.summary.to_json());
  ASSERT_EQ(four.anonymized.docs.size(), corpus.docs.size());
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    EXPECT_EQ(four.anonymized.docs[i].id, corpus.docs[i].id);
  }
}

TEST(Pipeline, FailuresAreCountedAndOmitted) {
  auto config = sample_config();
  auto backends = Backends::from_config(config);
  backends.embedder = std::make_shared<PoisonedEmbedder>("headache");
  const auto corpus = sample_corpus();
  const auto out = run_pipeline(config, corpus, backends);
  EXPECT_EQ(out.summary.failures, 1u);
  ASSERT_EQ(out.anonymized.docs.size(), 2u);
  EXPECT_EQ(out.anonymized.docs[0].id, "n1");
  EXPECT_EQ(out.anonymized.docs[1].id, "n3");
  const auto failed = std::find_if(out.summary.docs.begin(), out.summary.docs.end(),
                                   [](const DocSummary& s) { return !s.error.empty(); });
  ASSERT_NE(failed, out.summary.docs.end());
  EXPECT_EQ(failed->id, "n2");
}

TEST(Pipeline, EndToEndFromFiles) {
  testing::TempDir dir;
  const auto config = sample_config();
  const auto result = run_pipeline(config, testing::source_path("data/sample_corpus.jsonl"),
                                   dir.file("out.jsonl"));
  const auto back = load_corpus(dir.file("out.jsonl"));
  ASSERT_EQ(back.docs.size(), 3u);
  EXPECT_EQ(back.docs[0].text, result.anonymized.docs[0].text);
  EXPECT_EQ(result.summary.tau, 0.6237);
}

TEST(Pipeline, SummaryEntropyUsesMinDelta) {
  auto config = sample_config();
  config.tau = -kInf;
  const auto backends = Backends::from_config(config);
  const auto out = run_pipeline(config, sample_corpus(), backends);
  for (std::size_t i = 0; i < out.summary.docs.size(); ++i) {
    const auto& s = out.summary.docs[i];
    EXPECT_EQ(s.n_generalized, s.n_entities);
    EXPECT_NEAR(s.entropy_bits, 4.0 * static_cast<double>(s.n_generalized), 1e-12);
  }
}

TEST(Calibration, RecordsPairWithScoredDocuments) {
  testing::TempDir dir;
  const std::vector<CalibrationRecord> recs{{"n1", {0}}, {"n2", {0, 1}}};
  write_calibration(recs, dir.file("c.jsonl"));
  const auto back = load_calibration(dir.file("c.jsonl"));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].critical, (std::set<std::size_t>{0, 1}));

  const auto config = sample_config();
  const auto backends = Backends::from_config(config);
  const auto scored = score_corpus(sample_corpus(), backends, config.weights, 1);
  const auto samples = calibration_samples(back, scored);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0].doc.id, "n1");
  EXPECT_THROW(calibration_samples({{"nope", {0}}}, scored), InvalidArgument);
  EXPECT_THROW(calibration_samples({{"n3", {40}}}, scored), InvalidArgument);
}

TEST(Baseline, ParseNames) {
  EXPECT_EQ(parse_baseline("origin"), BaselineKind::kOrigin);
  EXPECT_EQ(parse_baseline("redact"), BaselineKind::kRedact);
  EXPECT_THROW(parse_baseline("shuffle"), ConfigError);
}

}  // namespace
}  // namespace kbanon
