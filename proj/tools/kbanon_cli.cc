// Command-line front end: anonymize corpora, inspect scores, evaluate and
// sweep.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "kbanon/corpus.h"
#include "kbanon/error.h"
#include "kbanon/eval.h"
#include "kbanon/harness.h"
#include "kbanon/pipeline.h"
#include "kbanon/select.h"
#include "kbanon/synth.h"

namespace {

using nlohmann::json;
using namespace kbanon;

constexpr int kExitFailures = 1;
constexpr int kExitError = 2;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& ex) {
    throw FormatError(path + " is not valid JSON: " + ex.what());
  }
}

AnonymizedCorpus as_anonymized(const Corpus& c) {
  AnonymizedCorpus out;
  for (const auto& d : c.docs) out.docs.push_back(AnonymizedDocument{d.id, d.text, {}, {}});
  return out;
}

struct CorpusArgs {
  std::string in;
  std::string text_field = "text";
  std::string id_field = "id";

  void attach(CLI::App* cmd) {
    cmd->add_option("--in", in, "input corpus (JSONL)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--text-field", text_field, "JSON field holding the text");
    cmd->add_option("--id-field", id_field, "JSON field holding the id");
  }
  Corpus load() const { return load_corpus(in, text_field, id_field); }
};

int report_failures(const PipelineSummary& summary) {
  for (const auto& d : summary.docs) {
    if (!d.error.empty()) std::cerr << "document " << d.id << " failed: " << d.error << '\n';
  }
  return summary.failures == 0 ? 0 : kExitFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge-base anonymization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  CorpusArgs corpus_args;
  std::string out_path;

  // anonymize
  auto* anonymize = app.add_subcommand("anonymize", "Anonymize a corpus with a config");
  std::string summary_path;
  std::optional<double> tau_override;
  anonymize->add_option("--config", config_path, "pipeline config")->required();
  corpus_args.attach(anonymize);
  anonymize->add_option("--out", out_path, "anonymized corpus (JSONL)")->required();
  anonymize->add_option("--summary", summary_path, "per-document summary (JSON)");
  anonymize->add_option("--tau", tau_override, "override the configured threshold");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "Produce an origin or redact baseline");
  std::string baseline_kind;
  baseline->add_option("--kind", baseline_kind, "origin or redact")->required();
  baseline->add_option("--config", config_path, "pipeline config")->required();
  corpus_args.attach(baseline);
  baseline->add_option("--out", out_path, "output corpus (JSONL)")->required();

  // score
  auto* score = app.add_subcommand("score", "Emit per-entity score vectors as JSONL");
  score->add_option("--config", config_path, "pipeline config")->required();
  corpus_args.attach(score);
  score->add_option("--out", out_path, "output JSONL (default stdout)");

  // calibrate
  auto* calibrate = app.add_subcommand("calibrate", "Derive tau from annotated samples");
  std::string samples_path;
  double margin = 0.01;
  calibrate->add_option("--config", config_path, "pipeline config")->required();
  corpus_args.attach(calibrate);
  calibrate->add_option("--samples", samples_path, "calibration records (JSONL)")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--margin", margin, "subtracted from the lowest critical score");

  // index
  auto* index = app.add_subcommand("index", "Build a flat vector index");
  index->add_option("--config", config_path, "pipeline config")->required();
  corpus_args.attach(index);
  index->add_option("--out", out_path, "index (JSON)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate an anonymized corpus");
  std::string eval_kind, orig_path, anon_path, queries_path, attacks_path, report_path;
  std::vector<std::size_t> ks{1, 5, 10};
  std::size_t leak_k = 5;
  eval->add_option("kind", eval_kind, "retrieval | utility | leakage | overlap")
      ->required()
      ->check(CLI::IsMember({"retrieval", "utility", "leakage", "overlap"}));
  eval->add_option("--config", config_path, "pipeline config")->required();
  eval->add_option("--orig", orig_path, "original corpus (JSONL)")->required();
  eval->add_option("--anon", anon_path, "anonymized corpus (JSONL)");
  eval->add_option("--queries", queries_path, "retrieval queries (JSONL)");
  eval->add_option("--attacks", attacks_path, "attack queries (JSONL)");
  eval->add_option("--k", ks, "cutoffs for Recall@k");
  eval->add_option("--leak-k", leak_k, "retrieved contexts per attack");
  eval->add_option("--report", report_path, "report (JSON, default stdout)");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over beta and gamma");
  std::string grid_path, csv_path, calibration_path;
  sweep_cmd->add_option("--config", config_path, "pipeline config")->required();
  sweep_cmd->add_option("--grid", grid_path, "grid spec (JSON)")->required();
  corpus_args.attach(sweep_cmd);
  sweep_cmd->add_option("--queries", queries_path, "retrieval queries (JSONL)")->required();
  sweep_cmd->add_option("--attacks", attacks_path, "attack queries (JSONL)");
  sweep_cmd->add_option("--calibration", calibration_path, "records for tau_policy calibrate");
  sweep_cmd->add_option("--out", out_path, "grid report (JSON)")->required();
  sweep_cmd->add_option("--csv", csv_path, "grid report (CSV)");

  // exact-compare
  auto* exact = app.add_subcommand("exact-compare", "Compare threshold selection to the exact optimum");
  exact->add_option("--config", config_path, "pipeline config")->required();
  corpus_args.attach(exact);
  exact->add_option("--out", out_path, "gap report (JSON, default stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a seeded synthetic corpus");
  SynthSpec synth_spec;
  std::string synth_dir, label_mix_path;
  synth->add_option("--seed", synth_spec.seed, "generator seed")->required();
  synth->add_option("--n-docs", synth_spec.n_docs, "number of documents");
  synth->add_option("--min-entities", synth_spec.min_entities, "entities per document, low");
  synth->add_option("--max-entities", synth_spec.max_entities, "entities per document, high");
  synth->add_option("--vocab-size", synth_spec.vocab_size, "distinctive word pool");
  synth->add_option("--label-mix", label_mix_path, "label -> probability (JSON)");
  synth->add_option("--out-dir", synth_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; usage errors share the generic error code.
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*synth) {
      if (!label_mix_path.empty()) {
        synth_spec.label_mix = read_json(label_mix_path).get<std::map<std::string, double>>();
      }
      const auto generated = generate_corpus(synth_spec);
      write_synth(generated, synth_dir);
      // A ready-to-use config next to the generated lexicon.
      json cfg{{"extractor", {{"kind", "reference"}, {"lexicon_path", "lexicon.json"}}},
               {"seed", synth_spec.seed}};
      write_text((std::filesystem::path(synth_dir) / "config.json").string(), cfg.dump(2) + "\n");
      std::cerr << "wrote " << generated.corpus.docs.size() << " documents to " << synth_dir
                << '\n';
      return 0;
    }

    auto config = load_config(config_path);

    if (*anonymize) {
      if (tau_override) config.tau = *tau_override;
      config.validate();
      const auto result = run_pipeline(config, corpus_args.in, out_path, corpus_args.text_field,
                                       corpus_args.id_field);
      if (!summary_path.empty()) write_text(summary_path, result.summary.to_json().dump(2) + "\n");
      return report_failures(result.summary);
    }

    const auto backends = Backends::from_config(config);

    if (*baseline) {
      const auto corpus = corpus_args.load();
      const auto out = run_baseline(parse_baseline(baseline_kind), corpus, backends);
      write_corpus(out, out_path, corpus_args.text_field);
      return 0;
    }

    if (*score) {
      const auto corpus = corpus_args.load();
      const auto outcomes = score_corpus(corpus, backends, config.weights, config.workers);
      std::ostringstream buf;
      std::size_t failures = 0;
      for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (!outcomes[i].scored) {
          ++failures;
          buf << json{{"id", corpus.docs[i].id}, {"error", outcomes[i].error}}.dump() << '\n';
          continue;
        }
        json ents = json::array();
        for (const auto& e : outcomes[i].scored->entities) ents.push_back(to_json(e));
        buf << json{{"id", corpus.docs[i].id}, {"entities", std::move(ents)}}.dump() << '\n';
      }
      write_text(out_path, buf.str());
      return failures == 0 ? 0 : kExitFailures;
    }

    if (*calibrate) {
      const auto corpus = corpus_args.load();
      const auto outcomes = score_corpus(corpus, backends, config.weights, config.workers);
      const auto samples = calibration_samples(load_calibration(samples_path), outcomes);
      const double tau = calibrate_threshold(samples, margin);
      std::cout << json{{"tau", tau}, {"margin", margin}, {"samples", samples.size()}}.dump(2)
                << '\n';
      return 0;
    }

    if (*index) {
      const auto corpus = corpus_args.load();
      const auto idx = build_index(corpus, *backends.embedder, config.retrieval.metric);
      write_text(out_path, idx.to_json().dump() + "\n");
      return 0;
    }

    if (*eval) {
      const auto orig = load_corpus(orig_path);
      EvalReport report;
      if (eval_kind == "overlap") {
        const auto outcomes = score_corpus(orig, backends, config.weights, config.workers);
        std::vector<Document> scored;
        for (const auto& o : outcomes) {
          if (o.scored) scored.push_back(*o.scored);
        }
        report.spearman = feature_overlap(scored);
      } else {
        if (anon_path.empty()) throw ConfigError("eval " + eval_kind + " needs --anon");
        const auto anon = as_anonymized(load_corpus(anon_path));
        std::vector<std::string> queries;
        std::vector<AttackQuery> attacks;
        if (eval_kind == "retrieval") {
          if (queries_path.empty()) throw ConfigError("eval retrieval needs --queries");
          queries = load_queries(queries_path);
        }
        if (eval_kind == "leakage") {
          if (attacks_path.empty()) throw ConfigError("eval leakage needs --attacks");
          attacks = load_attack_queries(attacks_path);
        }
        const Evaluator evaluator(orig, queries, attacks, backends.embedder,
                                  config.retrieval.metric, ks, leak_k);
        const auto full = evaluator.evaluate(anon);
        report.config = full.config;
        if (eval_kind == "retrieval") report.recall_at_k = full.recall_at_k;
        if (eval_kind == "utility") {
          report.bleu = full.bleu;
          report.rouge_l = full.rouge_l;
        }
        if (eval_kind == "leakage") report.leakage_rate = full.leakage_rate;
        report.notes = full.notes;
      }
      json j = report.to_json();
      // Only the requested metric family is reported.
      const std::map<std::string, std::vector<std::string>> unrelated{
          {"retrieval", {"bleu", "rouge_l", "leakage_rate", "spearman"}},
          {"utility", {"recall_at_k", "leakage_rate", "spearman"}},
          {"leakage", {"recall_at_k", "bleu", "rouge_l", "spearman"}},
          {"overlap", {"recall_at_k", "bleu", "rouge_l", "leakage_rate"}}};
      for (const auto& key : unrelated.at(eval_kind)) j.erase(key);
      j["kind"] = eval_kind;
      write_text(report_path, j.dump(2) + "\n");
      return 0;
    }

    if (*sweep_cmd) {
      auto spec = parse_sweep_spec(read_json(grid_path));
      if (spec.tau_policy == TauPolicy::kCalibrate) {
        if (calibration_path.empty()) throw ConfigError("tau_policy calibrate needs --calibration");
        spec.calibration = load_calibration(calibration_path);
      }
      const auto corpus = corpus_args.load();
      const auto outcomes = score_corpus(corpus, backends, config.weights, config.workers);
      std::vector<AttackQuery> attacks;
      if (!attacks_path.empty()) attacks = load_attack_queries(attacks_path);
      const Evaluator evaluator(corpus, load_queries(queries_path), attacks, backends.embedder,
                                config.retrieval.metric);
      const auto result =
          sweep(outcomes, spec, backends.map, config.optimize, evaluator, config.workers);
      write_text(out_path, result.to_json().dump(2) + "\n");
      if (!csv_path.empty()) write_text(csv_path, result.to_csv());
      std::size_t failed = 0;
      for (const auto& c : result.cells) failed += c.report ? 0 : 1;
      for (const auto& o : outcomes) failed += o.scored ? 0 : 1;
      return failed == 0 ? 0 : kExitFailures;
    }

    if (*exact) {
      const auto corpus = corpus_args.load();
      const auto outcomes = score_corpus(corpus, backends, config.weights, config.workers);
      std::vector<Document> scored;
      std::size_t failures = 0;
      for (const auto& o : outcomes) {
        if (o.scored) {
          scored.push_back(*o.scored);
        } else {
          ++failures;
        }
      }
      const auto report = greedy_gap_report(scored, config.tau, config.weights, config.optimize);
      write_text(out_path, report.to_json().dump(2) + "\n");
      return failures == 0 ? 0 : kExitFailures;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return 0;
}
