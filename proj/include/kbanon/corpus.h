#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kbanon {

// Half-open byte range [start, end) into a UTF-8 text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool overlaps(const Span& other) const {
    return start < other.end && other.start < end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

// Per-entity quantification. Raw fields are the unnormalized measurements,
// s_knw / s_retr are their per-document min-max normalized counterparts and
// psi is the weighted priority computed from s_priv, s_retr and s_knw.
struct ScoreVector {
  double s_priv = 0.0;
  double s_knw_raw = 0.0;
  double s_retr_raw = 0.0;
  double s_knw = 0.0;
  double s_retr = 0.0;
  double psi = 0.0;

  friend bool operator==(const ScoreVector&, const ScoreVector&) = default;
};

struct Entity {
  std::string surface;
  std::string label;
  Span span;
  std::optional<ScoreVector> scores;

  friend bool operator==(const Entity&, const Entity&) = default;
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Entity> entities;  // sorted by span.start, non-overlapping
  std::map<std::string, std::string> meta;

  friend bool operator==(const Document&, const Document&) = default;
};

struct GeneralizedEntity {
  Entity entity;
  std::string descriptor;

  friend bool operator==(const GeneralizedEntity&,
                         const GeneralizedEntity&) = default;
};

struct AnonymizedDocument {
  std::string id;
  std::string text;
  std::vector<GeneralizedEntity> generalized;
  std::vector<Entity> kept;  // spans refer to the source document text

  friend bool operator==(const AnonymizedDocument&,
                         const AnonymizedDocument&) = default;
};

struct Corpus {
  std::vector<Document> docs;
  std::string source_path;
};

struct AnonymizedCorpus {
  std::vector<AnonymizedDocument> docs;
};

// Checks the entity invariants of `doc`: start < end, non-empty labels, spans
// inside the text, strictly increasing and non-overlapping, and
// surface == text[span]. Throws InvalidArgument naming the offending entity.
void validate_document(const Document& doc);

// Throws FormatError if two documents share an id.
void validate_unique_ids(const std::vector<Document>& docs);

// Reads a JSONL corpus. Each non-blank line must be a JSON object holding
// `text_field`. When `id_field` is absent from a line (or not configured) the
// zero-based line index is used as id. Optional "entities" and "meta" keys are
// read back as written by write_corpus.
Corpus load_corpus(const std::string& path, const std::string& text_field = "text",
                   const std::optional<std::string>& id_field = "id");

void write_corpus(const Corpus& corpus, const std::string& path,
                  const std::string& text_field = "text");
void write_corpus(const AnonymizedCorpus& corpus, const std::string& path,
                  const std::string& text_field = "text");

nlohmann::json to_json(const ScoreVector& s);
nlohmann::json to_json(const Entity& e);
nlohmann::json to_json(const Document& d, const std::string& text_field = "text");
nlohmann::json to_json(const AnonymizedDocument& d,
                       const std::string& text_field = "text");
Entity entity_from_json(const nlohmann::json& j);

// Substring of `text` covered by `span`, bounds-checked.
std::string_view span_text(std::string_view text, const Span& span);

}  // namespace kbanon
