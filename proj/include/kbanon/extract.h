#pragma once

#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "kbanon/corpus.h"
#include "kbanon/embed.h"

namespace kbanon {

// surface form -> label
using Lexicon = std::map<std::string, std::string>;

struct ExtractorSpec {
  BackendKind kind = BackendKind::kReference;
  std::vector<std::string> labels;  // empty means the built-in vocabulary
  std::optional<std::string> lexicon_path;
  std::optional<std::string> endpoint;

  void validate() const;
};

class EntityExtractor {
 public:
  virtual ~EntityExtractor() = default;
  // Entities sorted by start offset, non-overlapping, labels restricted to
  // the configured vocabulary, surface == text[span].
  virtual std::vector<Entity> extract(std::string_view text) const = 0;
};

// Case-insensitive lexicon matcher plus regex families for ages
// ("32 year old"), phone-like digit runs of 7-15 digits and email-like
// token@token strings. Lexicon hits must sit on word boundaries. Overlaps are
// resolved by longest match, then earliest start, then label order.
class ReferenceExtractor final : public EntityExtractor {
 public:
  ReferenceExtractor(Lexicon lexicon, std::vector<std::string> labels);

  std::vector<Entity> extract(std::string_view text) const override;
  const Lexicon& lexicon() const { return lexicon_; }

 private:
  struct Pattern {
    std::string lowered;
    std::string label;
  };

  void add_lexicon_candidates(std::string_view text, std::vector<Entity>& out) const;
  void add_regex_candidates(std::string_view text, std::vector<Entity>& out) const;
  bool allowed(std::string_view label) const;

  Lexicon lexicon_;
  std::vector<std::string> labels_;
  // Patterns keyed by the lowercase leading byte, to probe only plausible
  // entries at each position.
  std::unordered_map<unsigned char, std::vector<Pattern>> by_first_byte_;
  std::regex age_re_;
  std::regex phone_re_;
  std::regex email_re_;
};

// Client for POST {endpoint}/ner. Offsets are validated against the text.
class RemoteExtractor final : public EntityExtractor {
 public:
  RemoteExtractor(std::string endpoint, std::vector<std::string> labels);
  std::vector<Entity> extract(std::string_view text) const override;

 private:
  std::string endpoint_;
  std::vector<std::string> labels_;
};

Lexicon load_lexicon(const std::string& path);

std::shared_ptr<const EntityExtractor> make_extractor(const ExtractorSpec& spec);

std::vector<Entity> extract_entities(const ExtractorSpec& spec, std::string_view text);

// Keeps the longest candidates (ties: earlier start, then smaller label),
// drops anything overlapping an accepted one and returns them by start.
std::vector<Entity> resolve_overlaps(std::vector<Entity> candidates);

}  // namespace kbanon
