#include "kbanon/extract.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "http_json.h"
#include "kbanon/error.h"
#include "kbanon/taxonomy.h"

namespace kbanon {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

unsigned char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<unsigned char>(c - 'A' + 'a') : c;
}

std::string lowered(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(lower(static_cast<unsigned char>(c)));
  return out;
}

Entity make_entity(std::string_view text, std::size_t start, std::size_t end,
                   std::string label) {
  return Entity{std::string(text.substr(start, end - start)), std::move(label),
                Span{start, end}, std::nullopt};
}

}  // namespace

void ExtractorSpec::validate() const {
  if (kind == BackendKind::kRemote && (!endpoint || endpoint->empty())) {
    throw ConfigError("remote extractor requires an endpoint");
  }
  if (kind == BackendKind::kReference && (!lexicon_path || lexicon_path->empty())) {
    throw ConfigError("reference extractor requires a lexicon_path");
  }
}

std::vector<Entity> resolve_overlaps(std::vector<Entity> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Entity& a, const Entity& b) {
    if (a.span.length() != b.span.length()) return a.span.length() > b.span.length();
    if (a.span.start != b.span.start) return a.span.start < b.span.start;
    return a.label < b.label;
  });
  std::vector<Entity> accepted;
  for (auto& c : candidates) {
    const bool clash = std::any_of(accepted.begin(), accepted.end(),
                                   [&](const Entity& a) { return a.span.overlaps(c.span); });
    if (!clash) accepted.push_back(std::move(c));
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Entity& a, const Entity& b) { return a.span.start < b.span.start; });
  return accepted;
}

ReferenceExtractor::ReferenceExtractor(Lexicon lexicon, std::vector<std::string> labels)
    : lexicon_(std::move(lexicon)),
      labels_(labels.empty() ? default_label_vocabulary() : std::move(labels)),
      age_re_(R"(\b\d{1,3} years? old\b)", std::regex::ECMAScript | std::regex::icase),
      phone_re_(R"(\+?\d(?:[-. ]?\d){6,14})", std::regex::ECMAScript),
      email_re_(R"([A-Za-z0-9._%+\-]+@[A-Za-z0-9\-]+(?:\.[A-Za-z0-9\-]+)*)",
                std::regex::ECMAScript) {
  std::sort(labels_.begin(), labels_.end());
  for (const auto& [surface, label] : lexicon_) {
    if (surface.empty()) continue;
    std::string low = lowered(surface);
    const auto key = static_cast<unsigned char>(low.front());
    by_first_byte_[key].push_back(Pattern{std::move(low), label});
  }
}

bool ReferenceExtractor::allowed(std::string_view label) const {
  return std::binary_search(labels_.begin(), labels_.end(), label);
}

void ReferenceExtractor::add_lexicon_candidates(std::string_view text,
                                                std::vector<Entity>& out) const {
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto it = by_first_byte_.find(lower(static_cast<unsigned char>(text[i])));
    if (it == by_first_byte_.end()) continue;
    const bool at_boundary = i == 0 || !is_word_byte(static_cast<unsigned char>(text[i - 1]));
    for (const Pattern& p : it->second) {
      const std::size_t end = i + p.lowered.size();
      if (end > text.size()) continue;
      if (is_word_byte(static_cast<unsigned char>(p.lowered.front())) && !at_boundary) continue;
      if (is_word_byte(static_cast<unsigned char>(p.lowered.back())) && end < text.size() &&
          is_word_byte(static_cast<unsigned char>(text[end]))) {
        continue;
      }
      bool match = true;
      for (std::size_t k = 0; k < p.lowered.size(); ++k) {
        if (lower(static_cast<unsigned char>(text[i + k])) !=
            static_cast<unsigned char>(p.lowered[k])) {
          match = false;
          break;
        }
      }
      if (match && allowed(p.label)) out.push_back(make_entity(text, i, end, p.label));
    }
  }
}

void ReferenceExtractor::add_regex_candidates(std::string_view text,
                                              std::vector<Entity>& out) const {
  auto scan = [&](const std::regex& re, const char* label, auto&& accept) {
    if (!allowed(label)) return;
    for (std::cregex_iterator it(text.data(), text.data() + text.size(), re), last;
         it != last; ++it) {
      const auto start = static_cast<std::size_t>(it->position(0));
      const auto end = start + static_cast<std::size_t>(it->length(0));
      if (accept(start, end)) out.push_back(make_entity(text, start, end, label));
    }
  };

  scan(age_re_, "person age", [](std::size_t, std::size_t) { return true; });
  scan(phone_re_, "phone number", [&](std::size_t start, std::size_t end) {
    // Must be a whole digit run: no word byte glued to either side.
    if (start > 0 && is_word_byte(static_cast<unsigned char>(text[start - 1]))) return false;
    if (end < text.size() && is_word_byte(static_cast<unsigned char>(text[end]))) return false;
    const auto digits = std::count_if(text.begin() + start, text.begin() + end,
                                      [](char c) { return is_digit(static_cast<unsigned char>(c)); });
    return digits >= 7 && digits <= 15;
  });
  scan(email_re_, "email address", [&](std::size_t start, std::size_t end) {
    // "write to a@b.com." must not swallow the sentence dot.
    return is_word_byte(static_cast<unsigned char>(text[end - 1])) &&
           is_word_byte(static_cast<unsigned char>(text[start]));
  });
}

std::vector<Entity> ReferenceExtractor::extract(std::string_view text) const {
  std::vector<Entity> candidates;
  add_lexicon_candidates(text, candidates);
  add_regex_candidates(text, candidates);
  return resolve_overlaps(std::move(candidates));
}

RemoteExtractor::RemoteExtractor(std::string endpoint, std::vector<std::string> labels)
    : endpoint_(std::move(endpoint)),
      labels_(labels.empty() ? default_label_vocabulary() : std::move(labels)) {}

std::vector<Entity> RemoteExtractor::extract(std::string_view text) const {
  const nlohmann::json body{{"text", std::string(text)}, {"labels", labels_}};
  const auto reply = detail::post_json(endpoint_, "/ner", body);

  std::vector<Entity> out;
  try {
    for (const auto& item : reply.at("entities")) {
      Entity e;
      e.surface = item.at("text").get<std::string>();
      e.label = item.at("label").get<std::string>();
      e.span.start = item.at("start").get<std::size_t>();
      e.span.end = item.at("end").get<std::size_t>();
      if (e.span.start >= e.span.end || e.span.end > text.size() ||
          text.substr(e.span.start, e.span.length()) != e.surface) {
        throw ContractError(endpoint_ + "/ner returned entity '" + e.surface +
                            "' whose byte offsets do not match the text");
      }
      if (std::find(labels_.begin(), labels_.end(), e.label) == labels_.end()) {
        throw ContractError(endpoint_ + "/ner returned unrequested label '" + e.label + "'");
      }
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ContractError(endpoint_ + "/ner: malformed response: " + ex.what());
  }
  return resolve_overlaps(std::move(out));
}

Lexicon load_lexicon(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("lexicon '" + path + "' is not valid JSON: " + ex.what());
  }
  if (!j.is_object()) throw ConfigError("lexicon '" + path + "' must be a JSON object");
  Lexicon lexicon;
  for (const auto& [surface, label] : j.items()) {
    if (!label.is_string() || label.get<std::string>().empty()) {
      throw ConfigError("lexicon '" + path + "': entry '" + surface +
                        "' needs a non-empty string label");
    }
    if (surface.empty()) throw ConfigError("lexicon '" + path + "' has an empty surface");
    lexicon.emplace(surface, label.get<std::string>());
  }
  return lexicon;
}

std::shared_ptr<const EntityExtractor> make_extractor(const ExtractorSpec& spec) {
  spec.validate();
  if (spec.kind == BackendKind::kRemote) {
    return std::make_shared<RemoteExtractor>(*spec.endpoint, spec.labels);
  }
  return std::make_shared<ReferenceExtractor>(load_lexicon(*spec.lexicon_path), spec.labels);
}

std::vector<Entity> extract_entities(const ExtractorSpec& spec, std::string_view text) {
  return make_extractor(spec)->extract(text);
}

}  // namespace kbanon
