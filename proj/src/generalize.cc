#include "kbanon/generalize.h"

#include <fstream>
#include <set>
#include <sstream>

#include "kbanon/error.h"
#include "kbanon/select.h"
#include "kbanon/taxonomy.h"

namespace kbanon {

namespace {

constexpr std::string_view kFallbackKey = "_fallback";

void validate_table(const DescriptorTable& entries, const std::string& fallback) {
  if (fallback.empty()) throw ConfigError("generalization fallback must be non-empty");
  for (const auto& [label, descriptor] : entries) {
    if (label.empty()) throw ConfigError("generalization map has an empty label");
    if (descriptor.empty()) {
      throw ConfigError("empty descriptor for label '" + label + "'");
    }
    if (entries.count(descriptor) != 0) {
      throw ConfigError("descriptor '" + descriptor + "' is also used as a label");
    }
  }
}

}  // namespace

GeneralizationMap::GeneralizationMap(DescriptorTable entries, std::string fallback)
    : entries_(std::move(entries)), fallback_(std::move(fallback)) {
  validate_table(entries_, fallback_);
}

const std::string& GeneralizationMap::descriptor_for(std::string_view label) const {
  const auto it = entries_.find(label);
  return it == entries_.end() ? fallback_ : it->second;
}

void GeneralizationMap::check_against_lexicon(const Lexicon& lexicon) const {
  std::set<std::string> labels;
  for (const auto& [surface, label] : lexicon) labels.insert(label);
  const ReferenceExtractor probe(lexicon, {labels.begin(), labels.end()});
  auto check = [&](const std::string& descriptor) {
    const auto hits = probe.extract(descriptor);
    if (!hits.empty()) {
      throw ConfigError("descriptor '" + descriptor + "' contains lexicon surface '" +
                        hits.front().surface + "'");
    }
  };
  for (const auto& [label, descriptor] : entries_) check(descriptor);
  check(fallback_);
}

GeneralizationMap default_generalization_map() {
  DescriptorTable entries;
  for (const auto& info : builtin_labels()) {
    entries.emplace(std::string(info.label), std::string(info.descriptor));
  }
  return GeneralizationMap(std::move(entries), std::string(kDefaultFallbackDescriptor));
}

GeneralizationMap load_generalization_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open generalization map '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();

  std::set<std::string> seen;
  std::string duplicate;
  const nlohmann::json::parser_callback_t on_event =
      [&](int depth, nlohmann::json::parse_event_t event, nlohmann::json& parsed) {
        if (event == nlohmann::json::parse_event_t::key && depth == 1) {
          const auto key = parsed.get<std::string>();
          if (!seen.insert(key).second && duplicate.empty()) duplicate = key;
        }
        return true;
      };

  nlohmann::json j;
  try {
    j = nlohmann::json::parse(buf.str(), on_event);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError("generalization map '" + path + "' is not valid JSON: " + ex.what());
  }
  if (!duplicate.empty()) {
    throw ConfigError("generalization map '" + path + "' repeats key '" + duplicate + "'");
  }
  if (!j.is_object()) {
    throw ConfigError("generalization map '" + path + "' must be a JSON object");
  }

  DescriptorTable entries;
  std::string fallback(kDefaultFallbackDescriptor);
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) {
      throw ConfigError("descriptor for '" + key + "' must be a string");
    }
    if (key == kFallbackKey) {
      fallback = value.get<std::string>();
    } else {
      entries.emplace(key, value.get<std::string>());
    }
  }
  return GeneralizationMap(std::move(entries), std::move(fallback));
}

std::string mask_entity(std::string_view text, const Entity& entity,
                        std::string_view placeholder) {
  const auto current = span_text(text, entity.span);
  if (current != entity.surface) {
    throw InvalidArgument("stale span: expected '" + entity.surface + "' at [" +
                          std::to_string(entity.span.start) + ", " +
                          std::to_string(entity.span.end) + ") but found '" +
                          std::string(current) + "'");
  }
  std::string out;
  out.reserve(text.size() - entity.span.length() + placeholder.size());
  out.append(text.substr(0, entity.span.start));
  out.append(placeholder);
  out.append(text.substr(entity.span.end));
  return out;
}

AnonymizedDocument generalize_document(const Document& doc, const Selection& sel,
                                       const GeneralizationMap& map) {
  const std::size_t n = doc.entities.size();
  for (std::size_t i : sel.generalize_set) {
    if (i >= n) throw InvalidArgument("selection index " + std::to_string(i) + " out of range");
    if (sel.keep_set.count(i) != 0) {
      throw InvalidArgument("entity " + std::to_string(i) + " both kept and generalized");
    }
  }
  for (std::size_t i : sel.keep_set) {
    if (i >= n) throw InvalidArgument("selection index " + std::to_string(i) + " out of range");
  }

  AnonymizedDocument out;
  out.id = doc.id;
  out.text = doc.text;
  for (auto it = sel.generalize_set.rbegin(); it != sel.generalize_set.rend(); ++it) {
    const Entity& e = doc.entities[*it];
    out.text = mask_entity(out.text, e, map.descriptor_for(e.label));
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (sel.generalize_set.count(i) != 0) {
      out.generalized.push_back({doc.entities[i], map.descriptor_for(doc.entities[i].label)});
    } else {
      out.kept.push_back(doc.entities[i]);
    }
  }
  return out;
}

}  // namespace kbanon
