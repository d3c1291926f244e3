#pragma once

#include <map>
#include <string>
#include <string_view>

#include "kbanon/corpus.h"
#include "kbanon/extract.h"

namespace kbanon {

struct Selection;

inline constexpr std::string_view kDefaultFallbackDescriptor = "certain information";

using DescriptorTable = std::map<std::string, std::string, std::less<>>;

// label -> coarse descriptor, with a fallback for unmapped labels.
class GeneralizationMap {
 public:
  GeneralizationMap() = default;
  GeneralizationMap(DescriptorTable entries, std::string fallback);

  const std::string& descriptor_for(std::string_view label) const;
  const DescriptorTable& entries() const { return entries_; }
  const std::string& fallback() const { return fallback_; }

  // Throws ConfigError if any descriptor (or the fallback) contains a
  // lexicon surface form as a whole-word, case-insensitive match.
  void check_against_lexicon(const Lexicon& lexicon) const;

 private:
  DescriptorTable entries_;
  std::string fallback_{kDefaultFallbackDescriptor};
};

// The built-in personal / finance / money / location / tech / medical table.
GeneralizationMap default_generalization_map();

// JSON object label -> descriptor, plus an optional "_fallback" key.
GeneralizationMap load_generalization_map(const std::string& path);

// Replaces the bytes at entity.span with `placeholder`. Throws InvalidArgument
// when the span is out of range or no longer holds entity.surface.
std::string mask_entity(std::string_view text, const Entity& entity,
                        std::string_view placeholder);

// Substitutes the descriptor of every entity in sel.generalize_set, editing
// right-to-left so that earlier spans stay valid.
AnonymizedDocument generalize_document(const Document& doc, const Selection& sel,
                                       const GeneralizationMap& map);

}  // namespace kbanon
