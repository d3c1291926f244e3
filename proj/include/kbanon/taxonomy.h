#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kbanon {

// Rubric level of an entity label: 3 identifies a person directly, 2 carries
// moderate or contextual risk, 1 is broadly shared, 0 is general vocabulary.
enum class RiskLevel : int { kGeneral = 0, kBroad = 1, kModerate = 2, kDirect = 3 };

struct LabelInfo {
  std::string_view label;
  std::string_view descriptor;
  std::string_view group;
  RiskLevel level;
};

// Every label of the built-in generalization table, in table order.
std::span<const LabelInfo> builtin_labels();

// Base risk assigned to a rubric level: the midpoint of its score band
// (3 -> 0.85, 2 -> 0.55, 1 -> 0.25, 0 -> 0.05).
double level_risk(RiskLevel level);

std::vector<std::string> default_label_vocabulary();

}  // namespace kbanon
