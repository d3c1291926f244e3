#include "kbanon/taxonomy.h"

#include <array>

namespace kbanon {

namespace {

using enum RiskLevel;

constexpr std::array kLabels = {
    // personal information
    LabelInfo{"person full name", "somebody", "personal", kDirect},
    LabelInfo{"date of birth", "a specific date", "personal", kModerate},
    LabelInfo{"person age", "a certain age", "personal", kModerate},
    LabelInfo{"gender", "a gender", "personal", kModerate},
    LabelInfo{"eye color", "an eye color", "personal", kModerate},
    LabelInfo{"person height", "a height", "personal", kModerate},
    LabelInfo{"social security number", "a social security number", "personal", kDirect},
    LabelInfo{"passport number", "a passport number", "personal", kDirect},
    LabelInfo{"job title", "a job title", "personal", kBroad},
    LabelInfo{"job area", "a field of work", "personal", kBroad},
    LabelInfo{"job type", "a type of employment", "personal", kBroad},
    // finance accounts
    LabelInfo{"bank account number", "a bank account number", "finance", kDirect},
    LabelInfo{"bank account name", "a bank account holder", "finance", kDirect},
    LabelInfo{"IBAN", "an IBAN code", "finance", kDirect},
    LabelInfo{"BIC code", "a BIC code", "finance", kBroad},
    LabelInfo{"bitcoin wallet address", "a Bitcoin address", "finance", kDirect},
    LabelInfo{"ethereum wallet address", "an Ethereum address", "finance", kDirect},
    LabelInfo{"litecoin wallet address", "a Litecoin address", "finance", kDirect},
    LabelInfo{"credit card number", "a credit card number", "finance", kDirect},
    LabelInfo{"credit card CVV", "a CVV code", "finance", kDirect},
    LabelInfo{"credit card issuer", "a card issuing bank", "finance", kBroad},
    // money
    LabelInfo{"monetary amount", "a sum of money", "money", kBroad},
    LabelInfo{"currency ISO code", "a currency code", "money", kGeneral},
    LabelInfo{"currency full name", "a currency name", "money", kGeneral},
    LabelInfo{"currency symbol", "a currency symbol", "money", kGeneral},
    LabelInfo{"bitcoin amount", "a cryptocurrency amount", "money", kBroad},
    // location
    LabelInfo{"street address", "a street address", "location", kDirect},
    LabelInfo{"building number", "a building number", "location", kModerate},
    LabelInfo{"secondary address unit", "an apartment or unit number", "location", kModerate},
    LabelInfo{"city name", "a city", "location", kBroad},
    LabelInfo{"county", "a county", "location", kBroad},
    LabelInfo{"state or province", "a state or province", "location", kBroad},
    LabelInfo{"zip postal code", "a postal code", "location", kModerate},
    LabelInfo{"nearby GPS coordinate", "GPS coordinates", "location", kDirect},
    LabelInfo{"ordinal direction", "a direction", "location", kGeneral},
    // tech
    LabelInfo{"email address", "an email address", "tech", kDirect},
    LabelInfo{"phone number", "a phone number", "tech", kDirect},
    LabelInfo{"IP address", "an IP address", "tech", kDirect},
    LabelInfo{"MAC address", "a MAC address", "tech", kDirect},
    LabelInfo{"URL link", "a web link", "tech", kModerate},
    LabelInfo{"user agent string", "a browser user agent", "tech", kModerate},
    LabelInfo{"password", "a password", "tech", kDirect},
    LabelInfo{"PIN code", "a PIN code", "tech", kDirect},
    LabelInfo{"vehicle VIN", "a vehicle VIN", "tech", kDirect},
    LabelInfo{"vehicle VRM", "a vehicle registration mark", "tech", kDirect},
    LabelInfo{"phone IMEI", "a phone IMEI", "tech", kDirect},
    // medical
    LabelInfo{"symptom", "a symptom", "medical", kGeneral},
    LabelInfo{"disease", "a disease", "medical", kBroad},
    LabelInfo{"diagnosis", "a medical diagnosis", "medical", kBroad},
    LabelInfo{"medication", "a medication", "medical", kGeneral},
    LabelInfo{"dosage", "a medication dosage", "medical", kGeneral},
    LabelInfo{"frequency", "a frequency of medication", "medical", kGeneral},
    LabelInfo{"duration", "a duration of time", "medical", kGeneral},
    LabelInfo{"medical test", "a medical test", "medical", kGeneral},
    LabelInfo{"test result", "a test result", "medical", kBroad},
    LabelInfo{"procedure", "a medical procedure", "medical", kBroad},
    LabelInfo{"medical department", "a hospital department", "medical", kGeneral},
    LabelInfo{"allergy", "an allergy", "medical", kBroad},
};

}  // namespace

std::span<const LabelInfo> builtin_labels() { return kLabels; }

double level_risk(RiskLevel level) {
  switch (level) {
    case RiskLevel::kDirect:
      return 0.85;
    case RiskLevel::kModerate:
      return 0.55;
    case RiskLevel::kBroad:
      return 0.25;
    case RiskLevel::kGeneral:
      return 0.05;
  }
  return 0.0;
}

std::vector<std::string> default_label_vocabulary() {
  std::vector<std::string> out;
  out.reserve(kLabels.size());
  for (const auto& info : kLabels) out.emplace_back(info.label);
  return out;
}

}  // namespace kbanon
