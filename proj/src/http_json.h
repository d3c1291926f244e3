#pragma once

#include <string>

#include "json.hpp"

namespace kbanon::detail {

// POSTs `body` to {endpoint}{route} and returns the parsed response.
// Unreachable hosts raise TransportError; non-200 replies and bodies that are
// not JSON objects raise ContractError. Both carry the endpoint.
nlohmann::json post_json(const std::string& endpoint, const std::string& route,
                         const nlohmann::json& body);

}  // namespace kbanon::detail
