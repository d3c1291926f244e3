#include "http_json.h"

#include "httplib.h"
#include "kbanon/error.h"

namespace kbanon::detail {

namespace {

struct SplitUrl {
  std::string scheme_host_port;
  std::string prefix;
};

SplitUrl split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const auto host_begin = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = endpoint.find('/', host_begin);
  if (slash == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, slash), prefix};
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const std::string& route,
                         const nlohmann::json& body) {
  const SplitUrl url = split_endpoint(endpoint);
  httplib::Client client(url.scheme_host_port);
  if (!client.is_valid()) {
    throw TransportError("invalid endpoint '" + endpoint + "'");
  }
  client.set_connection_timeout(5);
  client.set_read_timeout(120);

  auto res = client.Post(url.prefix + route, body.dump(), "application/json");
  if (!res) {
    throw TransportError("request to " + endpoint + route + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ContractError(endpoint + route + " returned HTTP " +
                        std::to_string(res->status) + ": " + res->body);
  }
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ContractError(endpoint + route + " returned invalid JSON: " + ex.what());
  }
  if (!reply.is_object()) {
    throw ContractError(endpoint + route + " returned a non-object body");
  }
  return reply;
}

}  // namespace kbanon::detail
