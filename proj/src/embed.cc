#include "kbanon/embed.h"

#include <algorithm>
#include <cmath>

#include "http_json.h"
#include "kbanon/error.h"

namespace kbanon {

Vector::Vector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_) {
    if (!std::isfinite(v)) throw InvalidArgument("vector holds a non-finite value");
  }
}

Vector Vector::zeros(std::size_t dim) { return Vector(std::vector<double>(dim, 0.0)); }

double Vector::norm() const {
  double sum = 0.0;
  for (double v : values_) sum += v * v;
  return std::sqrt(sum);
}

void EmbedderSpec::validate() const {
  if (dim == 0) throw ConfigError("embedder dim must be positive");
  if (kind == BackendKind::kRemote && (!endpoint || endpoint->empty())) {
    throw ConfigError("remote embedder requires an endpoint");
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

namespace {

bool is_token_byte(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         c >= 0x80;
}

unsigned char ascii_lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<unsigned char>(c - 'A' + 'a') : c;
}

void check_dims(const Vector& a, const Vector& b) {
  if (a.dim() != b.dim()) {
    throw InvalidArgument("dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
  }
}

}  // namespace

std::vector<std::string> hash_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (is_token_byte(c)) {
      current.push_back(static_cast<char>(ascii_lower(c)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

ReferenceEmbedder::ReferenceEmbedder(std::size_t dim) : dim_(dim) {
  if (dim_ == 0) throw ConfigError("embedder dim must be positive");
}

Vector ReferenceEmbedder::embed_one(std::string_view text) const {
  std::vector<double> acc(dim_, 0.0);
  for (const auto& token : hash_tokens(text)) {
    const std::uint64_t h = fnv1a64(token);
    const double sign = (h >> 63) == 0 ? 1.0 : -1.0;
    acc[h % dim_] += sign;
  }
  double sum = 0.0;
  for (double v : acc) sum += v * v;
  if (sum > 0.0) {
    const double inv = 1.0 / std::sqrt(sum);
    for (double& v : acc) v *= inv;
  }
  return Vector(std::move(acc));
}

std::vector<Vector> ReferenceEmbedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) throw InvalidArgument("embed called with no texts");
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::size_t dim)
    : endpoint_(std::move(endpoint)), dim_(dim) {
  if (dim_ == 0) throw ConfigError("embedder dim must be positive");
}

std::vector<Vector> RemoteEmbedder::embed(std::span<const std::string> texts) const {
  if (texts.empty()) throw InvalidArgument("embed called with no texts");
  std::vector<Vector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += kMaxBatch) {
    const auto chunk = texts.subspan(begin, std::min(kMaxBatch, texts.size() - begin));
    nlohmann::json body{{"texts", nlohmann::json::array()}};
    for (const auto& t : chunk) body["texts"].push_back(t);

    const auto reply = detail::post_json(endpoint_, "/embed", body);
    try {
      const auto dim = reply.at("dim").get<std::size_t>();
      const auto& vectors = reply.at("vectors");
      if (dim != dim_) {
        throw ContractError(endpoint_ + "/embed advertised dim " + std::to_string(dim) +
                            ", expected " + std::to_string(dim_));
      }
      if (!vectors.is_array() || vectors.size() != chunk.size()) {
        throw ContractError(endpoint_ + "/embed returned " +
                            std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(chunk.size()) + " texts");
      }
      for (const auto& v : vectors) {
        auto values = v.get<std::vector<double>>();
        if (values.size() != dim_) {
          throw ContractError(endpoint_ + "/embed returned a vector of length " +
                              std::to_string(values.size()) + ", expected " +
                              std::to_string(dim_));
        }
        out.emplace_back(std::move(values));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ContractError(endpoint_ + "/embed: malformed response: " + ex.what());
    } catch (const InvalidArgument& ex) {
      throw ContractError(endpoint_ + "/embed: " + ex.what());
    }
  }
  return out;
}

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == BackendKind::kRemote) {
    return std::make_unique<RemoteEmbedder>(*spec.endpoint, spec.dim);
  }
  return std::make_unique<ReferenceEmbedder>(spec.dim);
}

std::vector<Vector> embed(const EmbedderSpec& spec, std::span<const std::string> texts) {
  return make_embedder(spec)->embed(texts);
}

double cosine_similarity(const Vector& a, const Vector& b) {
  check_dims(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double l2_distance(const Vector& a, const Vector& b) {
  check_dims(a, b);
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

}  // namespace kbanon
