#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace kbanon {

// Fixed-length dense embedding. All values are finite.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::vector<double> values);
  static Vector zeros(std::size_t dim);

  std::size_t dim() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;

  friend bool operator==(const Vector&, const Vector&) = default;

 private:
  std::vector<double> values_;
};

enum class BackendKind { kReference, kRemote };

struct EmbedderSpec {
  BackendKind kind = BackendKind::kReference;
  std::size_t dim = 256;
  std::optional<std::string> endpoint;

  void validate() const;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  // One vector per input text, same order.
  virtual std::vector<Vector> embed(std::span<const std::string> texts) const = 0;
};

// Feature-hashing bag-of-words embedder. Tokens are lowercase ASCII
// alphanumeric runs (bytes >= 0x80 count as token characters so UTF-8 words
// stay whole). Each token adds sign(hash) to bucket hash % dim, where hash is
// 64-bit FNV-1a and the sign is negative when bit 63 is set. The sum is L2
// normalized; texts without tokens map to the zero vector.
class ReferenceEmbedder final : public Embedder {
 public:
  explicit ReferenceEmbedder(std::size_t dim = 256);
  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed(std::span<const std::string> texts) const override;
  Vector embed_one(std::string_view text) const;

 private:
  std::size_t dim_;
};

// Client for POST {endpoint}/embed. Requests are chunked to at most
// kMaxBatch texts; results are concatenated in input order.
class RemoteEmbedder final : public Embedder {
 public:
  static constexpr std::size_t kMaxBatch = 64;

  RemoteEmbedder(std::string endpoint, std::size_t dim);
  std::size_t dim() const override { return dim_; }
  std::vector<Vector> embed(std::span<const std::string> texts) const override;

 private:
  std::string endpoint_;
  std::size_t dim_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

std::vector<Vector> embed(const EmbedderSpec& spec, std::span<const std::string> texts);

std::uint64_t fnv1a64(std::string_view bytes);

// Lowercased token list used by the reference embedder.
std::vector<std::string> hash_tokens(std::string_view text);

// a.b / (|a| |b|); 0 when either norm is zero.
double cosine_similarity(const Vector& a, const Vector& b);
double l2_distance(const Vector& a, const Vector& b);

}  // namespace kbanon
