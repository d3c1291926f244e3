#include "kbanon/embed.h"

#include <gtest/gtest.h>

#include <cctype>
#include <cmath>
#include <map>
#include <random>

#include "kbanon/error.h"

namespace kbanon {
namespace {

// Independent restatement of the reference embedder: 64-bit FNV-1a per
// lowercase alphanumeric token, signed bucket counts, unit norm.
std::vector<double> oracle_embed(const std::string& text, std::size_t dim) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text + " ") {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c >= 0x80) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  std::map<std::size_t, double> buckets;
  for (const auto& t : tokens) {
    unsigned long long h = 0xcbf29ce484222325ULL;
    for (unsigned char c : t) {
      h = (h ^ c) * 0x100000001b3ULL;
    }
    buckets[h % dim] += (h & (1ULL << 63)) ? -1.0 : 1.0;
  }
  std::vector<double> v(dim, 0.0);
  double n2 = 0.0;
  for (auto [b, x] : buckets) {
    v[b] = x;
    n2 += x * x;
  }
  if (n2 > 0) {
    for (double& x : v) x /= std::sqrt(n2);
  }
  return v;
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(HashTokens, LowercasesAndSplits) {
  EXPECT_EQ(hash_tokens("Hello, WORLD-42!"),
            (std::vector<std::string>{"hello", "world", "42"}));
  EXPECT_EQ(hash_tokens("caf\xc3\xa9 ok"), (std::vector<std::string>{"caf\xc3\xa9", "ok"}));
  EXPECT_TRUE(hash_tokens(" ... ").empty());
}

TEST(ReferenceEmbedder, MatchesIndependentOracle) {
  const ReferenceEmbedder emb(256);
  for (const std::string text : {"dog", "dog cat", "Alice has diabetes", "a a a b", "x-y_z 9"}) {
    const auto expected = oracle_embed(text, 256);
    const auto got = emb.embed_one(text);
    ASSERT_EQ(got.dim(), 256u);
    for (std::size_t i = 0; i < 256; ++i) EXPECT_DOUBLE_EQ(got[i], expected[i]) << text << " " << i;
  }
}

TEST(ReferenceEmbedder, DogAndDogCatDiffer) {
  const auto dog = oracle_embed("dog", 256);
  const auto dog_cat = oracle_embed("dog cat", 256);
  ASSERT_NE(dog, dog_cat);
  const std::vector<std::string> texts{"dog", "dog cat"};
  const auto vs = embed(EmbedderSpec{}, texts);
  EXPECT_NE(vs[0], vs[1]);
}

TEST(ReferenceEmbedder, DeterministicAndEmptyIsZero) {
  const std::vector<std::string> texts{"abc", "abc", ""};
  const auto vs = embed(EmbedderSpec{}, texts);
  ASSERT_EQ(vs.size(), 3u);
  EXPECT_EQ(vs[0], vs[1]);
  EXPECT_EQ(vs[2], Vector::zeros(256));
}

TEST(ReferenceEmbedder, NormIsZeroOrOne) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "ab cd,EF 12.\xc3\xa9";
  const ReferenceEmbedder emb(64);
  for (int i = 0; i < 300; ++i) {
    std::string t;
    const auto len = rng() % 30;
    for (std::size_t k = 0; k < len; ++k) t += alphabet[rng() % alphabet.size()];
    const double n = emb.embed_one(t).norm();
    if (hash_tokens(t).empty()) {
      EXPECT_EQ(n, 0.0);
    } else {
      // Opposite-sign collisions can cancel every bucket.
      EXPECT_TRUE(n == 0.0 || std::abs(n - 1.0) <= 1e-9) << t;
    }
  }
}

TEST(ReferenceEmbedder, RejectsEmptyBatchAndZeroDim) {
  const ReferenceEmbedder emb;
  EXPECT_THROW(emb.embed(std::vector<std::string>{}), InvalidArgument);
  EXPECT_THROW(ReferenceEmbedder(0), ConfigError);
  EmbedderSpec remote{BackendKind::kRemote, 8, std::nullopt};
  EXPECT_THROW(remote.validate(), ConfigError);
}

TEST(Cosine, Conventions) {
  const Vector a({1.0, 0.0}), b({0.0, 1.0}), z({0.0, 0.0}), c({0.3, -0.7});
  EXPECT_NEAR(cosine_similarity(c, c), 1.0, 1e-12);
  EXPECT_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_EQ(cosine_similarity(a, z), 0.0);
  EXPECT_THROW(cosine_similarity(a, Vector({1.0})), InvalidArgument);
}

TEST(L2, Analytic) {
  const Vector a({1.0, 0.0}), b({0.0, 1.0});
  EXPECT_EQ(l2_distance(a, a), 0.0);
  EXPECT_NEAR(l2_distance(a, b), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(l2_distance(Vector({3.0, 4.0}), Vector({0.0, 0.0})), 5.0);
}

TEST(Metrics, SymmetricAndTriangle) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  auto rand_vec = [&] {
    std::vector<double> v(16);
    for (double& x : v) x = g(rng);
    return Vector(v);
  };
  for (int i = 0; i < 500; ++i) {
    const auto a = rand_vec(), b = rand_vec(), c = rand_vec();
    EXPECT_EQ(cosine_similarity(a, b), cosine_similarity(b, a));
    EXPECT_EQ(l2_distance(a, b), l2_distance(b, a));
    EXPECT_LE(l2_distance(a, c), l2_distance(a, b) + l2_distance(b, c) + 1e-9);
    const double cs = cosine_similarity(a, b);
    EXPECT_GE(cs, -1.0);
    EXPECT_LE(cs, 1.0);
  }
}

TEST(Vector, RejectsNonFinite) {
  EXPECT_THROW(Vector({1.0, std::nan("")}), InvalidArgument);
  EXPECT_THROW(Vector({INFINITY}), InvalidArgument);
}

}  // namespace
}  // namespace kbanon
