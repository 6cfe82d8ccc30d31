#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

#include "archrag/index.hpp"
#include "support.hpp"

using namespace archrag;

namespace {

VectorIndex random_index(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VectorIndex idx("test/d" + std::to_string(dim), dim);
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "c%04zu", i);
    idx.add(id, testutil::random_unit(rng, dim), {"d" + std::to_string(i % 7), "t", "en", "text " + std::to_string(i)});
  }
  return idx;
}

// Full sort of every dot product.
std::vector<ScoredChunk> brute_force(const VectorIndex& idx, const Embedding& q, std::size_t k) {
  std::vector<ScoredChunk> all;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto v = idx.vector(i);
    double s = 0;
    for (std::size_t j = 0; j < v.size(); ++j) s += double(v[j]) * double(q.values[j]);
    all.push_back({idx.chunk_id(i), s});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score > b.score : a.chunk_id < b.chunk_id;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

Embedding random_query(std::mt19937_64& rng, std::size_t dim) {
  return {testutil::random_unit(rng, dim), "q"};
}

Corpus tiny_corpus() {
  Corpus c;
  c.chunks = {{"a#0", "a", "A", "la bataille de la Marne en septembre", "fr", 6, {}},
              {"b#0", "b", "B", "the treaty of Versailles was signed", "en", 6, {}},
              {"c#0", "c", "C", "grève des mineurs dans le Nord", "fr", 6, {}}};
  return c;
}

}  // namespace

TEST_CASE("build_index: one entry per chunk, provider recorded") {
  ProviderConfig p;
  p.dim = 64;
  Corpus c;
  c.chunks = {tiny_corpus().chunks[0]};
  auto idx = build_index(c, p);
  CHECK(idx.size() == 1);
  CHECK(idx.dim() == 64);
  CHECK(idx.provider_id() == p.provider_id());
  CHECK(idx.meta("a#0").title == "A");
}

TEST_CASE("build_index: empty corpus refused") {
  CHECK_THROWS_AS(build_index(Corpus{}, ProviderConfig{}), Error);
}

TEST_CASE("build_index: a chunk's own text finds it first") {
  ProviderConfig p;
  p.dim = 64;
  auto c = tiny_corpus();
  auto idx = build_index(c, p);
  for (const auto& ch : c.chunks) {
    auto q = embed_query(ch.text, p);
    auto res = idx.search(q, 3);
    CHECK(res.items == brute_force(idx, q, 3));
    CHECK(res.items.front().chunk_id == ch.chunk_id);
    CHECK_THAT(res.items.front().score, Catch::Matchers::WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("build_index: rebuild is byte-identical") {
  testutil::TempDir tmp;
  ProviderConfig p;
  p.dim = 32;
  build_index(tiny_corpus(), p).save(tmp / "a.arxi");
  build_index(tiny_corpus(), p).save(tmp / "b.arxi");
  CHECK(testutil::read_text(tmp / "a.arxi") == testutil::read_text(tmp / "b.arxi"));
}

TEST_CASE("search: identical vectors tie-break by chunk_id") {
  VectorIndex idx("t", 8);
  std::vector<float> v(8, 0.0f);
  v[2] = 1.0f;
  idx.add("zeta", v, {});
  idx.add("alpha", v, {});
  idx.add("mid", v, {});
  auto res = idx.search({v, "q"}, 3);
  REQUIRE(res.items.size() == 3);
  CHECK(res.items[0].chunk_id == "alpha");
  CHECK(res.items[1].chunk_id == "mid");
  CHECK(res.items[2].chunk_id == "zeta");
}

TEST_CASE("search: K beyond size returns everything; bad inputs refused") {
  auto idx = random_index(5, 16, 1);
  std::mt19937_64 rng(2);
  auto q = random_query(rng, 16);
  CHECK(idx.search(q, 50).items.size() == 5);
  CHECK_THROWS_AS(idx.search(q, 0), ConfigError);
  CHECK_THROWS_AS(idx.search(random_query(rng, 8), 3), DimensionMismatch);
  CHECK_THROWS_AS(idx.add("x", std::vector<float>(15), {}), DimensionMismatch);
  CHECK_THROWS_AS(idx.add("c0001", std::vector<float>(16), {}), Error);
}

TEST_CASE("search equals the brute-force oracle for every K") {
  std::mt19937_64 rng(99);
  for (std::size_t n : {1u, 2u, 20u, 137u, 1000u}) {
    auto idx = random_index(n, 24, n);
    for (int rep = 0; rep < 3; ++rep) {
      auto q = random_query(rng, 24);
      const auto full = brute_force(idx, q, n);
      for (std::size_t k = 1; k <= n; k += (n > 50 ? 37 : 1)) {
        auto res = idx.search(q, k);
        REQUIRE(res.items.size() == k);
        CHECK(std::equal(res.items.begin(), res.items.end(), full.begin()));
      }
      CHECK(idx.search(q, n).items == full);
    }
  }
}

TEST_CASE("search: scores bounded and non-increasing") {
  auto idx = random_index(200, 12, 5);
  std::mt19937_64 rng(6);
  for (int rep = 0; rep < 20; ++rep) {
    auto res = idx.search(random_query(rng, 12), 200);
    for (std::size_t i = 0; i < res.items.size(); ++i) {
      CHECK(res.items[i].score <= 1.0 + 1e-6);
      CHECK(res.items[i].score >= -1.0 - 1e-6);
      if (i) CHECK(res.items[i - 1].score >= res.items[i].score);
    }
  }
}

TEST_CASE("search is invariant under insertion order") {
  auto base = random_index(60, 10, 8);
  std::vector<std::size_t> order(base.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(9);
  for (int perm = 0; perm < 5; ++perm) {
    std::shuffle(order.begin(), order.end(), rng);
    VectorIndex shuffled(base.provider_id(), base.dim());
    for (auto i : order) shuffled.add(base.chunk_id(i), base.vector(i), base.meta(i));
    for (int rep = 0; rep < 10; ++rep) {
      auto q = random_query(rng, 10);
      CHECK(shuffled.search(q, 15).items == base.search(q, 15).items);
    }
  }
}

TEST_CASE("save/load round-trip preserves search bit-exactly") {
  testutil::TempDir tmp;
  auto idx = random_index(100, 48, 21);
  idx.save(tmp / "i.arxi");
  auto back = VectorIndex::load(tmp / "i.arxi");
  CHECK(back.size() == 100);
  CHECK(back.provider_id() == idx.provider_id());
  std::mt19937_64 rng(22);
  for (int q = 0; q < 50; ++q) {
    auto v = random_query(rng, 48);
    CHECK(back.search(v, 100).items == idx.search(v, 100).items);
  }
  for (std::size_t i = 0; i < idx.size(); ++i) CHECK(back.meta(i) == idx.meta(i));
}

TEST_CASE("save/load: single entry with empty metadata") {
  testutil::TempDir tmp;
  VectorIndex idx("p", 8);
  std::vector<float> v(8, 0.0f);
  v[0] = 1.0f;
  idx.add("only", v, {});
  idx.save(tmp / "i.arxi");
  auto back = VectorIndex::load(tmp / "i.arxi");
  CHECK(back.search({v, "q"}, 1) == idx.search({v, "q"}, 1));
}

TEST_CASE("file layout: header fields little-endian") {
  testutil::TempDir tmp;
  auto idx = random_index(3, 16, 1);
  idx.save(tmp / "i.arxi");
  const std::string b = testutil::read_text(tmp / "i.arxi");
  REQUIRE(b.size() > 20);
  CHECK(b.substr(0, 4) == "ARXI");
  CHECK(static_cast<unsigned char>(b[4]) == 1);
  CHECK(b[5] == 0);
  CHECK(static_cast<unsigned char>(b[6]) == 16);
  CHECK(b[7] == 0);
  CHECK(static_cast<unsigned char>(b[8]) == 3);
  for (int i = 9; i < 16; ++i) CHECK(b[static_cast<std::size_t>(i)] == 0);
  std::uint32_t plen;
  std::memcpy(&plen, b.data() + 16, 4);
  CHECK(b.substr(20, plen) == idx.provider_id());
  std::uint32_t idlen;
  std::memcpy(&idlen, b.data() + 20 + plen, 4);
  CHECK(b.substr(24 + plen, idlen) == "c0000");
  float first;
  std::memcpy(&first, b.data() + 24 + plen + idlen, 4);
  CHECK(first == idx.vector(0)[0]);
}

TEST_CASE("load: wrong magic, wrong version, truncation") {
  testutil::TempDir tmp;
  auto idx = random_index(4, 8, 1);
  idx.save(tmp / "good.arxi");
  std::string bytes = testutil::read_text(tmp / "good.arxi");

  std::string bad = bytes;
  bad[0] = 'X';
  testutil::write_text(tmp / "magic.arxi", bad);
  CHECK_THROWS_AS(VectorIndex::load(tmp / "magic.arxi"), IndexFormatError);

  bad = bytes;
  bad[4] = 2;
  testutil::write_text(tmp / "ver.arxi", bad);
  CHECK_THROWS_WITH(VectorIndex::load(tmp / "ver.arxi"), Catch::Matchers::ContainsSubstring("version"));

  testutil::write_text(tmp / "trunc.arxi", bytes.substr(0, 40));
  try {
    VectorIndex::load(tmp / "trunc.arxi");
    FAIL("expected IndexFormatError");
  } catch (const IndexFormatError& e) {
    CHECK(e.offset() <= 40);
    CHECK(std::string(e.what()).find("byte") != std::string::npos);
  }
  CHECK_THROWS_AS(VectorIndex::load(tmp / "missing.arxi"), Error);
}
