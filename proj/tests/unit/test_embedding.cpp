#include <cmath>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "memrouter/cache.hpp"
#include "memrouter/digest.hpp"
#include "memrouter/embedding.hpp"
#include "memrouter/error.hpp"
#include "memrouter/rng.hpp"
#include "memrouter/synthetic.hpp"
#include "server.hpp"
#include "util.hpp"

using namespace memrouter;

namespace {

std::vector<Turn> numbered_turns(std::size_t n) {
  std::vector<Turn> turns(n);
  for (std::size_t i = 0; i < n; ++i) {
    turns[i].turn_id = "t" + std::to_string(i);
    turns[i].speaker = i % 2 ? "B" : "A";
    turns[i].text = "turn number " + std::to_string(i);
    turns[i].turn_index = i;
  }
  return turns;
}

ChunkSequence chunks_with_history(const std::vector<Turn>& turns, std::size_t history) {
  std::vector<const Turn*> h;
  for (std::size_t i = 0; i < history; ++i) h.push_back(&turns[i]);
  return make_chunks(h, turns[history]);
}

double norm(const Embedding& v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("chunking: empty history yields the current chunk only") {
  auto turns = numbered_turns(1);
  auto seq = chunks_with_history(turns, 0);
  REQUIRE(seq.size() == 1);
  CHECK(seq.chunks[0].text == "A: turn number 0");
  CHECK(seq.chunks[0].first_index == 0);
  CHECK(seq.chunks[0].last_index == 0);
}

TEST_CASE("chunking: sixty history turns fill twelve chunks") {
  auto turns = numbered_turns(61);
  auto seq = chunks_with_history(turns, 60);
  REQUIRE(seq.size() == 13);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(seq.chunks[i].first_index == 5 * i);
    CHECK(seq.chunks[i].last_index == 5 * i + 4);
  }
  CHECK(seq.chunks[12].first_index == 60);
  CHECK(seq.chunks[12].span_length() == 1);
}

TEST_CASE("chunking: seven history turns split 2 + 5 from the right") {
  auto turns = numbered_turns(8);
  auto seq = chunks_with_history(turns, 7);
  REQUIRE(seq.size() == 3);
  CHECK(seq.chunks[0].first_index == 0);
  CHECK(seq.chunks[0].last_index == 1);
  CHECK(seq.chunks[1].first_index == 2);
  CHECK(seq.chunks[1].last_index == 6);
  CHECK(seq.chunks[2].first_index == 7);
  CHECK(seq.chunks[0].text == "A: turn number 0\nB: turn number 1");
}

TEST_CASE("chunking: long histories keep only the latest sixty turns") {
  auto turns = numbered_turns(200);
  for (std::size_t h : {0u, 1u, 4u, 5u, 6u, 59u, 60u, 61u, 64u, 65u, 137u, 199u}) {
    auto seq = chunks_with_history(turns, h);
    CHECK(seq.size() >= 1);
    CHECK(seq.size() <= kMaxChunks);
    CHECK(seq.chunks.back().first_index == h);
    std::size_t covered = 0;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      CHECK(seq.chunks[i].span_length() >= 1);
      CHECK(seq.chunks[i].span_length() <= kTurnsPerChunk);
      CHECK(seq.chunks[i].last_index + 1 == seq.chunks[i + 1].first_index);
      covered += seq.chunks[i].span_length();
    }
    CHECK(covered == std::min<std::size_t>(h, 60));
    auto again = chunks_with_history(turns, h);
    for (std::size_t i = 0; i < seq.size(); ++i) CHECK(again.chunks[i].text == seq.chunks[i].text);
  }
}

TEST_CASE("chunks_for_turn matches make_chunks") {
  auto data = planted_fact_corpus({.conversations = 1});
  auto turns = data.corpus[0].turns();
  std::vector<Turn> copy;
  for (const auto& tv : turns) copy.push_back(*tv.turn);
  for (std::size_t i : {0u, 3u, 64u, 99u}) {
    auto a = chunks_for_turn(turns, i);
    auto b = chunks_with_history(copy, i);
    REQUIRE(a.size() == b.size());
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(a.chunks[c].text == b.chunks[c].text);
  }
}

TEST_CASE("stub provider vectors are deterministic unit vectors") {
  HashEmbeddingProvider p(256, 42);
  auto a = p.embed("I adopted a dog last week");
  auto b = p.embed("I adopted a dog last week");
  CHECK(a.size() == 256);
  CHECK(a == b);
  CHECK(std::abs(norm(a) - 1.0) < 1e-6);
  CHECK(std::abs(cosine(a, b) - 1.0) < 1e-6);
  CHECK(std::abs(norm(p.embed("x")) - 1.0) < 1e-6);
  CHECK(p.calls() == 3);
  CHECK(hash_embed("Hello there", 256, 42) == hash_embed("hello   THERE", 256, 42));
  CHECK(hash_embed("hello", 256, 42) != hash_embed("hello", 256, 43));
  CHECK_THROWS_AS(HashEmbeddingProvider(4, 1), DimensionError);
}

TEST_CASE("token-disjoint texts are nearly orthogonal") {
  Rng rng(2024);
  std::size_t within = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::string a, b;
    const std::size_t na = 3 + rng.index(10), nb = 3 + rng.index(10);
    for (std::size_t i = 0; i < na; ++i) a += "a" + std::to_string(rng.index(100000)) + " ";
    for (std::size_t i = 0; i < nb; ++i) b += "b" + std::to_string(rng.index(100000)) + " ";
    if (std::abs(cosine(hash_embed(a, 256, 42), hash_embed(b, 256, 42))) < 0.25) ++within;
  }
  CHECK(within >= 995);
}

TEST_CASE("token overlap drives similarity") {
  auto dog = hash_embed("I adopted a dog", 256, 42);
  auto cat = hash_embed("I adopted a cat", 256, 42);
  auto budget = hash_embed("quarterly budget review", 256, 42);
  CHECK(cosine(dog, cat) > cosine(dog, budget));
  CHECK(cosine(dog, cat) == doctest::Approx(0.75).epsilon(0.15));
}

TEST_CASE("embed surfaces dimension mismatches from the remote service") {
  testutil::LocalServer srv;
  int requests = 0;
  srv.server().Post("/embeddings", [&](const httplib::Request& req, httplib::Response& res) {
    ++requests;
    auto body = nlohmann::json::parse(req.body);
    nlohmann::json out{{"data", nlohmann::json::array()}};
    for (std::size_t i = 0; i < body["input"].size(); ++i) {
      out["data"].push_back({{"index", i}, {"embedding", std::vector<float>(512, 0.5f)}});
    }
    res.set_content(out.dump(), "application/json");
  });
  srv.start();
  RemoteEmbeddingProvider p(srv.url(), "test-model", 1024, 2000);
  CHECK_THROWS_AS(embed(p, Chunk{"hello", 0, 0}), DimensionError);
  CHECK(requests == 1);

  RemoteEmbeddingProvider ok(srv.url(), "test-model", 512, 2000);
  CHECK(embed(ok, Chunk{"hello", 0, 0}).size() == 512);
  srv.stop();
  CHECK_THROWS_AS(embed(ok, Chunk{"hello", 0, 0}), ProviderError);
}

TEST_CASE("embed_chunks stacks one row per chunk") {
  HashEmbeddingProvider p(64, 7);
  auto turns = numbered_turns(12);
  auto seq = chunks_with_history(turns, 11);
  auto m = embed_chunks(p, seq);
  CHECK(m.rows() == 4);
  CHECK(m.cols() == 64);
  auto last = hash_embed(seq.chunks.back().text, 64, 7);
  for (int j = 0; j < 64; ++j) CHECK(m(3, j) == last[j]);
}

TEST_CASE("cache round-trip is bit-exact and detects truncation") {
  EmbeddingCache cache(16);
  Rng rng(5);
  std::vector<std::vector<float>> rows;
  for (int i = 0; i < 10; ++i) {
    std::vector<float> r(16);
    for (auto& x : r) x = static_cast<float>(rng.uniform(-1, 1));
    rows.push_back(r);
    CHECK(cache.add(digest16("row" + std::to_string(i)), r));
  }
  CHECK_FALSE(cache.add(digest16("row3"), rows[3]));
  auto bytes = cache.encode();
  CHECK(std::string(bytes.begin(), bytes.begin() + 6) == "MREMB1");
  CHECK(bytes.size() == 6 + 4 + 4 + 10 * 16 * 4 + 10 * 16 + 32);
  auto back = EmbeddingCache::decode(bytes);
  REQUIRE(back.size() == 10);
  for (int i = 0; i < 10; ++i) {
    auto r = back.find(digest16("row" + std::to_string(i)));
    REQUIRE(r);
    CHECK(std::memcmp(r->data(), rows[i].data(), 16 * sizeof(float)) == 0);
  }
  auto cut = bytes;
  cut.pop_back();
  CHECK_THROWS_AS(EmbeddingCache::decode(cut), ChecksumError);
  auto flipped = bytes;
  flipped[20] ^= 1;
  CHECK_THROWS_AS(EmbeddingCache::decode(flipped), ChecksumError);
}

TEST_CASE("precompute_cache embeds each distinct chunk once") {
  auto data = planted_fact_corpus({.conversations = 2, .sessions = 2, .turns_per_session = 20});
  std::set<std::string> distinct;
  for (const auto& conv : data.corpus) {
    auto turns = conv.turns();
    for (std::size_t i = 0; i < turns.size(); ++i) {
      for (const auto& c : chunks_for_turn(turns, i).chunks) distinct.insert(c.text);
    }
  }
  auto dir = testutil::scratch_dir("cache");
  const auto path = (dir / "c.mremb").string();

  HashEmbeddingProvider a(64, 1);
  CacheStats cold;
  auto cache = precompute_cache(data.corpus, a, path, &cold);
  CHECK(cold.distinct_chunks == distinct.size());
  CHECK(cold.embedded == distinct.size());
  CHECK(a.calls() == distinct.size());
  CHECK(cache.size() == distinct.size());

  HashEmbeddingProvider warm_provider(64, 1);
  CacheStats warm;
  precompute_cache(data.corpus, warm_provider, path, &warm);
  CHECK(warm_provider.calls() == 0);
  CHECK(warm.reused == distinct.size());
  CHECK_FALSE(warm.rebuilt);

  HashEmbeddingProvider b(64, 2);
  CacheStats reseeded;
  precompute_cache(data.corpus, b, path, &reseeded);
  CHECK(b.calls() == distinct.size());
  CHECK(reseeded.reused == 0);

  auto turns = data.corpus[0].turns();
  auto seq = chunks_for_turn(turns, 30);
  auto loaded = EmbeddingCache::load(path);
  auto m = lookup_chunks(loaded, b, seq);
  auto direct = embed_chunks(b, seq);
  CHECK(m == direct);
}

TEST_CASE("memoizing provider forwards each text once") {
  auto inner = std::make_shared<HashEmbeddingProvider>(32, 3);
  MemoizingProvider memo(inner);
  auto x = memo.embed("alpha beta");
  auto y = memo.embed("alpha beta");
  memo.embed("gamma");
  CHECK(x == y);
  CHECK(inner->calls() == 2);
  CHECK(memo.calls() == 3);
  CHECK(memo.state_hash() == inner->state_hash());
}
