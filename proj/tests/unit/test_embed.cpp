#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <random>

#include "mock_gateway.hpp"
#include "sabia/embed.hpp"
#include "sabia/error.hpp"

using namespace sabia;
using sabia::test::MockGateway;
using sabia::test::MockReply;

namespace {

double norm_of(const Embedding& e) {
  double s = 0.0;
  for (const double v : e.values()) s += v * v;
  return std::sqrt(s);
}

EmbedderConfig remote_cfg(const MockGateway& gw, int dim) {
  EmbedderConfig cfg;
  cfg.kind = EmbedderKind::remote;
  cfg.endpoint_url = gw.url();
  cfg.model_name = "mock-embed";
  cfg.dim = dim;
  cfg.timeout_s = 5.0;
  return cfg;
}

std::string embedding_body(const std::vector<std::vector<double>>& vectors) {
  nlohmann::json data = nlohmann::json::array();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    data.push_back({{"index", i}, {"embedding", vectors[i]}});
  }
  return nlohmann::json{{"data", data}}.dump();
}

}  // namespace

TEST_CASE("hash_embed matches the golden vector") {
  // Slots and signs computed independently from the FNV-1a hashes of the tokens.
  const auto e = hash_embed("Prazo de matrícula, prazo!", 16);
  REQUIRE(e.dim() == 16);
  CHECK(e.embedder_id() == "local-hash-fnv1a-16");
  for (int i = 0; i < 16; ++i) {
    const double v = e.values()[static_cast<std::size_t>(i)];
    if (i == 2) {
      CHECK(v == doctest::Approx(0.4082482904638631).epsilon(1e-15));
    } else if (i == 5) {
      CHECK(v == doctest::Approx(-0.8164965809277261).epsilon(1e-15));
    } else if (i == 14) {
      CHECK(v == doctest::Approx(-0.4082482904638631).epsilon(1e-15));
    } else {
      CHECK(v == 0.0);
    }
  }
}

TEST_CASE("hash_embed is deterministic and order invariant") {
  CHECK(hash_embed("matrícula", 256) == hash_embed("matrícula", 256));
  CHECK(hash_embed("a b", 256) == hash_embed("b a", 256));
  CHECK(std::abs(norm_of(hash_embed("regulamento do estágio obrigatório", 64)) - 1.0) <= 1e-12);
}

TEST_CASE("hash_embed rejects text without tokens") {
  CHECK_THROWS_AS(hash_embed("", 256), ConfigError);
  CHECK_THROWS_AS(hash_embed(" ,.! ", 256), ConfigError);
  CHECK_THROWS_AS(hash_embed("x", 0), ConfigError);
}

TEST_CASE("cosine examples") {
  const auto e1 = Embedding::normalized({1.0, 0.0}, "t");
  const auto e2 = Embedding::normalized({0.0, 1.0}, "t");
  const auto diag = Embedding::normalized({1.0, 1.0}, "t");
  CHECK(cosine(e1, e1) == 1.0);
  CHECK(cosine(e1, e2) == 0.0);
  CHECK(cosine(e1, diag) == doctest::Approx(0.70711).epsilon(1e-5));
  CHECK(cosine(e1, diag) == cosine(diag, e1));
  CHECK_THROWS_AS(cosine(e1, Embedding::normalized({1.0, 0.0, 0.0}, "t")), IntegrityError);
}

TEST_CASE("cosine is symmetric and clamped on random vectors") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(24);
    std::vector<double> b(24);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    const auto ea = Embedding::normalized(a, "t");
    const auto eb = Embedding::normalized(b, "t");
    const double c = cosine(ea, eb);
    CHECK(c == cosine(eb, ea));
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(cosine(ea, ea) <= 1.0);
  }
}

TEST_CASE("Embedding construction validates its values") {
  CHECK_THROWS_AS(Embedding::normalized({}, "t"), IntegrityError);
  CHECK_THROWS_AS(Embedding::normalized({0.0, 0.0}, "t"), IntegrityError);
  CHECK_THROWS_AS(Embedding::normalized({1.0, NAN}, "t"), IntegrityError);
  CHECK_THROWS_AS(Embedding::from_unit({0.5, 0.5}, "t"), IntegrityError);
  CHECK_NOTHROW(Embedding::from_unit({0.6, 0.8}, "t"));
}

TEST_CASE("remote embedder normalizes vectors on receipt") {
  MockGateway gw;
  gw.on_embed([](const nlohmann::json& req, int) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < req.at("input").size(); ++i) {
      std::vector<double> v(8, 0.0);
      v[0] = 3.0;
      v[1] = 4.0;
      out.push_back(v);
    }
    return MockReply{200, embedding_body(out)};
  });
  RemoteEmbedder embedder(remote_cfg(gw, 8));
  const auto out = embedder.embed({"primeiro", "segundo"});
  REQUIRE(out.size() == 2);
  for (const auto& e : out) {
    CHECK(e.dim() == 8);
    CHECK(e.embedder_id() == "mock-embed");
    CHECK(e.values()[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(e.values()[1] == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(std::abs(norm_of(e) - 1.0) <= 1e-9);
  }
  const auto req = gw.requests().back();
  CHECK(req.at("model") == "mock-embed");
  CHECK(req.at("input").size() == 2);
}

TEST_CASE("remote embedder rejects a dimension mismatch") {
  MockGateway gw;
  gw.on_embed([](const nlohmann::json&, int) { return MockReply{200, embedding_body({std::vector<double>(7, 1.0)})}; });
  RemoteEmbedder embedder(remote_cfg(gw, 8));
  CHECK_THROWS_AS(embedder.embed_one("texto"), IntegrityError);
}

TEST_CASE("remote embedder surfaces HTTP errors and malformed bodies") {
  MockGateway gw;
  gw.on_embed([](const nlohmann::json&, int call) {
    if (call == 0) return MockReply{503, "{\"error\":\"indisponível\"}"};
    return MockReply{200, "not json"};
  });
  RemoteEmbedder embedder(remote_cfg(gw, 8));
  try {
    embedder.embed_one("texto");
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.status() == 503);
    CHECK(e.body_excerpt().find("indisponível") != std::string::npos);
  }
  CHECK_THROWS_AS(embedder.embed_one("texto"), ProtocolError);
}

TEST_CASE("remote embedder times out on a slow server") {
  MockGateway gw;
  gw.on_embed([](const nlohmann::json&, int) {
    return MockReply{200, embedding_body({std::vector<double>(8, 1.0)}), std::chrono::milliseconds(800)};
  });
  auto cfg = remote_cfg(gw, 8);
  cfg.timeout_s = 0.2;
  RemoteEmbedder embedder(cfg);
  CHECK_THROWS_AS(embedder.embed_one("texto"), TimeoutError);
}

TEST_CASE("embedder configuration is validated") {
  EmbedderConfig cfg;
  cfg.kind = EmbedderKind::remote;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.kind = EmbedderKind::local_hash;
  cfg.dim = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg.dim = 32;
  const auto e = make_embedder(cfg);
  CHECK(e->id() == "local-hash-fnv1a-32");
  CHECK(e->dim() == 32);
}
