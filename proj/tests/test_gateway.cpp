// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "repoqa/errors.hpp"
#include "repoqa/gateway.hpp"
#include "test_support.hpp"

using namespace repoqa;

TEST_CASE("scripted backend replays a transcript in order and then fails") {
  gateway::ScriptedChatBackend backend({"first", "second"});
  gateway::ChatRequest request;
  request.messages.push_back({gateway::Role::user, "hello"});

  CHECK(backend.complete(request).message == "first");
  CHECK(backend.complete(request).message == "second");
  try {
    backend.complete(request);
    FAIL("expected GatewayError");
  } catch (const GatewayError& e) {
    CHECK(std::string(e.what()).find("exhausted after 2") != std::string::npos);
  }
}

TEST_CASE("scripted backend loads both transcript file shapes") {
  test_support::TempDir dir;
  const auto path = dir.path() / "t.json";
  test_support::write_file(path, R"(["a", {"content": "b"}])");
  auto backend = gateway::ScriptedChatBackend::from_file(path.string());
  gateway::ChatRequest request;
  request.messages.push_back({gateway::Role::user, "x"});
  CHECK(backend.complete(request).message == "a");
  CHECK(backend.complete(request).message == "b");
}

TEST_CASE("retrying backend backs off exponentially and gives up") {
  class Flaky : public gateway::ChatBackend {
   public:
    gateway::ChatResult complete(const gateway::ChatRequest&) override {
      ++calls;
      if (calls < 3) throw GatewayError("transient");
      return {"done", {}, 1};
    }
    std::string model_id() const override { return "flaky"; }
    int calls = 0;
  };

  auto flaky = std::make_shared<Flaky>();
  std::vector<std::chrono::milliseconds> delays;
  gateway::RetryingChatBackend backend(
      flaky, {}, [&delays](std::chrono::milliseconds d) { delays.push_back(d); });

  gateway::ChatRequest request;
  request.messages.push_back({gateway::Role::user, "x"});
  CHECK(backend.complete(request).message == "done");
  CHECK(flaky->calls == 3);
  REQUIRE(delays.size() == 2);
  CHECK(delays[0] == std::chrono::milliseconds(250));
  CHECK(delays[1] == std::chrono::milliseconds(500));

  auto dead = std::make_shared<Flaky>();
  dead->calls = -1000;  // never recovers within the attempt budget
  gateway::RetryingChatBackend hopeless(dead, {},
                                        [](std::chrono::milliseconds) {});
  CHECK_THROWS_AS(hopeless.complete(request), GatewayError);
}

TEST_CASE("scripted embedder is deterministic and honors overrides") {
  gateway::ScriptedEmbedder embedder(8);
  const auto a = embedder.embed({"alpha", "beta"});
  const auto b = embedder.embed({"alpha", "beta"});
  REQUIRE(a.size() == 2);
  CHECK(a[0].values == b[0].values);
  CHECK(a[1].values == b[1].values);
  CHECK(a[0].values != a[1].values);

  double norm = 0;
  for (double v : a[0].values) norm += v * v;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-9);

  gateway::ScriptedEmbedder pinned(3);
  pinned.set_vector("alpha", {1, 0, 0});
  CHECK(pinned.embed({"alpha"})[0].values == std::vector<double>{1, 0, 0});
}

TEST_CASE("cosine similarity basics") {
  gateway::EmbeddingVector x{{1, 0}, "m"};
  gateway::EmbeddingVector y{{0, 1}, "m"};
  CHECK(gateway::cosine_similarity(x, x) == doctest::Approx(1.0));
  CHECK(gateway::cosine_similarity(x, y) == doctest::Approx(0.0));
}

TEST_CASE("token approximation counts whitespace-separated tokens") {
  CHECK(gateway::approximate_tokens("one two  three\nfour") == 4);
  CHECK(gateway::approximate_tokens("") == 0);
}

TEST_CASE("model roster rejects a shared judge and reward model") {
  gateway::ModelRoster roster;
  roster.agent_model = "a";
  roster.judge_model = "j";
  roster.reward_model = "j";
  CHECK_THROWS_AS(roster.validate(), ConfigError);
  roster.reward_model = "r";
  CHECK_NOTHROW(roster.validate());
}
