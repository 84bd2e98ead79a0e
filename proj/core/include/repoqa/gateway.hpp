// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace repoqa::gateway {

enum class Role { system, user, assistant, tool };

std::string role_name(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  std::optional<nlohmann::json> tool_schemas;
  double temperature = 0.0;
  std::size_t max_output = 8192;
};

struct Usage {
  std::size_t prompt_tokens = 0;
  std::size_t output_tokens = 0;
  bool approximate = false;

  Usage& operator+=(const Usage& other) {
    prompt_tokens += other.prompt_tokens;
    output_tokens += other.output_tokens;
    approximate = approximate || other.approximate;
    return *this;
  }
};

struct ChatResult {
  std::string message;
  Usage usage;
  std::size_t attempts = 1;
};

/// Whitespace-token count, used when the provider reports no usage.
std::size_t approximate_tokens(const std::string& text);

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResult complete(const ChatRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::string model_id;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per input, order preserving. Every text must be nonempty
  /// and all vectors of one model share one dimensionality.
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) = 0;
};

// ---------------------------------------------------------------------------
// Scripted backends: deterministic playback for tests and desk runs.
// ---------------------------------------------------------------------------

/// Replays a fixed ordered transcript of assistant replies. Running the
/// harness twice with the same transcript produces identical output.
class ScriptedChatBackend : public ChatBackend {
 public:
  explicit ScriptedChatBackend(std::vector<std::string> transcript,
                               std::string model_id = "scripted");

  /// Loads a JSON file holding an ordered array of reply strings or
  /// objects with a "content" field.
  static ScriptedChatBackend from_file(const std::string& path,
                                       std::string model_id = "scripted");
  static ScriptedChatBackend from_json(const nlohmann::json& replies,
                                       std::string model_id = "scripted");

  ChatResult complete(const ChatRequest& request) override;
  std::string model_id() const override { return model_id_; }
  std::size_t remaining() const { return transcript_.size() - cursor_; }

 private:
  std::vector<std::string> transcript_;
  std::size_t cursor_ = 0;
  std::string model_id_;
};

/// Deterministic embedder: explicit text -> vector entries, plus a
/// hash-seeded unit-vector fallback so identical texts always map to
/// identical vectors.
class ScriptedEmbedder : public Embedder {
 public:
  explicit ScriptedEmbedder(std::size_t dimension = 8,
                            std::string model_id = "scripted-embedder");

  void set_vector(const std::string& text, std::vector<double> values);

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) override;

 private:
  std::size_t dimension_;
  std::string model_id_;
  std::map<std::string, std::vector<double>> overrides_;
};

// ---------------------------------------------------------------------------
// Retry and rate limiting
// ---------------------------------------------------------------------------

struct RetryPolicy {
  std::size_t max_attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  double backoff_multiplier = 2.0;
};

/// Wraps a backend with exponential-backoff retries on GatewayError.
/// Total attempts per call never exceed the policy cap; the delays are
/// monotonically non-decreasing.
class RetryingChatBackend : public ChatBackend {
 public:
  RetryingChatBackend(std::shared_ptr<ChatBackend> inner, RetryPolicy policy,
                      std::function<void(std::chrono::milliseconds)> sleeper = {});

  ChatResult complete(const ChatRequest& request) override;
  std::string model_id() const override { return inner_->model_id(); }

 private:
  std::shared_ptr<ChatBackend> inner_;
  RetryPolicy policy_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
};

/// Simple requests-per-minute gate shared by concurrent callers.
class RateLimiter {
 public:
  explicit RateLimiter(std::size_t requests_per_minute);
  void acquire();

 private:
  std::size_t requests_per_minute_;
  std::mutex mutex_;
  std::vector<std::chrono::steady_clock::time_point> window_;
};

// ---------------------------------------------------------------------------
// Live HTTP backend (chat-completions style JSON)
// ---------------------------------------------------------------------------

struct HttpEndpoint {
  std::string base_url;       // e.g. https://api.example.com
  std::string path = "/v1/chat/completions";
  std::string api_key_env;    // credentials come from the environment only
  std::string model;
};

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpEndpoint endpoint);
  ChatResult complete(const ChatRequest& request) override;
  std::string model_id() const override { return endpoint_.model; }

 private:
  HttpEndpoint endpoint_;
};

// ---------------------------------------------------------------------------
// Logical model configuration
// ---------------------------------------------------------------------------

/// One configured endpoint per logical model. The reward model must be
/// distinct from the evaluation judge; this is checked at startup.
struct ModelRoster {
  std::string agent_model;
  std::string judge_model;
  std::string reward_model;
  std::string embedding_model;

  /// Throws ConfigError when reward and judge share a model id.
  void validate() const;
};

}  // namespace repoqa::gateway
