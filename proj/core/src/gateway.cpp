// SPDX-License-Identifier: Apache-2.0
#include "repoqa/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "repoqa/errors.hpp"

#include "httplib.h"

namespace repoqa::gateway {

using nlohmann::json;

std::string role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
    case Role::tool: return "tool";
  }
  return "user";
}

std::size_t approximate_tokens(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  std::size_t n = 0;
  while (in >> word) ++n;
  return n;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size())
    throw GatewayError("cosine: dimensionality mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// ScriptedChatBackend
// ---------------------------------------------------------------------------

ScriptedChatBackend::ScriptedChatBackend(std::vector<std::string> transcript,
                                         std::string model_id)
    : transcript_(std::move(transcript)), model_id_(std::move(model_id)) {}

ScriptedChatBackend ScriptedChatBackend::from_json(const json& replies,
                                                   std::string model_id) {
  if (!replies.is_array())
    throw GatewayError("scripted transcript must be a JSON array");
  std::vector<std::string> transcript;
  for (const json& r : replies) {
    if (r.is_string()) {
      transcript.push_back(r.get<std::string>());
    } else if (r.is_object() && r.contains("content")) {
      transcript.push_back(r["content"].get<std::string>());
    } else {
      throw GatewayError("transcript entries must be strings or {content} objects");
    }
  }
  return ScriptedChatBackend(std::move(transcript), std::move(model_id));
}

ScriptedChatBackend ScriptedChatBackend::from_file(const std::string& path,
                                                   std::string model_id) {
  std::ifstream in(path);
  if (!in) throw GatewayError("cannot open transcript: " + path);
  json replies = json::parse(in, nullptr, true, true);
  return from_json(replies, std::move(model_id));
}

ChatResult ScriptedChatBackend::complete(const ChatRequest& request) {
  if (request.messages.empty())
    throw GatewayError("chat request has no messages");
  if (cursor_ >= transcript_.size())
    throw GatewayError("scripted transcript exhausted after " +
                       std::to_string(transcript_.size()) + " replies");
  ChatResult result;
  result.message = transcript_[cursor_++];
  std::size_t prompt = 0;
  for (const ChatMessage& m : request.messages)
    prompt += approximate_tokens(m.content);
  result.usage = {prompt, approximate_tokens(result.message), true};
  return result;
}

// ---------------------------------------------------------------------------
// ScriptedEmbedder
// ---------------------------------------------------------------------------

ScriptedEmbedder::ScriptedEmbedder(std::size_t dimension, std::string model_id)
    : dimension_(dimension), model_id_(std::move(model_id)) {}

void ScriptedEmbedder::set_vector(const std::string& text,
                                  std::vector<double> values) {
  overrides_[text] = std::move(values);
}

std::vector<EmbeddingVector> ScriptedEmbedder::embed(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  std::optional<std::size_t> dim;
  for (const std::string& text : texts) {
    if (text.empty()) throw GatewayError("embed: empty text in batch");
    EmbeddingVector v;
    v.model_id = model_id_;
    if (auto it = overrides_.find(text); it != overrides_.end()) {
      v.values = it->second;
    } else {
      // Hash-seeded unit vector: identical text, identical vector.
      std::mt19937_64 rng(std::hash<std::string>{}(text));
      std::normal_distribution<double> normal(0.0, 1.0);
      v.values.resize(dimension_);
      double norm = 0;
      for (double& x : v.values) {
        x = normal(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      for (double& x : v.values) x /= norm;
    }
    if (dim && *dim != v.values.size())
      throw GatewayError("embed: dimensionality mismatch within batch");
    dim = v.values.size();
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// RetryingChatBackend
// ---------------------------------------------------------------------------

RetryingChatBackend::RetryingChatBackend(
    std::shared_ptr<ChatBackend> inner, RetryPolicy policy,
    std::function<void(std::chrono::milliseconds)> sleeper)
    : inner_(std::move(inner)),
      policy_(policy),
      sleeper_(sleeper ? std::move(sleeper)
                       : [](std::chrono::milliseconds d) {
                           std::this_thread::sleep_for(d);
                         }) {}

ChatResult RetryingChatBackend::complete(const ChatRequest& request) {
  std::chrono::milliseconds delay = policy_.initial_backoff;
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      ChatResult result = inner_->complete(request);
      result.attempts = attempt;
      return result;
    } catch (const GatewayError&) {
      if (attempt >= policy_.max_attempts) throw;
      sleeper_(delay);
      delay = std::chrono::milliseconds(static_cast<long long>(
          static_cast<double>(delay.count()) * policy_.backoff_multiplier));
    }
  }
}

// ---------------------------------------------------------------------------
// RateLimiter
// ---------------------------------------------------------------------------

RateLimiter::RateLimiter(std::size_t requests_per_minute)
    : requests_per_minute_(std::max<std::size_t>(requests_per_minute, 1)) {}

void RateLimiter::acquire() {
  using namespace std::chrono;
  for (;;) {
    steady_clock::time_point wait_until;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      const auto now = steady_clock::now();
      const auto cutoff = now - minutes(1);
      window_.erase(std::remove_if(window_.begin(), window_.end(),
                                   [&](auto t) { return t < cutoff; }),
                    window_.end());
      if (window_.size() < requests_per_minute_) {
        window_.push_back(now);
        return;
      }
      wait_until = *std::min_element(window_.begin(), window_.end()) + minutes(1);
    }
    std::this_thread::sleep_until(wait_until);
  }
}

// ---------------------------------------------------------------------------
// HttpChatBackend
// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpEndpoint endpoint)
    : endpoint_(std::move(endpoint)) {}

ChatResult HttpChatBackend::complete(const ChatRequest& request) {
  if (request.messages.empty())
    throw GatewayError("chat request has no messages");

  json body;
  body["model"] = endpoint_.model;
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output;
  body["messages"] = json::array();
  for (const ChatMessage& m : request.messages)
    body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
  if (request.tool_schemas) body["tools"] = *request.tool_schemas;

  httplib::Client client(endpoint_.base_url);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!endpoint_.api_key_env.empty()) {
    if (const char* key = std::getenv(endpoint_.api_key_env.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  auto res = client.Post(endpoint_.path, headers, body.dump(), "application/json");
  if (!res) throw GatewayError("transport failure contacting " + endpoint_.base_url);
  if (res->status != 200)
    throw GatewayError("backend returned HTTP " + std::to_string(res->status));

  json reply;
  try {
    reply = json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed backend reply: ") + e.what());
  }
  if (!reply.contains("choices") || reply["choices"].empty() ||
      !reply["choices"][0].contains("message"))
    throw ProtocolError("backend reply missing choices[0].message");

  ChatResult result;
  result.message = reply["choices"][0]["message"].value("content", "");
  if (reply.contains("usage")) {
    result.usage.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
    result.usage.output_tokens = reply["usage"].value("completion_tokens", 0);
  } else {
    std::size_t prompt = 0;
    for (const ChatMessage& m : request.messages)
      prompt += approximate_tokens(m.content);
    result.usage = {prompt, approximate_tokens(result.message), true};
  }
  return result;
}

// ---------------------------------------------------------------------------
// ModelRoster
// ---------------------------------------------------------------------------

void ModelRoster::validate() const {
  if (!reward_model.empty() && reward_model == judge_model)
    throw ConfigError(
        "reward model must be distinct from the evaluation judge (both are '" +
        reward_model + "')");
}

}  // namespace repoqa::gateway
