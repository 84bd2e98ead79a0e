// SPDX-License-Identifier: Apache-2.0
#include "repoqa/judge.hpp"

#include <regex>

#include "repoqa/assets.hpp"
#include "repoqa/errors.hpp"
#include "repoqa/jsonl.hpp"

namespace repoqa::judge {

using nlohmann::json;

void ScoreVector::validate() const {
  for (std::size_t i = 0; i < kDimensions; ++i) {
    if (scores[i] < 1 || scores[i] > 10)
      throw ProtocolError(std::string(kDimensionNames[i]) + " score " +
                          std::to_string(scores[i]) + " outside [1,10]");
  }
}

std::string anonymize(const std::string& text) {
  // Self-identification openers and bare provider/model names. Patterns
  // are applied repeatedly until a fixpoint, which makes the pass
  // idempotent by construction.
  static const std::vector<std::regex> patterns = {
      std::regex(R"((As|I am|I'm)\s+(Claude|ChatGPT|GPT-?[0-9a-zA-Z.]*|Gemini|an AI (language )?model|a language model)[,.!]?\s*)",
                 std::regex::icase),
      std::regex(R"((developed|created|trained)\s+by\s+(Anthropic|OpenAI|Google|Meta|Mistral)[,.!]?\s*)",
                 std::regex::icase),
  };
  std::string out = text;
  for (;;) {
    std::string next = out;
    for (const std::regex& p : patterns) next = std::regex_replace(next, p, "");
    if (next == out) return out;
    out = std::move(next);
  }
}

std::string build_judge_prompt(const std::string& question,
                               const std::string& reference,
                               const std::string& candidate) {
  if (question.empty() || reference.empty() || candidate.empty())
    throw Error("build_judge_prompt: all inputs must be nonempty");
  std::string prompt = assets::load("judge_prompt.txt");
  prompt = assets::substitute(std::move(prompt), "question", question);
  prompt = assets::substitute(std::move(prompt), "reference", reference);
  prompt = assets::substitute(std::move(prompt), "candidate", anonymize(candidate));
  return prompt;
}

ScoreVector parse_scores(const std::string& reply) {
  const auto maybe = jsonl::extract_first_object(reply);
  if (!maybe) throw ProtocolError("no JSON object found in judge reply");
  const json& object = *maybe;

  ScoreVector v;
  for (std::size_t i = 0; i < kDimensions; ++i) {
    const char* name = kDimensionNames[i];
    if (!object.contains(name))
      throw ProtocolError(std::string("missing field: ") + name);
    if (!object[name].is_number_integer())
      throw ProtocolError(std::string("non-integer field: ") + name);
    v.scores[i] = object[name].get<int>();
  }
  v.validate();
  return v;
}

JudgeVerdict aggregate_runs(const std::vector<ScoreVector>& runs,
                            std::size_t requested_runs) {
  JudgeVerdict verdict;
  verdict.runs = runs;
  verdict.complete = runs.size() == requested_runs && !runs.empty();
  if (runs.empty()) return verdict;
  for (std::size_t d = 0; d < kDimensions; ++d) {
    double sum = 0;
    for (const ScoreVector& run : runs) sum += run.scores[d];
    verdict.mean[d] = sum / static_cast<double>(runs.size());
    verdict.overall += verdict.mean[d];
  }
  return verdict;
}

JudgeVerdict score_answer(gateway::ChatBackend& backend,
                          const std::string& question,
                          const std::string& reference,
                          const std::string& candidate, std::size_t runs) {
  const std::string prompt = build_judge_prompt(question, reference, candidate);
  std::vector<ScoreVector> completed;
  for (std::size_t run = 0; run < runs; ++run) {
    bool scored = false;
    for (int attempt = 0; attempt < 3 && !scored; ++attempt) {
      gateway::ChatRequest request;
      request.messages.push_back({gateway::Role::user, prompt});
      request.temperature = 0.0;
      try {
        const gateway::ChatResult result = backend.complete(request);
        completed.push_back(parse_scores(result.message));
        scored = true;
      } catch (const ProtocolError&) {
        // malformed reply; retry the run
      } catch (const GatewayError&) {
        // backend failure after its own retries; retry the run
      }
    }
    // an unrecoverable run is recorded as missing; the verdict is
    // marked incomplete below
  }
  return aggregate_runs(completed, runs);
}

}  // namespace repoqa::judge
