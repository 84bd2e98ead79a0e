// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "repoqa/gateway.hpp"

namespace repoqa::judge {

inline constexpr std::size_t kDimensions = 5;
inline constexpr std::array<const char*, kDimensions> kDimensionNames = {
    "correctness", "completeness", "relevance", "clarity", "reasoning"};

/// Five integer rubric scores, each in [1,10].
struct ScoreVector {
  std::array<int, kDimensions> scores{};

  int correctness() const { return scores[0]; }
  int completeness() const { return scores[1]; }
  int relevance() const { return scores[2]; }
  int clarity() const { return scores[3]; }
  int reasoning() const { return scores[4]; }

  /// Throws ProtocolError unless every field is in [1,10].
  void validate() const;
};

/// Aggregate of three independent judging runs.
struct JudgeVerdict {
  std::vector<ScoreVector> runs;            // the completed runs
  std::array<double, kDimensions> mean{};   // per-dimension averages
  double overall = 0.0;                     // sum of the five means
  bool complete = false;                    // all requested runs succeeded
};

/// Removes model self-identification phrases and provider names from
/// candidate text. Idempotent.
std::string anonymize(const std::string& text);

/// Instantiates the rubric template with the three slots filled; the
/// candidate is anonymized before insertion. All inputs must be nonempty.
std::string build_judge_prompt(const std::string& question,
                               const std::string& reference,
                               const std::string& candidate);

/// Extracts the first complete JSON object from the reply (tolerating
/// surrounding prose and code fences) and validates the five integer
/// fields. Throws ProtocolError on any malformed reply.
ScoreVector parse_scores(const std::string& reply);

/// Folds completed runs into a verdict: per-dimension means plus overall.
JudgeVerdict aggregate_runs(const std::vector<ScoreVector>& runs,
                            std::size_t requested_runs);

/// Issues `runs` independent judge calls (no shared conversation state)
/// and averages them. A run whose reply cannot be parsed is retried up
/// to 2 extra times; an unrecoverable run leaves the verdict incomplete.
JudgeVerdict score_answer(gateway::ChatBackend& backend,
                          const std::string& question,
                          const std::string& reference,
                          const std::string& candidate, std::size_t runs = 3);

}  // namespace repoqa::judge
