// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "repoqa/gateway.hpp"
#include "repoqa/judge.hpp"

namespace repoqa::reward {

/// Rubric weights, ordered (correctness, completeness, relevance,
/// clarity, reasoning). Correctness carries the most weight and clarity
/// the least; components sum to 1.
struct RewardWeights {
  std::array<double, judge::kDimensions> w = {0.3, 0.2, 0.2, 0.1, 0.2};

  void validate() const;
};

/// Rewards for all rollouts of one question, each in [0.1, 1.0].
struct RolloutGroup {
  std::string question;
  std::vector<double> rewards;
};

/// r = (w . s) / 10, always in [0.1, 1.0] for valid scores.
double compute_reward(const judge::ScoreVector& s, const RewardWeights& w = {});

/// Single rubric call against the reward model (reusing the judge
/// prompt/parse machinery). Throws RewardError when the reply stays
/// unparseable after retries, so the rollout can be excluded from its
/// group.
judge::ScoreVector score_rollout(gateway::ChatBackend& reward_backend,
                                 const std::string& question,
                                 const std::string& reference,
                                 const std::string& candidate);

/// Mean/sigma normalization within the rollout group (population sigma
/// with a 1e-8 floor). Advantages sum to zero. Requires group size >= 2.
std::vector<double> group_normalize(const RolloutGroup& group);

}  // namespace repoqa::reward
