// SPDX-License-Identifier: Apache-2.0
#include "repoqa/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "repoqa/errors.hpp"

namespace repoqa::reward {

void RewardWeights::validate() const {
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-12)
    throw RewardError("reward weights must sum to 1");
  for (double x : w)
    if (x <= 0.0) throw RewardError("reward weights must be positive");
  if (w[0] != *std::max_element(w.begin(), w.end()))
    throw RewardError("correctness must carry the maximum weight");
  if (w[3] != *std::min_element(w.begin(), w.end()))
    throw RewardError("clarity must carry the minimum weight");
}

double compute_reward(const judge::ScoreVector& s, const RewardWeights& weights) {
  s.validate();
  weights.validate();
  double dot = 0;
  for (std::size_t i = 0; i < judge::kDimensions; ++i)
    dot += weights.w[i] * s.scores[i];
  return dot / 10.0;
}

judge::ScoreVector score_rollout(gateway::ChatBackend& reward_backend,
                                 const std::string& question,
                                 const std::string& reference,
                                 const std::string& candidate) {
  const std::string prompt =
      judge::build_judge_prompt(question, reference, candidate);
  for (int attempt = 0; attempt < 3; ++attempt) {
    gateway::ChatRequest request;
    request.messages.push_back({gateway::Role::user, prompt});
    request.temperature = 0.0;
    try {
      const gateway::ChatResult result = reward_backend.complete(request);
      return judge::parse_scores(result.message);
    } catch (const ProtocolError&) {
      // malformed reply; retry
    }
  }
  throw RewardError("reward model reply unparseable after retries; rollout unrewarded");
}

std::vector<double> group_normalize(const RolloutGroup& group) {
  if (group.rewards.size() < 2)
    throw RewardError("rollout group needs >= 2 rewards");
  for (double r : group.rewards) {
    if (r < 0.1 || r > 1.0)
      throw RewardError("reward outside [0.1, 1.0] in group " + group.question);
  }

  const double n = static_cast<double>(group.rewards.size());
  const double mean =
      std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0) / n;
  double variance = 0;
  for (double r : group.rewards) variance += (r - mean) * (r - mean);
  variance /= n;
  const double sigma = std::max(std::sqrt(variance), 1e-8);

  std::vector<double> advantages;
  advantages.reserve(group.rewards.size());
  for (double r : group.rewards) advantages.push_back((r - mean) / sigma);
  return advantages;
}

}  // namespace repoqa::reward
