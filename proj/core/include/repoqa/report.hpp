// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "repoqa/agent.hpp"
#include "repoqa/corpus.hpp"
#include "repoqa/judge.hpp"

namespace repoqa::report {

/// One judged answer joined to the item and the answering model.
struct VerdictRecord {
  std::string question_id;
  std::string model;
  judge::JudgeVerdict verdict;
};

enum class Axis { repository, cluster, qa_type, model };

std::string axis_name(Axis axis);
Axis parse_axis(const std::string& name);

struct BreakdownRow {
  std::string key;
  std::array<double, judge::kDimensions> mean{};
  double overall = 0.0;
  std::size_t count = 0;
};

struct BreakdownReport {
  Axis axis = Axis::repository;
  std::vector<BreakdownRow> rows;  // sorted by group key
  std::size_t total = 0;           // evaluated verdicts, equals sum of counts
};

/// Group-by on the axis key with per-dimension means and overall per
/// group. Every verdict must join to an item; an orphan verdict throws
/// rather than being dropped.
BreakdownReport breakdown(const std::vector<VerdictRecord>& verdicts,
                          const std::vector<corpus::QaItem>& items, Axis axis);

nlohmann::json breakdown_to_json(const BreakdownReport& report);
std::string breakdown_to_csv(const BreakdownReport& report);

struct ToolUsageStats {
  std::size_t sessions = 0;
  std::size_t total_turns = 0;
  double mean_turns = 0.0;
  std::map<std::string, std::size_t> calls_per_tool;  // search/view/command
  std::map<std::string, std::size_t> terminations;    // reason -> count
};

/// Exact counts over trajectories: calls per tool, turns per session,
/// and the termination-reason histogram.
ToolUsageStats tool_usage_stats(const std::vector<agent::Trajectory>& trajectories);

nlohmann::json tool_usage_to_json(const ToolUsageStats& stats);

}  // namespace repoqa::report
