// SPDX-License-Identifier: Apache-2.0
#include "repoqa/report.hpp"

#include <sstream>

#include "repoqa/errors.hpp"

namespace repoqa::report {

using nlohmann::json;

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::repository: return "repository";
    case Axis::cluster: return "cluster";
    case Axis::qa_type: return "qa_type";
    case Axis::model: return "model";
  }
  return "repository";
}

Axis parse_axis(const std::string& name) {
  if (name == "repository") return Axis::repository;
  if (name == "cluster") return Axis::cluster;
  if (name == "qa_type") return Axis::qa_type;
  if (name == "model") return Axis::model;
  throw ConfigError("unknown breakdown axis: " + name);
}

BreakdownReport breakdown(const std::vector<VerdictRecord>& verdicts,
                          const std::vector<corpus::QaItem>& items, Axis axis) {
  std::map<std::string, const corpus::QaItem*> by_id;
  for (const corpus::QaItem& item : items) by_id[item.id] = &item;

  struct Accumulator {
    std::array<double, judge::kDimensions> sum{};
    std::size_t count = 0;
  };
  std::map<std::string, Accumulator> groups;

  for (const VerdictRecord& record : verdicts) {
    const auto found = by_id.find(record.question_id);
    if (found == by_id.end())
      throw Error("orphan verdict: question id " + record.question_id +
                  " has no matching item");
    const corpus::QaItem& item = *found->second;

    std::string key;
    switch (axis) {
      case Axis::repository: key = item.repo; break;
      case Axis::cluster: key = item.cluster_id; break;
      case Axis::qa_type:
        key = item.qa_type.interrogative + " / " + item.qa_type.intention;
        break;
      case Axis::model: key = record.model; break;
    }

    Accumulator& acc = groups[key];
    for (std::size_t d = 0; d < judge::kDimensions; ++d)
      acc.sum[d] += record.verdict.mean[d];
    ++acc.count;
  }

  BreakdownReport report;
  report.axis = axis;
  for (const auto& [key, acc] : groups) {
    BreakdownRow row;
    row.key = key;
    row.count = acc.count;
    for (std::size_t d = 0; d < judge::kDimensions; ++d) {
      row.mean[d] = acc.sum[d] / static_cast<double>(acc.count);
      row.overall += row.mean[d];
    }
    report.rows.push_back(std::move(row));
    report.total += acc.count;
  }
  return report;
}

json breakdown_to_json(const BreakdownReport& report) {
  json rows = json::array();
  for (const BreakdownRow& row : report.rows) {
    json r = {{"key", row.key}, {"overall", row.overall}, {"count", row.count}};
    for (std::size_t d = 0; d < judge::kDimensions; ++d)
      r[judge::kDimensionNames[d]] = row.mean[d];
    rows.push_back(std::move(r));
  }
  return {{"axis", axis_name(report.axis)},
          {"rows", rows},
          {"total", report.total}};
}

std::string breakdown_to_csv(const BreakdownReport& report) {
  std::ostringstream out;
  out << "key";
  for (const char* name : judge::kDimensionNames) out << ',' << name;
  out << ",overall,count\n";
  for (const BreakdownRow& row : report.rows) {
    out << '"' << row.key << '"';
    for (double m : row.mean) out << ',' << m;
    out << ',' << row.overall << ',' << row.count << '\n';
  }
  return out.str();
}

ToolUsageStats tool_usage_stats(
    const std::vector<agent::Trajectory>& trajectories) {
  ToolUsageStats stats;
  stats.calls_per_tool = {{"search", 0}, {"view", 0}, {"command", 0}};
  for (const agent::Trajectory& trajectory : trajectories) {
    ++stats.sessions;
    stats.total_turns += trajectory.turns.size();
    ++stats.terminations[agent::termination_name(trajectory.termination)];
    for (const agent::Turn& turn : trajectory.turns)
      for (const toolkit::ToolCall& call : turn.actions)
        ++stats.calls_per_tool[toolkit::tool_name(call.tool)];
  }
  if (stats.sessions > 0)
    stats.mean_turns = static_cast<double>(stats.total_turns) /
                       static_cast<double>(stats.sessions);
  return stats;
}

json tool_usage_to_json(const ToolUsageStats& stats) {
  return {{"sessions", stats.sessions},
          {"total_turns", stats.total_turns},
          {"mean_turns", stats.mean_turns},
          {"calls_per_tool", stats.calls_per_tool},
          {"terminations", stats.terminations}};
}

}  // namespace repoqa::report
