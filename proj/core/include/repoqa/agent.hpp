// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "repoqa/gateway.hpp"
#include "repoqa/toolkit.hpp"

namespace repoqa::agent {

struct AgentConfig {
  std::size_t max_turns = 25;
  std::size_t context_budget = 32'768;      // tokens
  std::size_t observation_cap = 28'000;     // characters
  double temperature = 0.0;

  void validate() const;
};

/// One reason/act/observe cycle.
struct Turn {
  std::size_t index = 0;  // 1-based
  std::string reasoning;  // full assistant text for the turn
  std::vector<toolkit::ToolCall> actions;
  std::vector<toolkit::Observation> observations;
  std::optional<std::string> finish;
};

enum class Termination { finished, turn_cap, context_cap, protocol_failure };

std::string termination_name(Termination t);
Termination parse_termination(const std::string& name);

struct Trajectory {
  std::string question_id;
  std::vector<Turn> turns;
  std::string final_answer;
  Termination termination = Termination::finished;
  gateway::Usage usage;
};

/// Classification of one assistant turn.
struct ParsedTurn {
  enum class Kind { tool_calls, final, empty };
  Kind kind = Kind::empty;
  std::vector<toolkit::ToolCall> tool_calls;
  std::string final_answer;
  std::string reasoning;  // assistant text with markup blocks removed
  std::vector<std::string> violations;
};

/// Total over arbitrary text: extracts <tool_call> markup and the
/// <finish> block, recording protocol violations (no action at all,
/// duplicate finish blocks, malformed tool-call JSON) instead of
/// throwing.
ParsedTurn parse_assistant_turn(const std::string& text);

/// Flags fenced code blocks, citations with absolute or unindexed paths,
/// citations whose line range exceeds the cited file, and empty answers.
/// Returns violations; never throws.
std::vector<std::string> validate_final_answer(const std::string& answer,
                                               const toolkit::RepoSnapshot& snapshot);

std::string build_system_prompt(const toolkit::RepoSnapshot& snapshot,
                                const AgentConfig& config);
std::string build_user_prompt(const toolkit::RepoSnapshot& snapshot,
                              const std::string& question);

/// Runs the ReAct session: reason, act, observe until a finish block,
/// the turn cap (one forced finalization request with tools disabled),
/// or the context budget. Gateway failure mid-session preserves the
/// partial turns with termination = protocol_failure.
Trajectory run_session(const std::string& question_id,
                       const std::string& question,
                       gateway::ChatBackend& backend,
                       const toolkit::RepoSnapshot& snapshot,
                       const AgentConfig& config = {});

nlohmann::json trajectory_to_json(const Trajectory& trajectory);
Trajectory trajectory_from_json(const nlohmann::json& j);

}  // namespace repoqa::agent
