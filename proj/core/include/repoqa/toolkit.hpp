// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "repoqa/command.hpp"
#include "repoqa/observation.hpp"
#include "repoqa/search.hpp"
#include "repoqa/snapshot.hpp"
#include "repoqa/view.hpp"

#include "json.hpp"

namespace repoqa::toolkit {

enum class Tool { search, view, command };

std::string tool_name(Tool tool);

/// One requested tool invocation. Arguments are validated against the
/// per-tool schema before execution.
struct ToolCall {
  Tool tool = Tool::search;
  nlohmann::json arguments = nlohmann::json::object();
};

/// Parses the published wire name ("semantic_search", "view_codebase",
/// "execute_readonly_command"; the short aliases are also accepted).
/// Throws ProtocolError for anything else.
Tool parse_tool_name(const std::string& name);

/// Machine-readable description of the three tool signatures, injected
/// into the agent system prompt between <tools></tools> tags.
nlohmann::json tool_schemas();

/// Validates arguments against the tool's schema and executes it against
/// the snapshot. Schema violations yield an error Observation rather
/// than throwing, so a malformed call becomes feedback to the agent.
Observation execute_tool_call(const RepoSnapshot& snapshot, const ToolCall& call,
                              std::size_t observation_cap = kDefaultObservationCap);

}  // namespace repoqa::toolkit
