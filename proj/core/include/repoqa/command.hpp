// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <string>
#include <vector>

#include "repoqa/observation.hpp"
#include "repoqa/snapshot.hpp"

namespace repoqa::toolkit {

inline constexpr std::chrono::seconds kCommandTimeout{10};

/// Outcome of screening a command line against the read-only policy.
struct PolicyDecision {
  bool allowed = false;
  std::string reason;  // rule violated when rejected
};

/// Screens a command line without executing it. Allowlisted programs:
/// grep, find, head, tail, cat, wc, sed (print-only), awk (no writes),
/// ls (no -R), tree (only with -L), file, stat. Anything else, any
/// write verb, and any output redirection is rejected.
PolicyDecision screen_command(const std::string& command_line);

/// Runs an allowlisted read-only command with working directory = root,
/// capturing combined stdout/stderr, truncated to output_cap with the
/// exit status appended. Rejected commands are never executed and yield
/// a rejection Observation explaining the rule violated; a wall-clock
/// timeout yields a timeout Observation.
Observation execute_readonly(const RepoSnapshot& snapshot,
                             const std::string& command_line,
                             std::size_t output_cap = kDefaultObservationCap);

}  // namespace repoqa::toolkit
