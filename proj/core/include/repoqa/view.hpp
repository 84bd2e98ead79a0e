// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>

#include "repoqa/observation.hpp"
#include "repoqa/snapshot.hpp"

namespace repoqa::toolkit {

/// Maximum number of lines a concise outline may contain.
inline constexpr std::size_t kConciseOutlineCap = 100;

/// Maximum directory depth listed by a directory view.
inline constexpr std::size_t kDirectoryViewDepth = 2;

struct ViewOptions {
  std::optional<std::pair<std::size_t, std::size_t>> line_range;  // 1-based inclusive
  bool concise = false;
  std::size_t observation_cap = kDefaultObservationCap;
};

/// Scoped inspection of a file or directory.
///  - File with a range: exactly those lines, each prefixed with its number.
///  - Directory: entries sorted ascending, depth-limited.
///  - concise=true on a file: outline of definition-like lines only,
///    capped at kConciseOutlineCap lines.
/// Throws PathError for unknown paths and RangeError (naming the valid
/// bounds) for out-of-range requests.
Observation view(const RepoSnapshot& snapshot, const std::string& path,
                 const ViewOptions& options = {});

/// True when a line looks like a definition or heading (function, class,
/// or module-level assignment header).
bool is_definition_line(const std::string& line);

}  // namespace repoqa::toolkit
