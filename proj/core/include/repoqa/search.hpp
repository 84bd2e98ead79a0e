// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "repoqa/snapshot.hpp"

namespace repoqa::toolkit {

struct SearchHit {
  std::string path;
  std::size_t line = 0;  // 1-based line of the match
  std::string snippet;   // matched line ± snippet_radius, clipped to the file
};

/// Case-insensitive literal keyword search over non-binary indexed files,
/// matched per line. Results are ordered by per-file match count
/// descending, then path ascending, then line ascending, and capped at
/// max_results. Deterministic for a fixed snapshot and parameters.
std::vector<SearchHit> search(const RepoSnapshot& snapshot,
                              const std::string& query,
                              std::size_t max_results = 20,
                              std::size_t snippet_radius = 2);

}  // namespace repoqa::toolkit
