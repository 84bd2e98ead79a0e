// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace repoqa::toolkit {

/// Hard ceiling on any single tool observation, in characters.
inline constexpr std::size_t kDefaultObservationCap = 28'000;

/// Textual result of one tool call, clipped to the observation cap.
struct Observation {
  std::string tool;
  std::string content;
  bool truncated = false;
  std::size_t original_length = 0;
};

/// Clips `text` to at most `cap` characters. `truncated` is set exactly
/// when clipping occurred; the pre-clip length is preserved.
Observation truncate_observation(std::string_view text, std::size_t cap,
                                 std::string tool = {});

}  // namespace repoqa::toolkit
