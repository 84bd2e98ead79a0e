// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace repoqa::jsonl {

/// Reads a JSON-lines file: one JSON value per non-empty line.
std::vector<nlohmann::json> read_file(const std::filesystem::path& path);

/// Writes records as JSON-lines atomically (temp file + rename), so an
/// interrupted write never leaves a partial artifact at the final path.
void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<nlohmann::json>& records);

/// Atomic whole-file text write (temp file + rename).
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

/// First complete top-level JSON object embedded in free text, tolerating
/// surrounding prose and code fences. Empty when none parses.
std::optional<nlohmann::json> extract_first_object(const std::string& text);

}  // namespace repoqa::jsonl
