// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

namespace repoqa::assets {

/// Directory holding the prompt templates and taxonomy data. Defaults to
/// the installed asset directory; override with REPOQA_ASSET_DIR.
std::string asset_dir();

/// Loads an asset file by name ("judge_prompt.txt", "taxonomy.json", ...).
std::string load(const std::string& name);

/// Replaces every occurrence of "{key}" in the template.
std::string substitute(std::string text, const std::string& key,
                       const std::string& value);

}  // namespace repoqa::assets
