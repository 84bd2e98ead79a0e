// SPDX-License-Identifier: Apache-2.0
#include "repoqa/assets.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "repoqa/errors.hpp"

#ifndef REPOQA_DEFAULT_ASSET_DIR
#define REPOQA_DEFAULT_ASSET_DIR "assets"
#endif

namespace repoqa::assets {

std::string asset_dir() {
  if (const char* dir = std::getenv("REPOQA_ASSET_DIR")) return dir;
  return REPOQA_DEFAULT_ASSET_DIR;
}

std::string load(const std::string& name) {
  const std::string path = asset_dir() + "/" + name;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing asset: " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

std::string substitute(std::string text, const std::string& key,
                       const std::string& value) {
  const std::string needle = "{" + key + "}";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    text.replace(pos, needle.size(), value);
    pos += value.size();
  }
  return text;
}

}  // namespace repoqa::assets
