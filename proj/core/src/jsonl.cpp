// SPDX-License-Identifier: Apache-2.0
#include "repoqa/jsonl.hpp"

#include <fstream>

#include "repoqa/errors.hpp"

namespace repoqa::jsonl {

using nlohmann::json;

std::vector<json> read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<json> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return records;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::vector<json>& records) {
  std::string buffer;
  for (const json& record : records) {
    buffer += record.dump();
    buffer += '\n';
  }
  write_text_atomic(path, buffer);
}

std::optional<json> extract_first_object(const std::string& text) {
  std::size_t start = text.find('{');
  while (start != std::string::npos) {
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          try {
            return json::parse(text.substr(start, i - start + 1));
          } catch (const json::exception&) {
            break;
          }
        }
      }
    }
    start = text.find('{', start + 1);
  }
  return std::nullopt;
}

}  // namespace repoqa::jsonl
