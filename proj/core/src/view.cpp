// SPDX-License-Identifier: Apache-2.0
#include "repoqa/view.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "repoqa/errors.hpp"

namespace repoqa::toolkit {

namespace {

std::string normalize(const std::string& path) {
  if (path.empty() || path == "." || path == "./") return ".";
  std::string p = path;
  if (p.starts_with("./")) p = p.substr(2);
  while (p.size() > 1 && p.ends_with('/')) p.pop_back();
  return p;
}

Observation list_directory(const RepoSnapshot& snapshot, const std::string& dir,
                           std::size_t cap) {
  const std::string prefix = dir == "." ? "" : dir + "/";
  // Immediate children plus one extra level, directories suffixed with '/'.
  std::set<std::string> entries;
  for (const FileEntry& entry : snapshot.file_index()) {
    if (!entry.path.starts_with(prefix)) continue;
    const std::string rest = entry.path.substr(prefix.size());
    std::size_t depth = 0;
    std::size_t pos = 0;
    std::string partial;
    while (depth < kDirectoryViewDepth) {
      std::size_t slash = rest.find('/', pos);
      if (slash == std::string::npos) {
        entries.insert(partial + rest.substr(pos));
        break;
      }
      partial += rest.substr(pos, slash - pos) + "/";
      entries.insert(partial);
      pos = slash + 1;
      ++depth;
    }
  }
  std::string out = dir + ":\n";
  for (const std::string& e : entries) out += "  " + e + "\n";
  return truncate_observation(out, cap, "view");
}

}  // namespace

bool is_definition_line(const std::string& line) {
  static const std::regex pattern(
      R"(^\s*(def\s|async\s+def\s|class\s|function\s|fn\s|struct\s|enum\s|interface\s|module\s|#{1,6}\s)|^[A-Za-z_][A-Za-z0-9_]*\s*=)");
  return std::regex_search(line, pattern);
}

Observation view(const RepoSnapshot& snapshot, const std::string& path,
                 const ViewOptions& options) {
  const std::string p = normalize(path);

  if (const FileEntry* entry = snapshot.find(p)) {
    const std::vector<std::string> lines = snapshot.read_lines(p);

    if (options.concise) {
      std::string out;
      std::size_t emitted = 0;
      for (std::size_t i = 0; i < lines.size() && emitted < kConciseOutlineCap; ++i) {
        if (!is_definition_line(lines[i])) continue;
        out += std::to_string(i + 1) + ": " + lines[i] + "\n";
        ++emitted;
      }
      if (out.empty()) out = p + ": no definition-like lines found\n";
      return truncate_observation(out, options.observation_cap, "view");
    }

    std::size_t start = 1;
    std::size_t end = entry->line_count;
    if (options.line_range) {
      start = options.line_range->first;
      end = options.line_range->second;
      if (start < 1 || start > end || end > entry->line_count)
        throw RangeError("invalid line range for " + p + ": valid bounds are 1-" +
                         std::to_string(entry->line_count));
    }
    std::string out;
    for (std::size_t i = start; i <= end && i <= lines.size(); ++i)
      out += std::to_string(i) + ": " + lines[i - 1] + "\n";
    return truncate_observation(out, options.observation_cap, "view");
  }

  if (snapshot.is_directory(p)) {
    if (options.line_range)
      throw RangeError("line ranges do not apply to directories: " + p);
    return list_directory(snapshot, p, options.observation_cap);
  }

  throw PathError("unknown path: " + p);
}

}  // namespace repoqa::toolkit
