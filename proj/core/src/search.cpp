// SPDX-License-Identifier: Apache-2.0
#include "repoqa/search.hpp"

#include <algorithm>
#include <cctype>

#include "repoqa/errors.hpp"

namespace repoqa::toolkit {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct FileHits {
  std::string path;
  std::size_t match_count = 0;
  std::vector<std::pair<std::size_t, std::string>> hits;  // (line, snippet)
};

}  // namespace

std::vector<SearchHit> search(const RepoSnapshot& snapshot,
                              const std::string& query,
                              std::size_t max_results,
                              std::size_t snippet_radius) {
  if (query.empty()) throw Error("search: query must be nonempty");
  if (max_results < 1) throw Error("search: max_results must be >= 1");

  const std::string needle = to_lower(query);
  std::vector<FileHits> per_file;

  for (const FileEntry& entry : snapshot.file_index()) {
    if (entry.is_binary) continue;
    const std::vector<std::string> lines = snapshot.read_lines(entry.path);

    FileHits fh;
    fh.path = entry.path;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const std::string lowered = to_lower(lines[i]);
      std::size_t pos = 0;
      std::size_t on_line = 0;
      while ((pos = lowered.find(needle, pos)) != std::string::npos) {
        ++on_line;
        pos += needle.size();
      }
      if (on_line == 0) continue;
      fh.match_count += on_line;

      const std::size_t lo = i >= snippet_radius ? i - snippet_radius : 0;
      const std::size_t hi = std::min(i + snippet_radius, lines.size() - 1);
      std::string snippet;
      for (std::size_t j = lo; j <= hi; ++j) {
        snippet += lines[j];
        if (j != hi) snippet += '\n';
      }
      fh.hits.emplace_back(i + 1, std::move(snippet));
    }
    if (fh.match_count > 0) per_file.push_back(std::move(fh));
  }

  std::sort(per_file.begin(), per_file.end(),
            [](const FileHits& a, const FileHits& b) {
              if (a.match_count != b.match_count) return a.match_count > b.match_count;
              return a.path < b.path;
            });

  std::vector<SearchHit> results;
  for (const FileHits& fh : per_file) {
    for (const auto& [line, snippet] : fh.hits) {
      if (results.size() >= max_results) return results;
      results.push_back(SearchHit{fh.path, line, snippet});
    }
  }
  return results;
}

}  // namespace repoqa::toolkit
