// SPDX-License-Identifier: Apache-2.0
#include "repoqa/snapshot.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "repoqa/errors.hpp"

namespace repoqa::toolkit {

namespace fs = std::filesystem;

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

bool looks_binary(std::string_view head) {
  const std::size_t n = std::min<std::size_t>(head.size(), 8192);
  return head.substr(0, n).find('\0') != std::string_view::npos;
}

RepoSnapshot::RepoSnapshot(std::string repo_name, std::string commit_id,
                           fs::path root, std::vector<FileEntry> index)
    : repo_name_(std::move(repo_name)),
      commit_id_(std::move(commit_id)),
      root_(std::move(root)),
      index_(std::move(index)) {
  std::sort(index_.begin(), index_.end(),
            [](const FileEntry& a, const FileEntry& b) { return a.path < b.path; });
}

const FileEntry* RepoSnapshot::find(std::string_view relative_path) const {
  auto it = std::lower_bound(
      index_.begin(), index_.end(), relative_path,
      [](const FileEntry& e, std::string_view p) { return e.path < p; });
  if (it != index_.end() && it->path == relative_path) return &*it;
  return nullptr;
}

bool RepoSnapshot::is_directory(std::string_view relative_path) const {
  if (relative_path.empty() || relative_path == ".") return true;
  std::string prefix(relative_path);
  if (!prefix.ends_with('/')) prefix += '/';
  auto it = std::lower_bound(
      index_.begin(), index_.end(), prefix,
      [](const FileEntry& e, const std::string& p) { return e.path < p; });
  return it != index_.end() && it->path.starts_with(prefix);
}

std::string RepoSnapshot::read_file(std::string_view relative_path) const {
  const FileEntry* entry = find(relative_path);
  if (!entry) throw PathError("unknown path: " + std::string(relative_path));
  std::ifstream in(root_ / entry->path, std::ios::binary);
  if (!in) throw PathError("unreadable path: " + entry->path);
  std::ostringstream out;
  out << in.rdbuf();
  return std::move(out).str();
}

std::vector<std::string> RepoSnapshot::read_lines(std::string_view relative_path) const {
  return split_lines(read_file(relative_path));
}

RepoSnapshot open_snapshot(const fs::path& root, std::string repo_name,
                           std::string commit_id) {
  std::error_code ec;
  if (!fs::is_directory(root, ec) || ec)
    throw WorkspaceError("snapshot root is not a readable directory: " +
                         root.string());

  std::vector<FileEntry> index;
  fs::recursive_directory_iterator it(
      root, fs::directory_options::skip_permission_denied, ec);
  if (ec) throw WorkspaceError("cannot enumerate root: " + ec.message());

  for (auto end = fs::end(it); it != end; it.increment(ec)) {
    if (ec) throw WorkspaceError("enumeration failed: " + ec.message());
    const fs::directory_entry& entry = *it;
    // Never follow symlinks: a link could point outside the root.
    if (entry.is_symlink()) {
      if (entry.is_directory()) it.disable_recursion_pending();
      continue;
    }
    if (!entry.is_regular_file()) continue;

    FileEntry fe;
    fe.path = fs::relative(entry.path(), root).generic_string();

    std::ifstream in(entry.path(), std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string content = std::move(buf).str();

    fe.byte_size = content.size();
    fe.is_binary = looks_binary(content);
    fe.line_count = split_lines(content).size();
    index.push_back(std::move(fe));
  }
  return RepoSnapshot(std::move(repo_name), std::move(commit_id),
                      fs::canonical(root), std::move(index));
}

}  // namespace repoqa::toolkit
