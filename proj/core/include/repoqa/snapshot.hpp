// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace repoqa::toolkit {

struct FileEntry {
  std::string path;  // relative, '/'-separated, normalized
  std::size_t byte_size = 0;
  std::size_t line_count = 0;
  bool is_binary = false;
};

/// Immutable read-only view of a repository checkout. All indexed paths
/// are relative and resolve strictly inside the root; symlinks are not
/// indexed so no entry can escape the tree.
class RepoSnapshot {
 public:
  RepoSnapshot(std::string repo_name, std::string commit_id,
               std::filesystem::path root, std::vector<FileEntry> index);

  const std::string& repo_name() const { return repo_name_; }
  const std::string& commit_id() const { return commit_id_; }
  const std::filesystem::path& root() const { return root_; }
  const std::vector<FileEntry>& file_index() const { return index_; }

  /// Entry for a relative path, if indexed.
  const FileEntry* find(std::string_view relative_path) const;

  /// True when the relative path names a directory containing at least
  /// one indexed file (or is "." / "").
  bool is_directory(std::string_view relative_path) const;

  /// Full file contents. Throws PathError for unindexed paths.
  std::string read_file(std::string_view relative_path) const;

  /// File contents split into lines (trailing newline does not add an
  /// empty final line).
  std::vector<std::string> read_lines(std::string_view relative_path) const;

 private:
  std::string repo_name_;
  std::string commit_id_;
  std::filesystem::path root_;
  std::vector<FileEntry> index_;  // sorted by path
};

/// Enumerates all regular files under `root` into an immutable snapshot.
/// Symlinks are excluded from the index. Throws WorkspaceError when the
/// root is missing or unreadable; an empty directory yields an empty index.
RepoSnapshot open_snapshot(const std::filesystem::path& root,
                           std::string repo_name, std::string commit_id);

/// Splits text into lines; a trailing newline does not produce an empty
/// final element.
std::vector<std::string> split_lines(std::string_view text);

/// Null byte within the first 8 KiB marks a file as binary.
bool looks_binary(std::string_view head);

}  // namespace repoqa::toolkit
