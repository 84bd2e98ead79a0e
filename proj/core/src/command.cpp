// SPDX-License-Identifier: Apache-2.0
#include "repoqa/command.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "repoqa/errors.hpp"

namespace repoqa::toolkit {

namespace {

const std::set<std::string> kAllowlist = {
    "grep", "find", "head", "tail", "cat", "wc",
    "sed",  "awk",  "ls",   "tree", "file", "stat"};

const std::set<std::string> kWriteVerbs = {
    "rm",    "mv",    "cp",    "tee",   "chmod", "chown",
    "touch", "mkdir", "rmdir", "ln",    "dd",    "pip",
    "curl",  "wget",  "python", "python3", "bash", "sh"};

const std::set<std::string> kMutatingGitSubcommands = {
    "add",   "commit", "push",  "pull",  "merge",  "rebase", "reset",
    "rm",    "mv",     "clean", "stash", "checkout", "switch", "restore",
    "apply", "cherry-pick", "fetch", "clone", "init", "tag", "branch"};

/// Splits on whitespace, honoring single and double quotes.
std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::string current;
  char quote = 0;
  bool in_token = false;
  for (char c : line) {
    if (quote) {
      if (c == quote) {
        quote = 0;
      } else {
        current += c;
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (in_token) {
        tokens.push_back(current);
        current.clear();
        in_token = false;
      }
      continue;
    }
    if (c == '|') {
      // '|' is always its own token so pipeline segments cannot hide
      // behind missing whitespace.
      if (in_token) {
        tokens.push_back(current);
        current.clear();
        in_token = false;
      }
      tokens.emplace_back("|");
      continue;
    }
    current += c;
    in_token = true;
  }
  if (in_token) tokens.push_back(current);
  return tokens;
}

std::vector<std::vector<std::string>> split_pipeline(
    const std::vector<std::string>& tokens) {
  std::vector<std::vector<std::string>> segments(1);
  for (const std::string& tok : tokens) {
    if (tok == "|") {
      segments.emplace_back();
    } else {
      segments.back().push_back(tok);
    }
  }
  return segments;
}

PolicyDecision reject(std::string reason) { return {false, std::move(reason)}; }

PolicyDecision screen_segment(const std::vector<std::string>& seg) {
  if (seg.empty()) return reject("empty pipeline segment");
  const std::string& program = seg.front();

  if (kWriteVerbs.count(program) || program == "git") {
    if (program == "git") {
      if (seg.size() < 2 || kMutatingGitSubcommands.count(seg[1]))
        return reject("write verb denied: git (mutating subcommand)");
      // read-only git (log, show, status, ...) still runs outside the
      // allowlist below
    } else {
      return reject("write verb denied: " + program);
    }
  }
  if (!kAllowlist.count(program))
    return reject("command not on the read-only allowlist: " + program);

  if (program == "ls") {
    for (std::size_t i = 1; i < seg.size(); ++i) {
      const std::string& a = seg[i];
      if (a.size() >= 2 && a[0] == '-' && a.find('R') != std::string::npos)
        return reject("ls -R produces unbounded output and is denied");
    }
  }
  if (program == "tree") {
    const bool has_depth = std::any_of(
        seg.begin() + 1, seg.end(),
        [](const std::string& a) { return a == "-L" || a.starts_with("-L"); });
    if (!has_depth)
      return reject("tree without -L produces unbounded output and is denied");
  }
  if (program == "sed") {
    for (std::size_t i = 1; i < seg.size(); ++i) {
      const std::string& a = seg[i];
      if (a == "-i" || a.starts_with("-i") || a.starts_with("--in-place"))
        return reject("sed in-place editing is denied (print-only forms allowed)");
      if (a.find('w') != std::string::npos && a.find('/') != std::string::npos &&
          !a.starts_with('-'))
        return reject("sed write command is denied (print-only forms allowed)");
    }
  }
  if (program == "awk") {
    for (std::size_t i = 1; i < seg.size(); ++i) {
      if (seg[i].find("system(") != std::string::npos ||
          seg[i].find("print >") != std::string::npos ||
          seg[i].find("printf >") != std::string::npos)
        return reject("awk with output redirection or system() is denied");
    }
  }
  return {true, {}};
}

}  // namespace

PolicyDecision screen_command(const std::string& command_line) {
  // Redirection and shell control operators can escape the read-only
  // contract, so they are rejected before any program check.
  static const char* kForbidden[] = {">", ">>", "<(", "$(", "`", ";", "&&", "||", "&"};
  for (const char* f : kForbidden) {
    if (command_line.find(f) != std::string::npos)
      return {false, std::string("shell operator denied: ") + f};
  }

  const std::vector<std::string> tokens = tokenize(command_line);
  if (tokens.empty()) return {false, "command does not parse into program + arguments"};

  for (const auto& segment : split_pipeline(tokens)) {
    PolicyDecision d = screen_segment(segment);
    if (!d.allowed) return d;
  }
  return {true, {}};
}

Observation execute_readonly(const RepoSnapshot& snapshot,
                             const std::string& command_line,
                             std::size_t output_cap) {
  PolicyDecision decision = screen_command(command_line);
  if (!decision.allowed) {
    Observation obs = truncate_observation(
        "command rejected: " + decision.reason, output_cap, "command");
    return obs;
  }

  int fds[2];
  if (pipe(fds) != 0) throw Error("pipe() failed");

  const pid_t pid = fork();
  if (pid < 0) {
    close(fds[0]);
    close(fds[1]);
    throw Error("fork() failed");
  }
  if (pid == 0) {
    setpgid(0, 0);
    dup2(fds[1], STDOUT_FILENO);
    dup2(fds[1], STDERR_FILENO);
    close(fds[0]);
    close(fds[1]);
    if (chdir(snapshot.root().c_str()) != 0) _exit(127);
    execl("/bin/sh", "sh", "-c", command_line.c_str(), nullptr);
    _exit(127);
  }

  close(fds[1]);
  std::string output;
  const auto deadline = std::chrono::steady_clock::now() + kCommandTimeout;
  bool timed_out = false;
  char buf[4096];
  for (;;) {
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (remaining.count() <= 0) {
      timed_out = true;
      break;
    }
    pollfd pfd{fds[0], POLLIN, 0};
    const int rc = poll(&pfd, 1, static_cast<int>(remaining.count()));
    if (rc == 0) {
      timed_out = true;
      break;
    }
    if (rc < 0) break;
    const ssize_t n = read(fds[0], buf, sizeof(buf));
    if (n <= 0) break;
    output.append(buf, static_cast<std::size_t>(n));
  }
  close(fds[0]);

  int status = 0;
  if (timed_out) {
    kill(-pid, SIGKILL);
    waitpid(pid, &status, 0);
    return truncate_observation(
        "command timed out after " +
            std::to_string(kCommandTimeout.count()) + "s",
        output_cap, "command");
  }
  waitpid(pid, &status, 0);
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  output += "\n[exit status " + std::to_string(exit_code) + "]";
  return truncate_observation(output, output_cap, "command");
}

}  // namespace repoqa::toolkit
