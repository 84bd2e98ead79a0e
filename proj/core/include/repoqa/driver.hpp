// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace repoqa::driver {

enum class Stage {
  ingest,
  cluster,
  synthesize,
  dedupe,
  calibrate,
  run,
  judge,
  reward,
  report
};

std::string stage_name(Stage stage);

/// Throws ConfigError for an unknown stage name.
Stage parse_stage(const std::string& name);

/// Record of one executed pipeline stage. The hash covers the
/// deterministic fields only (not the timestamps), so identical configs
/// and inputs reproduce identical artifact headers.
struct RunManifest {
  Stage stage = Stage::ingest;
  nlohmann::json config;  // snapshot of the stage configuration
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<std::string> model_ids;
  std::string started_at;
  std::string finished_at;

  std::string hash() const;
  nlohmann::json to_json() const;
};

struct StageOutcome {
  RunManifest manifest;
  int exit_status = 0;  // 0 success, 1 partial item failures, 2 config error
  std::vector<std::string> errors;  // per-item error records
};

/// Executes exactly one pipeline stage from an already-parsed config.
/// Artifacts and the manifest are written atomically into the workdir;
/// every artifact carries the manifest hash in its header line.
/// Throws ConfigError for invalid configuration.
StageOutcome run_stage(Stage stage, const nlohmann::json& config);

/// CLI-facing wrapper: loads the config file and maps errors to exit
/// status 2 instead of throwing.
StageOutcome run_stage(const std::string& stage,
                       const std::filesystem::path& config_path);

/// JSON-lines artifact with a leading header record that names the
/// schema and the producing manifest hash.
void write_artifact(const std::filesystem::path& path, const std::string& schema,
                    const std::vector<nlohmann::json>& records,
                    const std::string& manifest_hash);

/// Reads an artifact, skipping the header record.
std::vector<nlohmann::json> read_artifact(const std::filesystem::path& path);

}  // namespace repoqa::driver
