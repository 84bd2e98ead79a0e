// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "repoqa/driver.hpp"

namespace {

int dispatch(const std::string& stage, const std::string& config_path) {
  const repoqa::driver::StageOutcome outcome =
      repoqa::driver::run_stage(stage, config_path);
  for (const std::string& error : outcome.errors)
    std::fprintf(stderr, "%s\n", error.c_str());
  if (outcome.exit_status == 0)
    std::printf("%s: ok (%zu outputs)\n", stage.c_str(),
                outcome.manifest.outputs.size());
  return outcome.exit_status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"repository QA benchmark pipeline"};
  app.require_subcommand(1);

  static const char* kStages[] = {"ingest", "cluster", "synthesize",
                                  "dedupe", "calibrate", "run",
                                  "judge",  "reward",    "report"};
  std::string config_path;
  std::string chosen;
  for (const char* stage : kStages) {
    CLI::App* sub = app.add_subcommand(stage);
    sub->add_option("-c,--config", config_path, "JSON config file")
        ->required();
    sub->callback([&chosen, stage] { chosen = stage; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return dispatch(chosen, config_path);
}
