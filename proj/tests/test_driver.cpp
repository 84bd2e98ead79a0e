// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "repoqa/corpus.hpp"
#include "repoqa/driver.hpp"
#include "repoqa/errors.hpp"
#include "repoqa/jsonl.hpp"
#include "repoqa/report.hpp"
#include "test_support.hpp"

using namespace repoqa;
using nlohmann::json;
using test_support::TempDir;
using test_support::write_file;

namespace {

corpus::QaItem item_for(const std::string& id, const std::string& repo,
                        const std::string& cluster,
                        const std::string& interrogative) {
  corpus::QaItem item;
  item.id = id;
  item.repo = repo;
  item.question = interrogative + " is it?";
  item.reference_answer = "ref";
  item.cluster_id = cluster;
  item.qa_type = {interrogative, "Feature location"};
  return item;
}

report::VerdictRecord verdict_for(const std::string& id, double base) {
  report::VerdictRecord record;
  record.question_id = id;
  record.model = "m1";
  for (std::size_t d = 0; d < judge::kDimensions; ++d) {
    record.verdict.mean[d] = base + static_cast<double>(d) * 0.1;
    record.verdict.overall += record.verdict.mean[d];
  }
  record.verdict.complete = true;
  return record;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("breakdown groups by repository with the row-sum identity") {
  std::vector<corpus::QaItem> items = {item_for("q1", "alpha", "0.0", "Where"),
                                       item_for("q2", "alpha", "0.1", "Why"),
                                       item_for("q3", "beta", "0.0", "Where")};
  std::vector<report::VerdictRecord> verdicts = {
      verdict_for("q1", 6.0), verdict_for("q2", 8.0), verdict_for("q3", 5.0)};

  const auto breakdown =
      report::breakdown(verdicts, items, report::Axis::repository);
  REQUIRE(breakdown.rows.size() == 2);
  CHECK(breakdown.total == 3);
  std::size_t counted = 0;
  for (const auto& row : breakdown.rows) {
    counted += row.count;
    double sum = 0;
    for (double m : row.mean) sum += m;
    CHECK(std::abs(row.overall - sum) < 0.01);
  }
  CHECK(counted == breakdown.total);
  // two alpha questions with overalls 31 and 41 average to 36
  CHECK(breakdown.rows[0].key == "alpha");
  CHECK(breakdown.rows[0].overall == doctest::Approx(36.0));
}

TEST_CASE("breakdown by qa_type yields the hand-derived group counts") {
  std::vector<corpus::QaItem> items = {item_for("q1", "r", "0.0", "Where"),
                                       item_for("q2", "r", "0.0", "Where"),
                                       item_for("q3", "r", "0.0", "Why")};
  std::vector<report::VerdictRecord> verdicts = {
      verdict_for("q1", 6.0), verdict_for("q2", 7.0), verdict_for("q3", 8.0)};
  const auto breakdown =
      report::breakdown(verdicts, items, report::Axis::qa_type);
  REQUIRE(breakdown.rows.size() == 2);
  std::map<std::string, std::size_t> counts;
  for (const auto& row : breakdown.rows) counts[row.key] = row.count;
  CHECK(counts.at("Where / Feature location") == 2);
  CHECK(counts.at("Why / Feature location") == 1);
}

TEST_CASE("a single verdict echoes its scores") {
  std::vector<corpus::QaItem> items = {item_for("q1", "r", "0.0", "How")};
  std::vector<report::VerdictRecord> verdicts = {verdict_for("q1", 9.0)};
  const auto breakdown =
      report::breakdown(verdicts, items, report::Axis::model);
  REQUIRE(breakdown.rows.size() == 1);
  CHECK(breakdown.rows[0].key == "m1");
  CHECK(breakdown.rows[0].mean[0] == doctest::Approx(9.0));
  CHECK(breakdown.rows[0].overall ==
        doctest::Approx(verdicts[0].verdict.overall));
}

TEST_CASE("an orphan verdict fails loudly") {
  std::vector<corpus::QaItem> items = {item_for("q1", "r", "0.0", "How")};
  std::vector<report::VerdictRecord> verdicts = {verdict_for("ghost", 5.0)};
  CHECK_THROWS(report::breakdown(verdicts, items, report::Axis::repository));
}

TEST_CASE("tool usage stats count calls and terminations exactly") {
  agent::Trajectory a;
  a.question_id = "q1";
  a.termination = agent::Termination::finished;
  agent::Turn turn;
  turn.index = 1;
  turn.actions.push_back({toolkit::Tool::search, json::object()});
  turn.actions.push_back({toolkit::Tool::search, json::object()});
  turn.actions.push_back({toolkit::Tool::view, json::object()});
  a.turns.push_back(turn);
  a.turns.push_back({2, "", {}, {}, std::string("done")});

  agent::Trajectory b;
  b.question_id = "q2";
  b.termination = agent::Termination::turn_cap;
  b.turns.resize(25);

  const auto stats = report::tool_usage_stats({a, b});
  CHECK(stats.sessions == 2);
  CHECK(stats.total_turns == 27);
  CHECK(stats.calls_per_tool.at("search") == 2);
  CHECK(stats.calls_per_tool.at("view") == 1);
  CHECK(stats.calls_per_tool.at("command") == 0);
  CHECK(stats.terminations.at("finished") == 1);
  CHECK(stats.terminations.at("turn_cap") == 1);
}

TEST_CASE("stage names round trip and unknown stages are usage errors") {
  for (const char* name : {"ingest", "cluster", "synthesize", "dedupe",
                           "calibrate", "run", "judge", "reward", "report"})
    CHECK(driver::stage_name(driver::parse_stage(name)) == name);
  CHECK_THROWS_AS(driver::parse_stage("explode"), ConfigError);

  TempDir dir;
  const auto config = dir.path() / "config.json";
  write_file(config, R"({"workdir": ")" + (dir.path() / "out").string() + "\"}");
  const auto outcome = driver::run_stage("explode", config);
  CHECK(outcome.exit_status == 2);
}

TEST_CASE("missing config keys name the offending key") {
  TempDir dir;
  const auto config = dir.path() / "config.json";
  write_file(config, "{}");
  const auto outcome = driver::run_stage("ingest", config);
  CHECK(outcome.exit_status == 2);
  REQUIRE(!outcome.errors.empty());
  CHECK(outcome.errors[0].find("workdir") != std::string::npos);
}

TEST_CASE("ingest filters issues and stamps the manifest hash") {
  TempDir dir;
  const auto raw = dir.path() / "raw.jsonl";
  std::vector<json> rows = {
      {{"repo", "r"}, {"title", "ok issue"}, {"body", "long enough body"}},
      {{"repo", "r"}, {"title", "x"}, {"body", ""}},
  };
  jsonl::write_file_atomic(raw, rows);

  const json config = {{"workdir", (dir.path() / "out").string()},
                       {"inputs", {{"issues_raw", raw.string()}}}};
  const auto outcome = driver::run_stage(driver::Stage::ingest, config);
  CHECK(outcome.exit_status == 0);

  const auto artifact = dir.path() / "out" / "issues.jsonl";
  const auto records = driver::read_artifact(artifact);
  REQUIRE(records.size() == 1);
  CHECK(records[0]["repo"] == "r");

  const auto all = jsonl::read_file(artifact);
  REQUIRE(all.size() == 2);
  CHECK(all[0]["kind"] == "header");
  CHECK(all[0]["manifest_hash"] == outcome.manifest.hash());
  CHECK_FALSE(std::filesystem::exists(artifact.string() + ".tmp"));
}

TEST_CASE("calibrate stage produces one difficulty row per question") {
  TempDir dir;
  const auto scores = dir.path() / "direct_scores.jsonl";
  std::vector<json> rows;
  const double totals[3][2] = {{45, 44}, {30, 31}, {12, 15}};
  for (int q = 0; q < 3; ++q)
    for (int m = 0; m < 2; ++m)
      rows.push_back({{"question", "q" + std::to_string(q)},
                      {"model", "m" + std::to_string(m)},
                      {"total", totals[q][m]}});
  jsonl::write_file_atomic(scores, rows);

  const json config = {{"workdir", (dir.path() / "out").string()},
                       {"keep_fraction", 0.3},
                       {"inputs", {{"direct_scores", scores.string()}}}};
  const auto outcome = driver::run_stage(driver::Stage::calibrate, config);
  CHECK(outcome.exit_status == 0);

  const auto difficulty =
      driver::read_artifact(dir.path() / "out" / "difficulty.jsonl");
  REQUIRE(difficulty.size() == 3);
  const auto kept =
      driver::read_artifact(dir.path() / "out" / "kept_questions.jsonl");
  REQUIRE(kept.size() == 1);
  CHECK(kept[0]["question"] == "q2");  // lowest consensus score, hardest
}

TEST_CASE("rerunning a stage with identical config is byte-identical") {
  TempDir dir;
  const auto raw = dir.path() / "raw.jsonl";
  jsonl::write_file_atomic(
      raw, {{{"repo", "r"}, {"title", "issue title"}, {"body", "issue body"}}});
  const json config = {{"workdir", (dir.path() / "out").string()},
                       {"freeze_time", true},
                       {"inputs", {{"issues_raw", raw.string()}}}};

  driver::run_stage(driver::Stage::ingest, config);
  const std::string first = slurp(dir.path() / "out" / "issues.jsonl");
  const std::string first_manifest =
      slurp(dir.path() / "out" / "manifests" / "ingest.json");
  driver::run_stage(driver::Stage::ingest, config);
  CHECK(slurp(dir.path() / "out" / "issues.jsonl") == first);
  CHECK(slurp(dir.path() / "out" / "manifests" / "ingest.json") ==
        first_manifest);
}

TEST_CASE("report stage emits JSON and CSV carrying the manifest hash") {
  TempDir dir;
  const auto workdir = dir.path() / "out";
  std::filesystem::create_directories(workdir);

  std::vector<json> item_rows = {
      corpus::qa_item_to_json(item_for("q1", "alpha", "0.0", "Where"))};
  driver::write_artifact(workdir / "items_dedup.jsonl", "qa_items", item_rows,
                         "seed");
  std::vector<json> verdict_rows = {
      {{"question_id", "q1"},
       {"model", "m1"},
       {"runs", json::array({json::array({8, 7, 9, 6, 7})})},
       {"mean",
        {{"correctness", 8.0}, {"completeness", 7.0}, {"relevance", 9.0},
         {"clarity", 6.0}, {"reasoning", 7.0}}},
       {"overall", 37.0},
       {"complete", true}}};
  driver::write_artifact(workdir / "verdicts.jsonl", "verdicts", verdict_rows,
                         "seed");

  const json config = {{"workdir", workdir.string()},
                       {"report_axis", "repository"},
                       {"freeze_time", true}};
  const auto outcome = driver::run_stage(driver::Stage::report, config);
  CHECK(outcome.exit_status == 0);

  const json body = json::parse(slurp(workdir / "report.json"));
  CHECK(body["manifest_hash"] == outcome.manifest.hash());
  CHECK(body["breakdown"]["rows"][0]["key"] == "alpha");
  CHECK(body["breakdown"]["rows"][0]["overall"] == doctest::Approx(37.0));

  const std::string csv = slurp(workdir / "report.csv");
  CHECK(csv.rfind("# manifest_hash", 0) == 0);
  CHECK(csv.find("\"alpha\"") != std::string::npos);
}
