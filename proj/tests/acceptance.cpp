// SPDX-License-Identifier: Apache-2.0
// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "repoqa/agent.hpp"
#include "repoqa/calibration.hpp"
#include "repoqa/corpus.hpp"
#include "repoqa/driver.hpp"
#include "repoqa/jsonl.hpp"
#include "repoqa/reward.hpp"
#include "test_support.hpp"

using namespace repoqa;
using nlohmann::json;
using test_support::TempDir;
using test_support::write_file;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Check {
  bool ok = true;
  void require(bool condition) { ok = ok && condition; }
};

// ---------------------------------------------------------------------------

bool reward_arithmetic() {
  Check c;
  const auto start = Clock::now();
  c.require(reward::compute_reward({{10, 10, 10, 10, 10}}) == 1.0);
  c.require(std::abs(reward::compute_reward({{1, 1, 1, 1, 1}}) - 0.1) < 1e-12);
  judge::ScoreVector v;
  for (int a = 1; a <= 10; ++a)
    for (int b = 1; b <= 10; ++b)
      for (int cc = 1; cc <= 10; ++cc)
        for (int d = 1; d <= 10; ++d)
          for (int e = 1; e <= 10; ++e) {
            v.scores = {a, b, cc, d, e};
            const double r = reward::compute_reward(v);
            c.require(r >= 0.1 - 1e-12 && r <= 1.0 + 1e-12);
          }
  c.require(seconds_since(start) < 5.0);
  return c.ok;
}

bool score_table_row_sums() {
  struct Row {
    double d[5];
    double overall;
  };
  const Row rows[] = {
      {{2.51, 2.13, 8.66, 8.02, 4.16}, 25.48},
      {{7.12, 6.25, 8.91, 9.34, 7.84}, 39.46},
      {{3.42, 2.38, 9.02, 9.23, 4.68}, 28.74},
      {{6.86, 5.90, 8.89, 9.13, 7.68}, 38.47},
      {{3.08, 2.11, 8.96, 8.79, 3.64}, 26.58},
      {{5.59, 4.49, 8.55, 8.16, 6.29}, 33.08},
      {{3.19, 2.32, 8.83, 8.83, 4.39}, 27.55},
      {{6.94, 6.49, 8.78, 8.72, 7.76}, 38.69},
      {{3.34, 2.74, 8.65, 8.12, 4.84}, 27.69},
      {{7.34, 7.36, 8.88, 9.03, 8.06}, 40.67},
      {{2.84, 2.16, 8.59, 8.66, 4.36}, 26.61},
      {{4.52, 3.77, 8.29, 7.83, 5.62}, 30.03},
      {{3.04, 2.41, 8.71, 8.74, 5.02}, 27.91},
      {{2.34, 1.75, 8.68, 8.47, 3.08}, 24.32},
      {{6.61, 5.66, 8.81, 9.09, 7.13}, 37.30},
  };
  Check c;
  for (const Row& row : rows) {
    double sum = 0;
    for (double x : row.d) sum += x;
    c.require(std::abs(sum - row.overall) <= 0.01 + 1e-9);
  }
  return c.ok;
}

bool calibration_oracle() {
  Check c;
  calibration::ScoreMatrix matrix;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> score(5.0, 50.0);
  for (int q = 0; q < 50; ++q)
    matrix.questions.push_back("q" + std::to_string(100 + q));
  matrix.models = {"m0", "m1", "m2"};
  for (const auto& q : matrix.questions)
    for (const auto& m : matrix.models)
      for (int r = 0; r < 5; ++r)
        matrix.totals[{q, m}].push_back(score(rng));

  // independent brute-force reimplementation
  std::map<std::pair<std::string, std::string>, double> mean;
  for (const auto& [cell, scores] : matrix.totals) {
    double s = 0;
    for (double x : scores) s += x;
    mean[cell] = s / static_cast<double>(scores.size());
  }
  std::map<std::string, double> oracle;
  for (const auto& q : matrix.questions) {
    double acc = 0;
    for (const auto& m : matrix.models) {
      double mu = 0, var = 0;
      for (const auto& q2 : matrix.questions) mu += mean[{q2, m}];
      mu /= 50.0;
      for (const auto& q2 : matrix.questions) {
        const double d = mean[{q2, m}] - mu;
        var += d * d;
      }
      var /= 50.0;
      acc += (mean[{q, m}] - mu) / std::sqrt(var);
    }
    oracle[q] = -acc / 3.0;
  }

  const auto records = calibration::calibrate(matrix);
  c.require(records.size() == 50);
  for (const auto& record : records)
    c.require(std::abs(record.difficulty - oracle.at(record.question)) < 1e-9);

  const auto z =
      calibration::zscore_normalize(calibration::aggregate_scores(matrix));
  for (const auto& m : matrix.models) {
    double zm = 0, zv = 0;
    for (const auto& q : matrix.questions) zm += z.at({q, m});
    zm /= 50.0;
    for (const auto& q : matrix.questions) {
      const double d = z.at({q, m}) - zm;
      zv += d * d;
    }
    zv /= 50.0;
    c.require(std::abs(zm) < 1e-9);
    c.require(std::abs(std::sqrt(zv) - 1.0) < 1e-9);
  }

  std::uniform_real_distribution<double> frac(0.01, 1.0);
  std::vector<double> fractions;
  for (int i = 0; i < 20; ++i) fractions.push_back(frac(rng));
  std::sort(fractions.begin(), fractions.end());
  std::size_t previous = 0;
  for (double f : fractions) {
    const auto kept = calibration::filter_by_difficulty(records, f);
    c.require(kept.size() >= previous);
    previous = kept.size();
  }
  return c.ok;
}

bool agent_budgets() {
  Check c;
  const auto start = Clock::now();
  TempDir dir;
  const auto snapshot = test_support::open_fixture_repo(dir.path());

  const std::string call =
      "<tool_call>{\"name\": \"semantic_search\", \"arguments\": "
      "{\"query\": \"widget\"}}</tool_call>";
  std::vector<std::string> replies(25, call);
  replies.push_back("<finish>forced</finish>");
  gateway::ScriptedChatBackend capped(replies);
  const auto forced = agent::run_session("q1", "?", capped, snapshot);
  c.require(forced.termination == agent::Termination::turn_cap);
  c.require(forced.turns.size() == 25);
  c.require(forced.final_answer == "forced");

  TempDir big_dir;
  write_file(big_dir.path() / "big.txt", std::string(30'001, 'y') + "\n");
  const auto big = toolkit::open_snapshot(big_dir.path(), "big", "c");
  gateway::ScriptedChatBackend viewer(
      {"<tool_call>{\"name\": \"view_codebase\", \"arguments\": {\"path\": "
       "\"big.txt\"}}</tool_call>",
       "<finish>ok</finish>"});
  const auto viewed = agent::run_session("q2", "?", viewer, big);
  c.require(viewed.turns.size() == 2);
  c.require(viewed.turns[0].observations.size() == 1);
  c.require(viewed.turns[0].observations[0].content.size() == 28'000);
  c.require(viewed.turns[0].observations[0].truncated);

  gateway::ScriptedChatBackend instant({"<finish>now</finish>"});
  const auto quick = agent::run_session("q3", "?", instant, snapshot);
  c.require(quick.termination == agent::Termination::finished);
  c.require(quick.turns.size() == 1);

  c.require(seconds_since(start) < 10.0);
  return c.ok;
}

bool protocol_validation() {
  TempDir dir;
  const auto snapshot = test_support::open_fixture_repo(dir.path());

  const auto flagged = [&snapshot](const std::string& text) {
    const auto parsed = agent::parse_assistant_turn(text);
    if (!parsed.violations.empty()) return true;
    return !agent::validate_final_answer(parsed.final_answer, snapshot).empty();
  };

  const std::string malformed[] = {
      "<finish>a</finish><finish>b</finish>",
      "<finish>x</finish> more text <finish>y</finish>",
      "<finish>Use this:\n```py\nprint(1)\n```\n</finish>",
      "<finish>```\ncode\n```</finish>",
      "<finish>See /abs/main.py: line 1-2.</finish>",
      "<finish>Look in /etc/passwd: line 1-1.</finish>",
      "<finish>Found in ghost.py: line 1-2.</finish>",
      "<finish>Defined at lib/missing.py: line 2-3.</finish>",
      "<finish>See src/main.py: line 5-99.</finish>",
      "<finish>See src/main.py: line 0-3.</finish>",
      "<finish>See src/main.py: line 7-3.</finish>",
      "<finish></finish>",
  };
  const std::string wellformed[] = {
      "<finish>The entry point is main. src/main.py: line 3-5</finish>",
      "<finish>Widget defined at src/main.py: line 7-9.</finish>",
      "<finish>Helper lives in src/util.py: line 1-2.</finish>",
      "<finish>Overview in README.md: line 1-3.</finish>",
      "<finish>Guide is docs/guide.md: line 1-2.</finish>",
      "<finish>No citation needed for this summary.</finish>",
      "<finish>Spin returns a constant. src/main.py: line 8-9</finish>",
      "<finish>Both files matter: src/main.py: line 1-9 and src/util.py: "
      "line 1-2.</finish>",
      "<finish>It prints once. src/main.py: line 4-4</finish>",
      "<finish>Single line cite README.md: line 1-1.</finish>",
      "<finish>The project is a toy called widget.</finish>",
      "<finish>Usage notes at docs/guide.md: line 2-2.</finish>",
  };

  Check c;
  for (const auto& text : malformed) c.require(flagged(text));
  for (const auto& text : wellformed) c.require(!flagged(text));
  return c.ok;
}

bool sandbox_soundness() {
  Check c;
  TempDir dir;
  write_file(dir.path() / "notes.txt", "alpha\nbeta\ngamma\n");
  write_file(dir.path() / "sub" / "inner.txt", "beta again\n");
  const auto snapshot = toolkit::open_snapshot(dir.path(), "box", "c");

  const auto tree_bytes = [&dir] {
    std::string all;
    std::vector<std::string> paths;
    for (const auto& e :
         std::filesystem::recursive_directory_iterator(dir.path()))
      if (e.is_regular_file()) paths.push_back(e.path().string());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      all += p + "\x1f" + buf.str() + "\x1e";
    }
    return all;
  };
  const std::string before = tree_bytes();

  const char* denied[] = {
      "rm notes.txt",          "mv notes.txt x",
      "cp notes.txt x",        "touch created.txt",
      "mkdir newdir",          "rmdir sub",
      "chmod 000 notes.txt",   "chown root notes.txt",
      "tee out.txt",           "dd if=notes.txt of=clone",
      "ln -s notes.txt link",  "curl http://example.com",
      "wget http://example.com", "python3 -c 'print(1)'",
      "bash -c 'true'",        "git commit -am wip",
      "ls -R .",               "tree",
      "sed -i s/a/b/ notes.txt", "cat notes.txt > copy.txt",
  };
  for (const char* cmd : denied) {
    const auto obs = toolkit::execute_readonly(snapshot, cmd);
    c.require(obs.content.rfind("command rejected:", 0) == 0);
  }

  auto obs = toolkit::execute_readonly(snapshot, "grep -n beta notes.txt");
  c.require(obs.content == "2:beta\n\n[exit status 0]");
  obs = toolkit::execute_readonly(snapshot, "find . -name '*.txt'");
  c.require(obs.content.find("./notes.txt") != std::string::npos);
  c.require(obs.content.find("./sub/inner.txt") != std::string::npos);

  c.require(tree_bytes() == before);
  return c.ok;
}

bool clustering_properties() {
  Check c;
  const auto start = Clock::now();

  std::mt19937_64 rng(55);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto blob_set = [&](std::size_t per_blob,
                            const std::vector<std::vector<double>>& centers,
                            std::vector<std::size_t>* labels) {
    std::vector<gateway::EmbeddingVector> out;
    for (std::size_t b = 0; b < centers.size(); ++b)
      for (std::size_t i = 0; i < per_blob; ++i) {
        gateway::EmbeddingVector v;
        for (double x : centers[b]) v.values.push_back(x + noise(rng));
        out.push_back(std::move(v));
        if (labels) labels->push_back(b);
      }
    return out;
  };

  const auto sse_vectors =
      blob_set(15, {{6, 0, 0}, {0, 6, 0}, {0, 0, 6}, {4, 4, 0}}, nullptr);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto result = corpus::kmeans(sse_vectors, 4, 40, seed);
    for (std::size_t i = 1; i < result.sse_history.size(); ++i)
      c.require(result.sse_history[i] <= result.sse_history[i - 1] + 1e-9);
  }

  std::vector<std::size_t> truth;
  const auto separated =
      blob_set(40, {{100, 0, 0}, {0, 100, 0}, {0, 0, 100}}, &truth);
  const auto recovered = corpus::kmeans(separated, 3, 100, 9);
  std::map<std::size_t, std::size_t> mapping;
  bool exact = true;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto found = mapping.find(truth[i]);
    if (found == mapping.end())
      mapping[truth[i]] = recovered.assignments[i];
    else if (found->second != recovered.assignments[i])
      exact = false;
  }
  std::set<std::size_t> images;
  for (const auto& [t, p] : mapping) images.insert(p);
  c.require(exact && images.size() == 3);

  std::vector<std::vector<double>> centers;
  std::uniform_real_distribution<double> coord(-40, 40);
  for (int i = 0; i < 10; ++i)
    centers.push_back({coord(rng), coord(rng), coord(rng), coord(rng)});
  const auto big = blob_set(50, centers, nullptr);
  const auto nodes = corpus::hierarchical_cluster(big, 10, 50, 4);
  std::size_t parents = 0, leaves = 0;
  std::set<std::size_t> covered;
  for (const auto& node : nodes) {
    if (node.layer == 1) ++parents;
    else {
      ++leaves;
      for (std::size_t m : node.members)
        if (!covered.insert(m).second) c.require(false);
    }
  }
  c.require(parents == 10);
  c.require(leaves == 50);
  c.require(covered.size() == 500);

  c.require(seconds_since(start) < 30.0);
  return c.ok;
}

bool dedup_and_sampling() {
  Check c;
  gateway::ScriptedEmbedder embedder(8);

  std::vector<corpus::QaItem> dup_items;
  for (int i = 0; i < 3; ++i) {
    corpus::QaItem item;
    item.id = "x" + std::to_string(i);
    item.question = i < 2 ? "Where is the duplicate question?"
                          : "Why is this one different?";
    item.cluster_id = "0.0";
    item.qa_type = {"Where", "Feature location"};
    dup_items.push_back(item);
  }
  const auto deduped = corpus::dedupe(dup_items, embedder);
  c.require(deduped.size() == 2);
  c.require(corpus::dedupe(deduped, embedder).size() == 2);

  const auto taxonomy = corpus::Taxonomy::load();
  c.require(taxonomy.subclasses.size() == 48);
  std::vector<corpus::QaItem> pool;
  const char* interrogatives[] = {"What", "Why", "Where", "How"};
  const char* intentions[] = {"Concept / Definition", "Design rationale",
                              "Feature location", "System design"};
  int n = 0;
  for (const auto& sub : taxonomy.subclasses)
    for (int i = 0; i < 10; ++i, ++n) {
      corpus::QaItem item;
      item.id = "s" + std::to_string(10000 + n);
      item.question = std::string(interrogatives[n % 4]) + " about " +
                      std::to_string(n) + "?";
      item.cluster_id = sub.id;
      item.qa_type = {interrogatives[n % 4], intentions[n % 4]};
      item.difficulty = static_cast<double>((n * 7) % 13);
      pool.push_back(item);
    }

  const auto sampled = corpus::sample_benchmark(pool, 4, 9, 12);
  std::map<std::string, std::size_t> per_cluster;
  for (const auto& item : sampled) ++per_cluster[item.cluster_id];
  c.require(per_cluster.size() == 48);
  for (const auto& [cluster, count] : per_cluster)
    c.require(count >= 4 && count <= 9);

  const auto replay = corpus::sample_benchmark(pool, 4, 9, 12);
  c.require(replay.size() == sampled.size());
  for (std::size_t i = 0; i < sampled.size(); ++i)
    c.require(replay[i].id == sampled[i].id);
  return c.ok;
}

bool end_to_end_desk_run() {
  Check c;
  const auto start = Clock::now();
  TempDir dir;

  const auto repo = dir.path() / "repo";
  test_support::populate_fixture_repo(repo);

  const auto fixtures = dir.path() / "fixtures";
  const auto workdir = dir.path() / "out";

  // five questions over the toy repository
  std::vector<json> item_rows;
  const char* clusters[] = {"0.0", "0.1", "1.0", "2.3", "5.2"};
  for (int i = 0; i < 5; ++i) {
    corpus::QaItem item;
    item.id = "q" + std::to_string(i);
    item.repo = "widget";
    item.commit_id = "deadbeef";
    item.question = "Where is feature " + std::to_string(i) + "?";
    item.reference_answer = "In src/main.py.";
    item.cluster_id = clusters[i];
    item.qa_type = {"Where", "Feature location"};
    item_rows.push_back(corpus::qa_item_to_json(item));
  }
  driver::write_artifact(fixtures / "items.jsonl", "qa_items", item_rows,
                         "fixture");

  // scripted agent transcripts: one search, then a cited finish
  for (int i = 0; i < 5; ++i) {
    const json transcript = json::array(
        {"<tool_call>{\"name\": \"semantic_search\", \"arguments\": "
         "{\"query\": \"widget\"}}</tool_call>",
         "<finish>Feature " + std::to_string(i) +
             " lives in src/main.py: line 3-5.</finish>"});
    write_file(fixtures / "agent" / ("q" + std::to_string(i) + ".json"),
               transcript.dump());
  }

  // scripted judge: 5 questions x 3 runs
  json judge_replies = json::array();
  for (int i = 0; i < 15; ++i) {
    judge_replies.push_back(
        "{\"correctness\": " + std::to_string(5 + i % 5) +
        ", \"completeness\": 6, \"relevance\": 8, \"clarity\": 7, "
        "\"reasoning\": " + std::to_string(4 + i % 4) + "}");
  }
  write_file(fixtures / "judge.json", judge_replies.dump());

  // scripted reward model: 2 rollout groups x 4 candidates
  json reward_replies = json::array();
  for (int i = 0; i < 8; ++i) {
    reward_replies.push_back(
        "{\"correctness\": " + std::to_string(2 + i % 7) +
        ", \"completeness\": 5, \"relevance\": 7, \"clarity\": 6, "
        "\"reasoning\": 5}");
  }
  write_file(fixtures / "reward.json", reward_replies.dump());

  std::vector<json> rollout_rows;
  for (int g = 0; g < 2; ++g) {
    json row = {{"question_id", "q" + std::to_string(g)},
                {"question", "Where is feature " + std::to_string(g) + "?"},
                {"reference", "In src/main.py."},
                {"candidates", json::array({"ans a", "ans b", "ans c", "ans d"})}};
    rollout_rows.push_back(std::move(row));
  }
  jsonl::write_file_atomic(fixtures / "rollouts.jsonl", rollout_rows);

  std::vector<json> direct_rows;
  for (int q = 0; q < 5; ++q)
    for (int m = 0; m < 2; ++m)
      direct_rows.push_back({{"question", "q" + std::to_string(q)},
                             {"model", "m" + std::to_string(m)},
                             {"total", 20.0 + q * 4 + m}});
  jsonl::write_file_atomic(fixtures / "direct_scores.jsonl", direct_rows);

  const json config = {
      {"workdir", workdir.string()},
      {"freeze_time", true},
      {"keep_fraction", 0.6},
      {"judge_runs", 3},
      {"report_axis", "cluster"},
      {"repo",
       {{"path", repo.string()}, {"name", "widget"}, {"commit", "deadbeef"}}},
      {"models",
       {{"agent", "m-agent"}, {"judge", "m-judge"}, {"reward", "m-reward"}}},
      {"backend",
       {{"mode", "scripted"},
        {"agent_transcripts", (fixtures / "agent").string()},
        {"judge_transcript", (fixtures / "judge.json").string()},
        {"reward_transcript", (fixtures / "reward.json").string()}}},
      {"inputs",
       {{"items", (fixtures / "items.jsonl").string()},
        {"rollouts", (fixtures / "rollouts.jsonl").string()},
        {"direct_scores", (fixtures / "direct_scores.jsonl").string()}}}};

  const auto run_all = [&config, &c] {
    for (const auto stage : {driver::Stage::run, driver::Stage::judge,
                             driver::Stage::calibrate, driver::Stage::reward,
                             driver::Stage::report})
      c.require(driver::run_stage(stage, config).exit_status == 0);
  };
  const auto slurp_all = [&workdir] {
    std::map<std::string, std::string> bytes;
    for (const auto& e :
         std::filesystem::recursive_directory_iterator(workdir)) {
      if (!e.is_regular_file()) continue;
      std::ifstream in(e.path(), std::ios::binary);
      std::stringstream buf;
      buf << in.rdbuf();
      bytes[e.path().string()] = buf.str();
    }
    return bytes;
  };

  run_all();
  const auto first = slurp_all();
  c.require(first.count((workdir / "trajectories.jsonl").string()) == 1);
  c.require(first.count((workdir / "verdicts.jsonl").string()) == 1);
  c.require(first.count((workdir / "difficulty.jsonl").string()) == 1);
  c.require(first.count((workdir / "rewards.jsonl").string()) == 1);
  c.require(first.count((workdir / "report.json").string()) == 1);

  c.require(driver::read_artifact(workdir / "trajectories.jsonl").size() == 5);
  c.require(driver::read_artifact(workdir / "verdicts.jsonl").size() == 5);
  c.require(driver::read_artifact(workdir / "difficulty.jsonl").size() == 5);

  for (const json& row : driver::read_artifact(workdir / "rewards.jsonl")) {
    double sum = 0;
    for (double a : row.at("advantages").get<std::vector<double>>()) sum += a;
    c.require(std::abs(sum) < 1e-9);
  }

  run_all();
  c.require(slurp_all() == first);

  c.require(seconds_since(start) < 60.0);
  return c.ok;
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<bool()>> criteria[] = {
      {"reward arithmetic endpoints and exhaustive sweep", reward_arithmetic},
      {"published score table row-sum identity", score_table_row_sums},
      {"calibration pipeline matches the brute-force oracle",
       calibration_oracle},
      {"agent turn, observation, and context budgets", agent_budgets},
      {"final-answer protocol validation recall and precision",
       protocol_validation},
      {"sandbox rejects the write corpus and leaves the tree untouched",
       sandbox_soundness},
      {"clustering convergence, blob recovery, and hierarchy shape",
       clustering_properties},
      {"dedup idempotence and cluster-balanced sampling", dedup_and_sampling},
      {"end-to-end desk run is reproducible byte for byte",
       end_to_end_desk_run},
  };

  int failures = 0;
  for (const auto& [name, run] : criteria) {
    bool ok = false;
    try {
      ok = run();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "  exception: %s\n", e.what());
    }
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
