// SPDX-License-Identifier: Apache-2.0
#include "repoqa/driver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>
#include <thread>

#include "repoqa/agent.hpp"
#include "repoqa/calibration.hpp"
#include "repoqa/corpus.hpp"
#include "repoqa/errors.hpp"
#include "repoqa/gateway.hpp"
#include "repoqa/jsonl.hpp"
#include "repoqa/judge.hpp"
#include "repoqa/report.hpp"
#include "repoqa/reward.hpp"

namespace repoqa::driver {

using nlohmann::json;

std::string stage_name(Stage stage) {
  switch (stage) {
    case Stage::ingest: return "ingest";
    case Stage::cluster: return "cluster";
    case Stage::synthesize: return "synthesize";
    case Stage::dedupe: return "dedupe";
    case Stage::calibrate: return "calibrate";
    case Stage::run: return "run";
    case Stage::judge: return "judge";
    case Stage::reward: return "reward";
    case Stage::report: return "report";
  }
  return "ingest";
}

Stage parse_stage(const std::string& name) {
  static const std::map<std::string, Stage> stages = {
      {"ingest", Stage::ingest},       {"cluster", Stage::cluster},
      {"synthesize", Stage::synthesize}, {"dedupe", Stage::dedupe},
      {"calibrate", Stage::calibrate}, {"run", Stage::run},
      {"judge", Stage::judge},         {"reward", Stage::reward},
      {"report", Stage::report}};
  const auto found = stages.find(name);
  if (found == stages.end()) throw ConfigError("unknown stage: " + name);
  return found->second;
}

namespace {

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string timestamp_utc(bool frozen) {
  if (frozen) return "1970-01-01T00:00:00Z";
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

const json& require(const json& config, const std::string& key) {
  if (!config.contains(key)) throw ConfigError("missing config key: " + key);
  return config.at(key);
}

std::uint64_t seed_of(const json& config, const std::string& name,
                      std::uint64_t fallback) {
  if (config.contains("seeds") && config["seeds"].contains(name))
    return config["seeds"][name].get<std::uint64_t>();
  return fallback;
}

std::filesystem::path workdir_of(const json& config) {
  return std::filesystem::path(require(config, "workdir").get<std::string>());
}

std::filesystem::path input_path(const json& config, const std::string& key,
                                 const std::filesystem::path& fallback) {
  if (config.contains("inputs") && config["inputs"].contains(key))
    return std::filesystem::path(config["inputs"][key].get<std::string>());
  return fallback;
}

void require_exists(const std::filesystem::path& path, const std::string& key) {
  if (!std::filesystem::exists(path))
    throw ConfigError("upstream artifact missing for " + key + ": " +
                      path.string());
}

std::unique_ptr<gateway::ChatBackend> make_backend(const json& config,
                                                   const std::string& which) {
  const json& backend = require(config, "backend");
  const std::string mode = backend.value("mode", "scripted");
  if (mode == "scripted") {
    const std::string key = which + "_transcript";
    const std::string path = require(backend, key).get<std::string>();
    require_exists(path, key);
    const std::string model =
        config.contains("models") ? config["models"].value(which, "scripted")
                                  : "scripted";
    return std::make_unique<gateway::ScriptedChatBackend>(
        gateway::ScriptedChatBackend::from_file(path, model));
  }
  if (mode == "http") {
    const json& http = require(backend, "http");
    gateway::HttpEndpoint endpoint;
    endpoint.base_url = require(http, "base_url").get<std::string>();
    endpoint.path = http.value("path", std::string("/v1/chat/completions"));
    endpoint.api_key_env = http.value("api_key_env", std::string());
    endpoint.model = require(config, "models").value(which, "");
    return std::make_unique<gateway::RetryingChatBackend>(
        std::make_shared<gateway::HttpChatBackend>(std::move(endpoint)),
        gateway::RetryPolicy{});
  }
  throw ConfigError("unknown backend mode: " + mode);
}

void validate_roster(const json& config) {
  if (!config.contains("models")) return;
  const json& models = config["models"];
  gateway::ModelRoster roster;
  roster.agent_model = models.value("agent", "");
  roster.judge_model = models.value("judge", "");
  roster.reward_model = models.value("reward", "");
  roster.embedding_model = models.value("embedding", "");
  roster.validate();
}

json verdict_to_json(const report::VerdictRecord& record) {
  json runs = json::array();
  for (const judge::ScoreVector& run : record.verdict.runs)
    runs.push_back(run.scores);
  json mean = json::object();
  for (std::size_t d = 0; d < judge::kDimensions; ++d)
    mean[judge::kDimensionNames[d]] = record.verdict.mean[d];
  return {{"question_id", record.question_id},
          {"model", record.model},
          {"runs", runs},
          {"mean", mean},
          {"overall", record.verdict.overall},
          {"complete", record.verdict.complete}};
}

report::VerdictRecord verdict_from_json(const json& j) {
  report::VerdictRecord record;
  record.question_id = j.value("question_id", "");
  record.model = j.value("model", "");
  for (const json& run : j.value("runs", json::array())) {
    judge::ScoreVector v;
    for (std::size_t d = 0; d < judge::kDimensions; ++d)
      v.scores[d] = run.at(d).get<int>();
    record.verdict.runs.push_back(v);
  }
  const json mean = j.value("mean", json::object());
  for (std::size_t d = 0; d < judge::kDimensions; ++d)
    record.verdict.mean[d] = mean.value(judge::kDimensionNames[d], 0.0);
  record.verdict.overall = j.value("overall", 0.0);
  record.verdict.complete = j.value("complete", false);
  return record;
}

std::vector<corpus::QaItem> load_items(const std::filesystem::path& path) {
  std::vector<corpus::QaItem> items;
  for (const json& record : read_artifact(path))
    items.push_back(corpus::qa_item_from_json(record));
  return items;
}

// ---------------------------------------------------------------------------
// Stage bodies
// ---------------------------------------------------------------------------

void stage_ingest(const json& config, RunManifest& manifest,
                  StageOutcome& outcome) {
  const auto raw_path = input_path(config, "issues_raw", {});
  require_exists(raw_path, "issues_raw");
  manifest.inputs.push_back(raw_path.string());

  std::vector<corpus::IssueDoc> docs;
  for (const json& record : jsonl::read_file(raw_path))
    docs.push_back(corpus::IssueDoc::make(record.value("repo", ""),
                                          record.value("title", ""),
                                          record.value("body", "")));
  const std::vector<corpus::IssueDoc> kept = corpus::filter_issues(docs);

  std::vector<json> records;
  for (const corpus::IssueDoc& doc : kept)
    records.push_back({{"repo", doc.repo},
                       {"text", doc.text},
                       {"byte_length", doc.byte_length}});
  const auto out = workdir_of(config) / "issues.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "issues", records, manifest.hash());
  (void)outcome;
}

std::vector<corpus::IssueDoc> load_issues(const std::filesystem::path& path) {
  std::vector<corpus::IssueDoc> docs;
  for (const json& record : read_artifact(path)) {
    corpus::IssueDoc doc;
    doc.repo = record.value("repo", "");
    doc.text = record.value("text", "");
    doc.byte_length = record.value("byte_length", doc.text.size());
    docs.push_back(std::move(doc));
  }
  return docs;
}

void stage_cluster(const json& config, RunManifest& manifest,
                   StageOutcome& outcome) {
  const auto issues_path =
      input_path(config, "issues", workdir_of(config) / "issues.jsonl");
  require_exists(issues_path, "issues");
  manifest.inputs.push_back(issues_path.string());

  const std::vector<corpus::IssueDoc> docs = load_issues(issues_path);
  std::vector<std::string> texts;
  for (const corpus::IssueDoc& doc : docs) texts.push_back(doc.text);

  const std::uint64_t seed = seed_of(config, "cluster", 0);
  manifest.seeds["cluster"] = seed;
  gateway::ScriptedEmbedder embedder(
      config.value("embedding_dimension", std::size_t{8}));
  const auto vectors = embedder.embed(texts);

  const auto layer1_k = config.value("layer1_k", std::size_t{10});
  const auto layer2_total = config.value("layer2_total", std::size_t{50});
  std::vector<corpus::ClusterNode> nodes =
      corpus::hierarchical_cluster(vectors, layer1_k, layer2_total, seed);
  corpus::apply_taxonomy_labels(nodes, corpus::Taxonomy::load());

  std::vector<json> records;
  for (const corpus::ClusterNode& node : nodes) {
    json record = {{"layer", node.layer},
                   {"id", node.id},
                   {"label", node.label},
                   {"members", node.members}};
    if (node.parent) record["parent"] = *node.parent;
    records.push_back(std::move(record));
  }
  const auto out = workdir_of(config) / "clusters.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "clusters", records, manifest.hash());
  (void)outcome;
}

void stage_synthesize(const json& config, RunManifest& manifest,
                      StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto issues_path =
      input_path(config, "issues", workdir / "issues.jsonl");
  const auto clusters_path =
      input_path(config, "clusters", workdir / "clusters.jsonl");
  require_exists(issues_path, "issues");
  require_exists(clusters_path, "clusters");
  manifest.inputs.push_back(issues_path.string());
  manifest.inputs.push_back(clusters_path.string());

  const std::vector<corpus::IssueDoc> docs = load_issues(issues_path);

  std::vector<corpus::ClusterNode> leaves;
  for (const json& record : read_artifact(clusters_path)) {
    if (record.value("layer", 1) != 2) continue;
    corpus::ClusterNode node;
    node.layer = 2;
    node.id = record.value("id", "");
    node.label = record.value("label", "");
    node.members = record.value("members", std::vector<std::size_t>{});
    leaves.push_back(std::move(node));
  }
  std::sort(leaves.begin(), leaves.end(),
            [](const corpus::ClusterNode& a, const corpus::ClusterNode& b) {
              return a.id < b.id;
            });

  const std::uint64_t seed = seed_of(config, "synthesize", 0);
  manifest.seeds["synthesize"] = seed;
  const std::string repo_name = config.value("repo", json::object())
                                    .value("name", std::string("unknown"));
  const std::string commit_id =
      config.value("repo", json::object()).value("commit", std::string());
  const auto backend = make_backend(config, "synthesis");
  const corpus::Taxonomy taxonomy = corpus::Taxonomy::load();

  std::vector<json> records;
  std::size_t ordinal = 0;
  for (const corpus::ClusterNode& leaf : leaves) {
    std::vector<corpus::IssueDoc> pool;
    for (std::size_t i : leaf.members)
      if (i < docs.size()) pool.push_back(docs[i]);
    if (pool.empty()) {
      outcome.errors.push_back("cluster " + leaf.id + ": no member issues");
      continue;
    }
    const std::string prompt = corpus::build_synthesis_prompt(
        leaf, repo_name, pool, config.value("synthesis_sample", std::size_t{20}),
        seed + ordinal);
    gateway::ChatRequest request;
    request.messages.push_back({gateway::Role::user, prompt});
    std::string reply;
    try {
      reply = backend->complete(request).message;
    } catch (const GatewayError& e) {
      outcome.errors.push_back("cluster " + leaf.id + ": " + e.what());
      continue;
    }
    corpus::SynthesisResult result =
        corpus::parse_synthesis_output(reply, taxonomy);
    ++ordinal;
    if (!result.item) {
      std::string reasons;
      for (const std::string& r : result.rejections) {
        if (!reasons.empty()) reasons += "; ";
        reasons += r;
      }
      outcome.errors.push_back("cluster " + leaf.id + ": rejected: " + reasons);
      continue;
    }
    corpus::QaItem item = std::move(*result.item);
    if (item.id.empty())
      item.id = "q-" + leaf.id + "-" + std::to_string(ordinal);
    if (item.repo.empty()) item.repo = repo_name;
    if (item.commit_id.empty()) item.commit_id = commit_id;
    records.push_back(corpus::qa_item_to_json(item));
  }

  const auto out = workdir / "items.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "qa_items", records, manifest.hash());
  if (!outcome.errors.empty()) outcome.exit_status = 1;
}

void stage_dedupe(const json& config, RunManifest& manifest,
                  StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto items_path = input_path(config, "items", workdir / "items.jsonl");
  require_exists(items_path, "items");
  manifest.inputs.push_back(items_path.string());

  const std::vector<corpus::QaItem> items = load_items(items_path);
  gateway::ScriptedEmbedder embedder(
      config.value("embedding_dimension", std::size_t{8}));
  const double threshold = config.value("dedupe_threshold", 0.92);
  const std::vector<corpus::QaItem> kept =
      corpus::dedupe(items, embedder, threshold);

  std::vector<json> records;
  for (const corpus::QaItem& item : kept)
    records.push_back(corpus::qa_item_to_json(item));
  const auto out = workdir / "items_dedup.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "qa_items", records, manifest.hash());
  (void)outcome;
}

void stage_calibrate(const json& config, RunManifest& manifest,
                     StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto scores_path = input_path(config, "direct_scores", {});
  require_exists(scores_path, "direct_scores");
  manifest.inputs.push_back(scores_path.string());

  calibration::ScoreMatrix matrix;
  std::vector<json> rows;
  if (scores_path.extension() == ".jsonl") {
    std::ifstream probe(scores_path);
    std::string first;
    std::getline(probe, first);
    rows = (first.find("\"kind\"") != std::string::npos)
               ? read_artifact(scores_path)
               : jsonl::read_file(scores_path);
  } else {
    rows = jsonl::read_file(scores_path);
  }
  for (const json& row : rows) {
    const std::string question = require(row, "question").get<std::string>();
    const std::string model = require(row, "model").get<std::string>();
    matrix.totals[{question, model}].push_back(
        require(row, "total").get<double>());
    if (std::find(matrix.questions.begin(), matrix.questions.end(), question) ==
        matrix.questions.end())
      matrix.questions.push_back(question);
    if (std::find(matrix.models.begin(), matrix.models.end(), model) ==
        matrix.models.end())
      matrix.models.push_back(model);
  }
  std::sort(matrix.questions.begin(), matrix.questions.end());
  std::sort(matrix.models.begin(), matrix.models.end());

  const std::vector<calibration::DifficultyRecord> records =
      calibration::calibrate(matrix);

  std::vector<json> difficulty_rows;
  for (const calibration::DifficultyRecord& record : records)
    difficulty_rows.push_back({{"question", record.question},
                               {"per_model_mean", record.per_model_mean},
                               {"per_model_z", record.per_model_z},
                               {"difficulty", record.difficulty}});
  const auto difficulty_out = workdir / "difficulty.jsonl";
  manifest.outputs.push_back(difficulty_out.string());
  write_artifact(difficulty_out, "difficulty", difficulty_rows, manifest.hash());

  const double keep_fraction = config.value("keep_fraction", 1.0);
  const std::vector<std::string> kept =
      calibration::filter_by_difficulty(records, keep_fraction);
  std::vector<json> kept_rows;
  for (const std::string& question : kept)
    kept_rows.push_back({{"question", question}});
  const auto kept_out = workdir / "kept_questions.jsonl";
  manifest.outputs.push_back(kept_out.string());
  write_artifact(kept_out, "kept_questions", kept_rows, manifest.hash());
  (void)outcome;
}

void stage_run(const json& config, RunManifest& manifest,
               StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto items_path =
      input_path(config, "items", workdir / "items_dedup.jsonl");
  require_exists(items_path, "items");
  manifest.inputs.push_back(items_path.string());

  const json repo = require(config, "repo");
  const std::string repo_path = require(repo, "path").get<std::string>();
  const toolkit::RepoSnapshot snapshot = toolkit::open_snapshot(
      repo_path, repo.value("name", std::string("repo")),
      repo.value("commit", std::string()));

  std::vector<corpus::QaItem> items = load_items(items_path);
  std::sort(items.begin(), items.end(),
            [](const corpus::QaItem& a, const corpus::QaItem& b) {
              return a.id < b.id;
            });

  agent::AgentConfig agent_config;
  if (config.contains("agent")) {
    const json& a = config["agent"];
    agent_config.max_turns = a.value("max_turns", agent_config.max_turns);
    agent_config.context_budget =
        a.value("context_budget", agent_config.context_budget);
    agent_config.observation_cap =
        a.value("observation_cap", agent_config.observation_cap);
    agent_config.temperature = a.value("temperature", agent_config.temperature);
  }
  agent_config.validate();

  const json& backend_config = require(config, "backend");
  const std::string transcripts_dir =
      require(backend_config, "agent_transcripts").get<std::string>();
  const std::string agent_model =
      config.value("models", json::object()).value("agent", "scripted");

  std::vector<json> records(items.size());
  std::vector<std::string> item_errors(items.size());
  const auto work_one = [&](std::size_t i) {
    const corpus::QaItem& item = items[i];
    const std::filesystem::path transcript =
        std::filesystem::path(transcripts_dir) / (item.id + ".json");
    if (!std::filesystem::exists(transcript)) {
      item_errors[i] = item.id + ": missing transcript " + transcript.string();
      return;
    }
    try {
      gateway::ScriptedChatBackend backend =
          gateway::ScriptedChatBackend::from_file(transcript.string(),
                                                  agent_model);
      const agent::Trajectory trajectory = agent::run_session(
          item.id, item.question, backend, snapshot, agent_config);
      records[i] = agent::trajectory_to_json(trajectory);
    } catch (const Error& e) {
      item_errors[i] = item.id + ": " + e.what();
    }
  };

  const auto workers = config.value("workers", std::size_t{1});
  if (workers <= 1 || items.size() <= 1) {
    for (std::size_t i = 0; i < items.size(); ++i) work_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < std::min(workers, items.size()); ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < items.size();
             i = next.fetch_add(1))
          work_one(i);
      });
    for (std::thread& t : pool) t.join();
  }

  std::vector<json> written;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (!item_errors[i].empty()) outcome.errors.push_back(item_errors[i]);
    else written.push_back(std::move(records[i]));
  }
  const auto out = workdir / "trajectories.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "trajectories", written, manifest.hash());
  if (!outcome.errors.empty()) outcome.exit_status = 1;
}

void stage_judge(const json& config, RunManifest& manifest,
                 StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto trajectories_path =
      input_path(config, "trajectories", workdir / "trajectories.jsonl");
  const auto items_path =
      input_path(config, "items", workdir / "items_dedup.jsonl");
  require_exists(trajectories_path, "trajectories");
  require_exists(items_path, "items");
  manifest.inputs.push_back(trajectories_path.string());
  manifest.inputs.push_back(items_path.string());

  std::map<std::string, corpus::QaItem> items;
  for (corpus::QaItem& item : load_items(items_path))
    items[item.id] = std::move(item);

  std::vector<agent::Trajectory> trajectories;
  for (const json& record : read_artifact(trajectories_path))
    trajectories.push_back(agent::trajectory_from_json(record));
  std::sort(trajectories.begin(), trajectories.end(),
            [](const agent::Trajectory& a, const agent::Trajectory& b) {
              return a.question_id < b.question_id;
            });

  const auto backend = make_backend(config, "judge");
  const auto runs = config.value("judge_runs", std::size_t{3});
  const std::string agent_model =
      config.value("models", json::object()).value("agent", "scripted");

  std::vector<json> records;
  for (const agent::Trajectory& trajectory : trajectories) {
    const auto found = items.find(trajectory.question_id);
    if (found == items.end()) {
      outcome.errors.push_back(trajectory.question_id + ": no matching item");
      continue;
    }
    if (trajectory.final_answer.empty()) {
      outcome.errors.push_back(trajectory.question_id + ": empty final answer");
      continue;
    }
    report::VerdictRecord record;
    record.question_id = trajectory.question_id;
    record.model = agent_model;
    record.verdict =
        judge::score_answer(*backend, found->second.question,
                            found->second.reference_answer,
                            trajectory.final_answer, runs);
    if (!record.verdict.complete)
      outcome.errors.push_back(trajectory.question_id +
                               ": incomplete verdict");
    records.push_back(verdict_to_json(record));
  }

  const auto out = workdir / "verdicts.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "verdicts", records, manifest.hash());
  if (!outcome.errors.empty()) outcome.exit_status = 1;
}

void stage_reward(const json& config, RunManifest& manifest,
                  StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto rollouts_path = input_path(config, "rollouts", {});
  require_exists(rollouts_path, "rollouts");
  manifest.inputs.push_back(rollouts_path.string());

  const auto backend = make_backend(config, "reward");
  const reward::RewardWeights weights;

  std::vector<json> records;
  for (const json& row : jsonl::read_file(rollouts_path)) {
    const std::string question_id =
        require(row, "question_id").get<std::string>();
    const std::string question = require(row, "question").get<std::string>();
    const std::string reference = require(row, "reference").get<std::string>();
    const std::vector<std::string> candidates =
        require(row, "candidates").get<std::vector<std::string>>();

    reward::RolloutGroup group;
    group.question = question_id;
    std::size_t excluded = 0;
    for (const std::string& candidate : candidates) {
      try {
        const judge::ScoreVector scores =
            reward::score_rollout(*backend, question, reference, candidate);
        group.rewards.push_back(reward::compute_reward(scores, weights));
      } catch (const RewardError& e) {
        outcome.errors.push_back(question_id + ": " + e.what());
        ++excluded;
      }
    }
    json record = {{"question_id", question_id},
                   {"rewards", group.rewards},
                   {"excluded", excluded}};
    if (group.rewards.size() >= 2)
      record["advantages"] = reward::group_normalize(group);
    else
      outcome.errors.push_back(question_id +
                               ": group too small to normalize");
    records.push_back(std::move(record));
  }

  const auto out = workdir / "rewards.jsonl";
  manifest.outputs.push_back(out.string());
  write_artifact(out, "rewards", records, manifest.hash());
  if (!outcome.errors.empty()) outcome.exit_status = 1;
}

void stage_report(const json& config, RunManifest& manifest,
                  StageOutcome& outcome) {
  const auto workdir = workdir_of(config);
  const auto verdicts_path =
      input_path(config, "verdicts", workdir / "verdicts.jsonl");
  const auto items_path =
      input_path(config, "items", workdir / "items_dedup.jsonl");
  require_exists(verdicts_path, "verdicts");
  require_exists(items_path, "items");
  manifest.inputs.push_back(verdicts_path.string());
  manifest.inputs.push_back(items_path.string());

  std::vector<report::VerdictRecord> verdicts;
  for (const json& record : read_artifact(verdicts_path))
    verdicts.push_back(verdict_from_json(record));
  const std::vector<corpus::QaItem> items = load_items(items_path);

  const report::Axis axis =
      report::parse_axis(config.value("report_axis", std::string("repository")));
  const report::BreakdownReport breakdown =
      report::breakdown(verdicts, items, axis);

  json body = {{"manifest_hash", manifest.hash()},
               {"breakdown", report::breakdown_to_json(breakdown)}};

  const auto trajectories_path =
      input_path(config, "trajectories", workdir / "trajectories.jsonl");
  if (std::filesystem::exists(trajectories_path)) {
    manifest.inputs.push_back(trajectories_path.string());
    std::vector<agent::Trajectory> trajectories;
    for (const json& record : read_artifact(trajectories_path))
      trajectories.push_back(agent::trajectory_from_json(record));
    body["tool_usage"] =
        report::tool_usage_to_json(report::tool_usage_stats(trajectories));
  }

  const auto json_out = workdir / "report.json";
  const auto csv_out = workdir / "report.csv";
  manifest.outputs.push_back(json_out.string());
  manifest.outputs.push_back(csv_out.string());
  jsonl::write_text_atomic(json_out, body.dump(2) + "\n");
  jsonl::write_text_atomic(csv_out, "# manifest_hash " + manifest.hash() +
                                        "\n" +
                                        report::breakdown_to_csv(breakdown));
  (void)outcome;
}

}  // namespace

// ---------------------------------------------------------------------------
// Manifest and artifact plumbing
// ---------------------------------------------------------------------------

std::string RunManifest::hash() const {
  const json deterministic = {{"stage", stage_name(stage)},
                              {"config", config},
                              {"seeds", seeds},
                              {"inputs", inputs},
                              {"model_ids", model_ids}};
  return fnv1a_hex(deterministic.dump());
}

json RunManifest::to_json() const {
  return {{"stage", stage_name(stage)}, {"config", config},
          {"seeds", seeds},             {"inputs", inputs},
          {"outputs", outputs},         {"model_ids", model_ids},
          {"started_at", started_at},   {"finished_at", finished_at},
          {"hash", hash()}};
}

void write_artifact(const std::filesystem::path& path, const std::string& schema,
                    const std::vector<json>& records,
                    const std::string& manifest_hash) {
  std::vector<json> all;
  all.reserve(records.size() + 1);
  all.push_back({{"kind", "header"},
                 {"schema", schema},
                 {"manifest_hash", manifest_hash}});
  all.insert(all.end(), records.begin(), records.end());
  jsonl::write_file_atomic(path, all);
}

std::vector<json> read_artifact(const std::filesystem::path& path) {
  std::vector<json> records = jsonl::read_file(path);
  std::erase_if(records, [](const json& record) {
    return record.is_object() && record.value("kind", "") == "header";
  });
  return records;
}

StageOutcome run_stage(Stage stage, const json& config) {
  if (!config.is_object()) throw ConfigError("config must be a JSON object");
  validate_roster(config);
  const auto workdir = workdir_of(config);
  std::filesystem::create_directories(workdir);
  const bool frozen = config.value("freeze_time", false);

  StageOutcome outcome;
  outcome.manifest.stage = stage;
  outcome.manifest.config = config;
  outcome.manifest.started_at = timestamp_utc(frozen);
  if (config.contains("models"))
    for (const auto& [key, value] : config["models"].items())
      if (value.is_string())
        outcome.manifest.model_ids.push_back(value.get<std::string>());

  switch (stage) {
    case Stage::ingest: stage_ingest(config, outcome.manifest, outcome); break;
    case Stage::cluster: stage_cluster(config, outcome.manifest, outcome); break;
    case Stage::synthesize:
      stage_synthesize(config, outcome.manifest, outcome);
      break;
    case Stage::dedupe: stage_dedupe(config, outcome.manifest, outcome); break;
    case Stage::calibrate:
      stage_calibrate(config, outcome.manifest, outcome);
      break;
    case Stage::run: stage_run(config, outcome.manifest, outcome); break;
    case Stage::judge: stage_judge(config, outcome.manifest, outcome); break;
    case Stage::reward: stage_reward(config, outcome.manifest, outcome); break;
    case Stage::report: stage_report(config, outcome.manifest, outcome); break;
  }

  outcome.manifest.finished_at = timestamp_utc(frozen);
  json manifest_body = outcome.manifest.to_json();
  if (!outcome.errors.empty()) manifest_body["errors"] = outcome.errors;
  const auto manifest_path =
      workdir / "manifests" / (stage_name(stage) + ".json");
  jsonl::write_text_atomic(manifest_path, manifest_body.dump(2) + "\n");
  return outcome;
}

StageOutcome run_stage(const std::string& stage,
                       const std::filesystem::path& config_path) {
  StageOutcome outcome;
  try {
    const Stage parsed = parse_stage(stage);
    std::ifstream in(config_path);
    if (!in) throw ConfigError("cannot open config: " + config_path.string());
    json config;
    try {
      config = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config parse error: " + std::string(e.what()));
    }
    return run_stage(parsed, config);
  } catch (const Error& e) {
    outcome.exit_status = 2;
    outcome.errors.push_back(e.what());
    return outcome;
  }
}

}  // namespace repoqa::driver
