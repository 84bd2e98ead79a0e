// SPDX-License-Identifier: Apache-2.0
#include "repoqa/agent.hpp"

#include <regex>

#include "repoqa/assets.hpp"
#include "repoqa/errors.hpp"

namespace repoqa::agent {

using nlohmann::json;

void AgentConfig::validate() const {
  if (max_turns < 1) throw ConfigError("max_turns must be >= 1");
  if (context_budget == 0) throw ConfigError("context_budget must be > 0");
  if (observation_cap == 0) throw ConfigError("observation_cap must be > 0");
}

std::string termination_name(Termination t) {
  switch (t) {
    case Termination::finished: return "finished";
    case Termination::turn_cap: return "turn_cap";
    case Termination::context_cap: return "context_cap";
    case Termination::protocol_failure: return "protocol_failure";
  }
  return "finished";
}

Termination parse_termination(const std::string& name) {
  if (name == "finished") return Termination::finished;
  if (name == "turn_cap") return Termination::turn_cap;
  if (name == "context_cap") return Termination::context_cap;
  if (name == "protocol_failure") return Termination::protocol_failure;
  throw ProtocolError("unknown termination: " + name);
}

namespace {

/// All non-overlapping <tag>...</tag> spans, in order.
std::vector<std::pair<std::size_t, std::size_t>> tag_spans(
    const std::string& text, const std::string& tag) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t pos = 0;
  while ((pos = text.find(open, pos)) != std::string::npos) {
    const std::size_t inner = pos + open.size();
    const std::size_t end = text.find(close, inner);
    if (end == std::string::npos) break;
    spans.emplace_back(pos, end + close.size());
    pos = end + close.size();
  }
  return spans;
}

std::string inner_of(const std::string& text,
                     std::pair<std::size_t, std::size_t> span,
                     const std::string& tag) {
  const std::size_t open = span.first + tag.size() + 2;
  std::string inner = text.substr(open, span.second - open - (tag.size() + 3));
  // trim surrounding whitespace
  const auto begin = inner.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto last = inner.find_last_not_of(" \t\r\n");
  return inner.substr(begin, last - begin + 1);
}

}  // namespace

ParsedTurn parse_assistant_turn(const std::string& text) {
  if (text.empty()) throw Error("parse_assistant_turn: text must be nonempty");

  ParsedTurn parsed;
  const auto finish_spans = tag_spans(text, "finish");
  const auto call_spans = tag_spans(text, "tool_call");

  std::string reasoning = text;
  for (auto it = call_spans.rbegin(); it != call_spans.rend(); ++it)
    reasoning.erase(it->first, it->second - it->first);

  for (const auto& span : call_spans) {
    const std::string payload = inner_of(text, span, "tool_call");
    try {
      json call = json::parse(payload);
      if (!call.contains("name") || !call["name"].is_string()) {
        parsed.violations.push_back("tool call missing name");
        continue;
      }
      toolkit::ToolCall tc;
      tc.tool = toolkit::parse_tool_name(call["name"]);
      tc.arguments = call.value("arguments", json::object());
      parsed.tool_calls.push_back(std::move(tc));
    } catch (const json::exception&) {
      parsed.violations.push_back("malformed tool-call JSON");
    } catch (const ProtocolError& e) {
      parsed.violations.push_back(e.what());
    }
  }

  if (!finish_spans.empty()) {
    if (finish_spans.size() > 1)
      parsed.violations.push_back("finish not unique");
    if (!parsed.tool_calls.empty())
      parsed.violations.push_back("finish block with tool calls");
    parsed.kind = ParsedTurn::Kind::final;
    parsed.final_answer = inner_of(text, finish_spans.front(), "finish");
    for (auto it = finish_spans.rbegin(); it != finish_spans.rend(); ++it) {
      const auto pos = reasoning.find(text.substr(it->first, it->second - it->first));
      if (pos != std::string::npos)
        reasoning.erase(pos, it->second - it->first);
    }
  } else if (!parsed.tool_calls.empty()) {
    parsed.kind = ParsedTurn::Kind::tool_calls;
  } else {
    parsed.kind = ParsedTurn::Kind::empty;
    parsed.violations.push_back("empty action: no finish block and no tool calls");
  }

  parsed.reasoning = reasoning;
  return parsed;
}

std::vector<std::string> validate_final_answer(
    const std::string& answer, const toolkit::RepoSnapshot& snapshot) {
  std::vector<std::string> violations;
  if (answer.find_first_not_of(" \t\r\n") == std::string::npos) {
    violations.push_back("empty answer");
    return violations;
  }
  if (answer.find("```") != std::string::npos)
    violations.push_back("code block present");

  static const std::regex citation(R"(([^\s:,;]+)\s*:\s*line\s+(\d+)\s*-\s*(\d+))");
  for (auto it = std::sregex_iterator(answer.begin(), answer.end(), citation);
       it != std::sregex_iterator(); ++it) {
    const std::string path = (*it)[1];
    const std::size_t start = std::stoul((*it)[2]);
    const std::size_t end = std::stoul((*it)[3]);
    if (path.starts_with('/')) {
      violations.push_back("absolute path in citation: " + path);
      continue;
    }
    const toolkit::FileEntry* entry = snapshot.find(path);
    if (!entry) {
      violations.push_back("citation path not in repository: " + path);
      continue;
    }
    if (start < 1 || start > end || end > entry->line_count)
      violations.push_back("citation range out of bounds for " + path +
                           " (file has " + std::to_string(entry->line_count) +
                           " lines)");
  }
  return violations;
}

std::string build_system_prompt(const toolkit::RepoSnapshot& snapshot,
                                const AgentConfig& config) {
  std::string prompt = assets::load("agent_system_prompt.txt");
  prompt = assets::substitute(std::move(prompt), "tools",
                              toolkit::tool_schemas().dump(2));
  prompt = assets::substitute(std::move(prompt), "repo_path",
                              snapshot.root().string());
  prompt = assets::substitute(std::move(prompt), "max_turns",
                              std::to_string(config.max_turns));
  return prompt;
}

std::string build_user_prompt(const toolkit::RepoSnapshot& snapshot,
                              const std::string& question) {
  std::string prompt = assets::load("agent_user_prompt.txt");
  prompt = assets::substitute(std::move(prompt), "repo_path",
                              snapshot.root().string());
  prompt = assets::substitute(std::move(prompt), "question", question);
  return prompt;
}

namespace {

constexpr const char* kElisionMarker = "[earlier observation elided to fit the context budget]";

std::size_t message_tokens(const std::vector<gateway::ChatMessage>& messages) {
  std::size_t total = 0;
  for (const auto& m : messages) total += gateway::approximate_tokens(m.content);
  return total;
}

/// Replaces the oldest tool observations with an elision marker until the
/// conversation fits the budget. Returns false when even full elision
/// cannot fit.
bool fit_to_budget(std::vector<gateway::ChatMessage>& messages,
                   std::size_t budget) {
  if (message_tokens(messages) <= budget) return true;
  for (auto& m : messages) {
    if (m.role != gateway::Role::tool || m.content == kElisionMarker) continue;
    m.content = kElisionMarker;
    if (message_tokens(messages) <= budget) return true;
  }
  return message_tokens(messages) <= budget;
}

}  // namespace

Trajectory run_session(const std::string& question_id,
                       const std::string& question,
                       gateway::ChatBackend& backend,
                       const toolkit::RepoSnapshot& snapshot,
                       const AgentConfig& config) {
  config.validate();

  Trajectory trajectory;
  trajectory.question_id = question_id;

  std::vector<gateway::ChatMessage> messages;
  messages.push_back({gateway::Role::system, build_system_prompt(snapshot, config)});
  messages.push_back({gateway::Role::user, build_user_prompt(snapshot, question)});

  for (std::size_t turn_index = 1; turn_index <= config.max_turns; ++turn_index) {
    if (!fit_to_budget(messages, config.context_budget)) {
      trajectory.termination = Termination::context_cap;
      return trajectory;
    }

    gateway::ChatRequest request;
    request.messages = messages;
    request.tool_schemas = toolkit::tool_schemas();
    request.temperature = config.temperature;

    gateway::ChatResult result;
    try {
      result = backend.complete(request);
    } catch (const Error&) {
      trajectory.termination = Termination::protocol_failure;
      return trajectory;
    }
    trajectory.usage += result.usage;
    messages.push_back({gateway::Role::assistant, result.message});

    ParsedTurn parsed = parse_assistant_turn(
        result.message.empty() ? std::string(" ") : result.message);

    Turn turn;
    turn.index = turn_index;
    turn.reasoning = parsed.reasoning;

    if (parsed.kind == ParsedTurn::Kind::final) {
      turn.finish = parsed.final_answer;
      trajectory.turns.push_back(std::move(turn));
      trajectory.final_answer = parsed.final_answer;
      trajectory.termination = Termination::finished;
      return trajectory;
    }

    if (parsed.kind == ParsedTurn::Kind::empty) {
      trajectory.turns.push_back(std::move(turn));
      trajectory.final_answer = result.message;
      trajectory.termination = Termination::protocol_failure;
      return trajectory;
    }

    // Tool calls execute sequentially in emission order; each observation
    // is appended to the context as a tool message.
    turn.actions = parsed.tool_calls;
    for (const toolkit::ToolCall& call : turn.actions) {
      toolkit::Observation obs =
          toolkit::execute_tool_call(snapshot, call, config.observation_cap);
      messages.push_back({gateway::Role::tool, obs.content});
      turn.observations.push_back(std::move(obs));
    }
    trajectory.turns.push_back(std::move(turn));
  }

  // Turn cap reached: one last request with tool use disabled.
  messages.push_back(
      {gateway::Role::user,
       "You have reached the maximum number of turns. Tool use is now "
       "disabled. Provide your final answer immediately inside a single "
       "<finish></finish> block."});
  fit_to_budget(messages, config.context_budget);

  gateway::ChatRequest request;
  request.messages = messages;
  request.temperature = config.temperature;
  try {
    const gateway::ChatResult result = backend.complete(request);
    trajectory.usage += result.usage;
    const ParsedTurn parsed = parse_assistant_turn(
        result.message.empty() ? std::string(" ") : result.message);
    trajectory.final_answer = parsed.kind == ParsedTurn::Kind::final
                                  ? parsed.final_answer
                                  : result.message;
  } catch (const Error&) {
    trajectory.final_answer.clear();
  }
  trajectory.termination = Termination::turn_cap;
  return trajectory;
}

json trajectory_to_json(const Trajectory& trajectory) {
  json turns = json::array();
  for (const Turn& turn : trajectory.turns) {
    json actions = json::array();
    for (const toolkit::ToolCall& call : turn.actions)
      actions.push_back({{"tool", toolkit::tool_name(call.tool)},
                         {"arguments", call.arguments}});
    json observations = json::array();
    for (const toolkit::Observation& obs : turn.observations)
      observations.push_back({{"tool", obs.tool},
                              {"content", obs.content},
                              {"truncated", obs.truncated},
                              {"original_length", obs.original_length}});
    json t = {{"index", turn.index},
              {"reasoning", turn.reasoning},
              {"actions", actions},
              {"observations", observations}};
    if (turn.finish) t["finish"] = *turn.finish;
    turns.push_back(std::move(t));
  }
  return {{"question_id", trajectory.question_id},
          {"turns", turns},
          {"final_answer", trajectory.final_answer},
          {"termination", termination_name(trajectory.termination)},
          {"usage",
           {{"prompt_tokens", trajectory.usage.prompt_tokens},
            {"output_tokens", trajectory.usage.output_tokens},
            {"approximate", trajectory.usage.approximate}}}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory trajectory;
  trajectory.question_id = j.value("question_id", "");
  trajectory.final_answer = j.value("final_answer", "");
  trajectory.termination = parse_termination(j.value("termination", "finished"));
  if (j.contains("usage")) {
    trajectory.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
    trajectory.usage.output_tokens = j["usage"].value("output_tokens", 0);
    trajectory.usage.approximate = j["usage"].value("approximate", false);
  }
  for (const json& t : j.value("turns", json::array())) {
    Turn turn;
    turn.index = t.value("index", 0);
    turn.reasoning = t.value("reasoning", "");
    for (const json& a : t.value("actions", json::array())) {
      toolkit::ToolCall call;
      call.tool = toolkit::parse_tool_name(a.value("tool", "search"));
      call.arguments = a.value("arguments", json::object());
      turn.actions.push_back(std::move(call));
    }
    for (const json& o : t.value("observations", json::array())) {
      toolkit::Observation obs;
      obs.tool = o.value("tool", "");
      obs.content = o.value("content", "");
      obs.truncated = o.value("truncated", false);
      obs.original_length = o.value("original_length", 0);
      turn.observations.push_back(std::move(obs));
    }
    if (t.contains("finish")) turn.finish = t["finish"].get<std::string>();
    trajectory.turns.push_back(std::move(turn));
  }
  return trajectory;
}

}  // namespace repoqa::agent
