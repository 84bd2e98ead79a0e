// SPDX-License-Identifier: Apache-2.0
#include "repoqa/toolkit.hpp"

#include "repoqa/errors.hpp"

namespace repoqa::toolkit {

using nlohmann::json;

Observation truncate_observation(std::string_view text, std::size_t cap,
                                 std::string tool) {
  if (cap < 1) throw Error("observation cap must be >= 1");
  Observation obs;
  obs.tool = std::move(tool);
  obs.original_length = text.size();
  obs.truncated = text.size() > cap;
  obs.content = std::string(obs.truncated ? text.substr(0, cap) : text);
  return obs;
}

std::string tool_name(Tool tool) {
  switch (tool) {
    case Tool::search: return "search";
    case Tool::view: return "view";
    case Tool::command: return "command";
  }
  return "search";
}

Tool parse_tool_name(const std::string& name) {
  if (name == "semantic_search" || name == "search") return Tool::search;
  if (name == "view_codebase" || name == "view") return Tool::view;
  if (name == "execute_readonly_command" || name == "command") return Tool::command;
  throw ProtocolError("unknown tool: " + name);
}

json tool_schemas() {
  return json::array({
      {{"name", "semantic_search"},
       {"description",
        "Keyword search over repository files. Returns ranked matches with "
        "file path, line number, and a short snippet."},
       {"parameters",
        {{"type", "object"},
         {"properties",
          {{"query", {{"type", "string"}, {"description", "keyword to search for"}}},
           {"max_results", {{"type", "integer"}, {"description", "result cap, default 20"}}},
           {"snippet_radius", {{"type", "integer"}, {"description", "context lines around each match, default 2"}}}}},
         {"required", json::array({"query"})}}}},
      {{"name", "view_codebase"},
       {"description",
        "Inspect a file or directory. Files are shown with line numbers; "
        "concise=true returns a structural outline. Prefer concise=true first."},
       {"parameters",
        {{"type", "object"},
         {"properties",
          {{"path", {{"type", "string"}, {"description", "path relative to the repository root"}}},
           {"view_range", {{"type", "array"}, {"description", "[start, end] 1-based inclusive line range"}}},
           {"concise", {{"type", "boolean"}, {"description", "outline mode"}}}}},
         {"required", json::array({"path"})}}}},
      {{"name", "execute_readonly_command"},
       {"description",
        "Run a constrained read-only shell command (grep, find, head, tail, "
        "cat, wc, ls, ...) in the repository root. Write operations and "
        "unbounded listings such as 'ls -R' are rejected."},
       {"parameters",
        {{"type", "object"},
         {"properties",
          {{"command", {{"type", "string"}, {"description", "the command line to run"}}}}},
         {"required", json::array({"command"})}}}},
  });
}

namespace {

Observation schema_error(const std::string& message, std::size_t cap, Tool tool) {
  return truncate_observation("invalid tool arguments: " + message, cap,
                              tool_name(tool));
}

}  // namespace

Observation execute_tool_call(const RepoSnapshot& snapshot, const ToolCall& call,
                              std::size_t observation_cap) {
  const json& args = call.arguments;
  try {
    switch (call.tool) {
      case Tool::search: {
        if (!args.contains("query") || !args["query"].is_string())
          return schema_error("'query' (string) is required", observation_cap, call.tool);
        const std::string query = args["query"];
        if (query.empty())
          return schema_error("'query' must be nonempty", observation_cap, call.tool);
        const std::size_t max_results = args.value("max_results", 20);
        const std::size_t radius = args.value("snippet_radius", 2);
        const auto hits = search(snapshot, query, std::max<std::size_t>(max_results, 1), radius);
        std::string out;
        if (hits.empty()) {
          out = "no matches for \"" + query + "\"";
        } else {
          for (const SearchHit& h : hits)
            out += h.path + ":" + std::to_string(h.line) + "\n" + h.snippet + "\n---\n";
        }
        Observation obs = truncate_observation(out, observation_cap, "search");
        return obs;
      }
      case Tool::view: {
        if (!args.contains("path") || !args["path"].is_string())
          return schema_error("'path' (string) is required", observation_cap, call.tool);
        ViewOptions options;
        options.observation_cap = observation_cap;
        options.concise = args.value("concise", false);
        if (args.contains("view_range")) {
          const json& r = args["view_range"];
          if (!r.is_array() || r.size() != 2 || !r[0].is_number_integer() ||
              !r[1].is_number_integer())
            return schema_error("'view_range' must be [start, end]", observation_cap, call.tool);
          options.line_range = {r[0].get<std::size_t>(), r[1].get<std::size_t>()};
        }
        Observation obs = view(snapshot, args["path"], options);
        obs.tool = "view";
        return obs;
      }
      case Tool::command: {
        if (!args.contains("command") || !args["command"].is_string())
          return schema_error("'command' (string) is required", observation_cap, call.tool);
        return execute_readonly(snapshot, args["command"], observation_cap);
      }
    }
  } catch (const PathError& e) {
    return truncate_observation(std::string("path error: ") + e.what(),
                                observation_cap, tool_name(call.tool));
  } catch (const RangeError& e) {
    return truncate_observation(std::string("range error: ") + e.what(),
                                observation_cap, tool_name(call.tool));
  }
  return schema_error("unhandled tool", observation_cap, call.tool);
}

}  // namespace repoqa::toolkit
