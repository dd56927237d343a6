#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matforge/canvas.hpp"
#include "matforge/hpcsim.hpp"
#include "matforge/qeio.hpp"
#include "matforge/surrogate.hpp"

namespace matforge::agents {

using Json = nlohmann::json;

enum class ParamType { String, Number, Integer, Boolean, List, Object };

struct ParamSpec {
  ParamType type = ParamType::String;
  bool required = true;
  Json default_value;  // used when !required and argument absent
  std::string doc;
};

struct ToolSpec {
  std::string name;
  std::string doc;
  std::map<std::string, ParamSpec> params;  // closed schema
  std::string result_doc;
};

// Shared services a tool may touch. The registry owns nothing; the engine
// wires one context per workflow.
struct ToolContext {
  canvas::Canvas* canvas = nullptr;
  std::string workdir;
  const qeio::PseudoCatalog* pseudos = nullptr;
  const surrogate::FixtureLibrary* fixtures = nullptr;
  hpc::ClusterSpec cluster;
  hpc::ClusterSim* sim = nullptr;
  uint64_t seed = 42;
  double threshold_mev = 1.0;
  double eos_step = 0.025;
  size_t ensemble_members = 2000;
  int transcript_counter = 0;

  std::string path(const std::string& filename) const { return workdir + "/" + filename; }
};

using ToolFn = std::function<Json(const Json& args, ToolContext&)>;

class ToolRegistry {
public:
  void register_tool(ToolSpec spec, ToolFn impl);
  bool contains(const std::string& name) const { return tools_.count(name) > 0; }
  const ToolSpec& spec(const std::string& name) const;
  std::vector<std::string> names() const;
  size_t size() const { return tools_.size(); }

  // Validates args against the closed schema, fills defaults and invokes the
  // implementation. Schema failures throw before the implementation runs.
  Json invoke(const std::string& name, Json args, ToolContext& ctx) const;

  static std::optional<std::string> check_args(const ToolSpec& spec, Json& args);

private:
  struct Entry {
    ToolSpec spec;
    ToolFn impl;
  };
  std::map<std::string, Entry> tools_;
};

struct AgentConfig {
  std::string name;
  std::string role;
  std::string objective;
  std::string instructions;
  std::string requirements;
  std::vector<std::string> tool_allowlist;
  int max_steps = 40;
};

struct AgentReport {
  enum class Status { Ok, Failed } status = Status::Ok;
  std::string summary;
  std::vector<std::string> artifacts;  // canvas keys / file paths produced

  static AgentReport ok(std::string summary, std::vector<std::string> artifacts = {});
  static AgentReport failed(std::string reason, std::vector<std::string> artifacts = {});
};

struct Action {
  // Either a tool call or a final answer.
  std::string thought;
  std::string tool;  // empty for final answer
  Json args;
  std::optional<AgentReport> final;

  static Action call(std::string thought, std::string tool, Json args);
  static Action finish(std::string thought, AgentReport report);
};

struct Exchange {
  Action action;
  Json observation;   // tool result or error text
  bool error = false;
};

// Deterministic stand-in for the language model behind a worker agent: sees
// the task and the exchange history, returns the next action. An external
// decision backend can be slotted in through the same interface.
class AgentPolicy {
public:
  virtual ~AgentPolicy() = default;
  virtual Action decide(const std::string& task, const std::vector<Exchange>& history,
                        ToolContext& ctx) = 0;
};

// Runs the Thought -> Action loop: the first action of every run is a canvas
// inspection, every call is schema-checked before execution, invalid calls
// come back as error observations, and the loop ends on a final answer or
// after max_steps. A transcript goes to <workdir>/logs/<agent>_run<k>.log.
AgentReport run_agent(const AgentConfig& config, const std::string& task,
                      const ToolRegistry& registry, AgentPolicy& policy, ToolContext& ctx);

// --- convergence doctor -----------------------------------------------------

struct Suggestion {
  std::string parameter;
  std::string action;  // set | add | increase-to
  qeio::ExtraValue value;
  std::string reason;
};

// Rule engine behind the convergence agent. The escalation level comes from
// the input's "attempt" extras marker (absent means level 1); each rule fires
// only when it would actually change the document.
std::vector<Suggestion> doctor_suggest(const std::string& input_text,
                                       const std::string& output_text,
                                       const std::string& question);

// Full rule catalog, including entries that are never applied automatically
// (inert; returned only by this query).
struct DoctorRule {
  std::string parameter;
  int level = 0;  // 0 marks inert catalog entries
  std::string note;
};
const std::vector<DoctorRule>& doctor_catalog();

// Applies suggestions with set semantics and stamps the attempt marker for
// the next escalation round.
qeio::CalcSpec apply_suggestions(const qeio::CalcSpec& spec,
                                 const std::vector<Suggestion>& suggestions);

int attempt_of(const qeio::CalcSpec& spec);

}  // namespace matforge::agents
