#include "matforge/hpcsim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "matforge/qeio.hpp"
#include "matforge/surrogate.hpp"

namespace matforge::hpc {

namespace fs = std::filesystem;

ClusterSpec ClusterSpec::parse(const std::string& text) {
  ClusterSpec spec;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != "mfcluster 1")
        fail(Err::SyntaxError, "cluster config line " + std::to_string(lineno) + ": bad header");
      header = true;
      continue;
    }
    auto f = split_ws(t);
    if (f.size() != 5 || f[0] != "partition")
      fail(Err::SyntaxError, "cluster config line " + std::to_string(lineno) + ": malformed");
    Partition p;
    p.name = f[1];
    for (size_t k = 2; k < 5; ++k) {
      size_t eq = f[k].find('=');
      if (eq == std::string::npos)
        fail(Err::SyntaxError, "cluster config line " + std::to_string(lineno) + ": want key=value");
      std::string key = f[k].substr(0, eq);
      int value = std::stoi(f[k].substr(eq + 1));
      if (key == "nodes") p.node_count = value;
      else if (key == "cores_per_node") p.cores_per_node = value;
      else if (key == "max_walltime_minutes") p.max_walltime_minutes = value;
      else fail(Err::SyntaxError, "cluster config: unknown key '" + key + "'");
    }
    if (p.node_count < 1 || p.cores_per_node < 1)
      fail(Err::InvariantViolation, "partition '" + p.name + "' needs positive capacity");
    for (const auto& q : spec.partitions)
      if (q.name == p.name)
        fail(Err::InvariantViolation, "duplicate partition '" + p.name + "'");
    spec.partitions.push_back(p);
  }
  if (spec.partitions.empty()) fail(Err::SyntaxError, "cluster config has no partitions");
  return spec;
}

ClusterSpec ClusterSpec::load(const std::string& path) { return parse(read_text_file(path)); }

const Partition& ClusterSpec::partition(const std::string& name) const {
  for (const auto& p : partitions)
    if (p.name == name) return p;
  fail(Err::InvariantViolation, "no partition '" + name + "'");
}

std::string ResourceSuggestion::render() const {
  std::ostringstream out;
  out << "mfres 1\n";
  out << "input " << input << "\n";
  out << "partition " << partition << "\n";
  out << "nnodes " << nnodes << "\n";
  out << "ntasks " << ntasks << "\n";
  out << "runtime_minutes " << runtime_minutes << "\n";
  out << "script <<EOF\n" << script << "\nEOF\n";
  return out.str();
}

ResourceSuggestion ResourceSuggestion::parse(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  ResourceSuggestion r;
  if (!std::getline(in, line) || trim(line) != "mfres 1")
    fail(Err::SyntaxError, "bad resource file header");
  bool in_script = false;
  std::string script;
  while (std::getline(in, line)) {
    if (in_script) {
      if (trim(line) == "EOF") {
        in_script = false;
        continue;
      }
      if (!script.empty()) script += "\n";
      script += line;
      continue;
    }
    std::string t = trim(line);
    if (t.empty()) continue;
    auto f = split_ws(t);
    if (f[0] == "input" && f.size() == 2) r.input = f[1];
    else if (f[0] == "partition" && f.size() == 2) r.partition = f[1];
    else if (f[0] == "nnodes" && f.size() == 2) r.nnodes = std::stoi(f[1]);
    else if (f[0] == "ntasks" && f.size() == 2) r.ntasks = std::stoi(f[1]);
    else if (f[0] == "runtime_minutes" && f.size() == 2) r.runtime_minutes = std::stoi(f[1]);
    else if (f[0] == "script") in_script = true;
    else fail(Err::SyntaxError, "resource file: unrecognized line '" + t + "'");
  }
  return r;
}

ResourceSuggestion plan_resources(const std::string& input_filename, int nat,
                                  int electron_maxstep, const ClusterSpec& cluster,
                                  double duration_c0, double duration_c1) {
  if (nat < 1) fail(Err::InvariantViolation, "atom count must be positive");
  // Worst-case duration estimate assumes the full scf budget is spent.
  const double estimate_s =
      duration_c0 + duration_c1 * static_cast<double>(nat) * electron_maxstep / nat;
  const int runtime = static_cast<int>(nudged_ceil(3.0 * estimate_s / 600.0)) * 10;

  const Partition* best = nullptr;
  int best_waste = 0;
  int best_nnodes = 0;
  for (const auto& p : cluster.partitions) {
    const int nnodes = static_cast<int>(nudged_ceil(static_cast<double>(nat) / p.cores_per_node));
    if (nnodes > p.node_count) continue;
    if (runtime > p.max_walltime_minutes) continue;
    const int waste = nnodes * p.cores_per_node - nat;
    if (!best || waste < best_waste || (waste == best_waste && p.name < best->name)) {
      best = &p;
      best_waste = waste;
      best_nnodes = nnodes;
    }
  }
  if (!best)
    fail(Err::NoFeasiblePartition, "no partition can host " + std::to_string(nat) +
                                       " tasks within " + std::to_string(runtime) + " minutes");

  ResourceSuggestion r;
  r.input = input_filename;
  r.partition = best->name;
  r.nnodes = best_nnodes;
  r.ntasks = nat;
  r.runtime_minutes = runtime;
  std::string stem = input_filename;
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".pwi") stem.resize(stem.size() - 4);
  r.script = "mpirun -np " + std::to_string(nat) + " pw.x -in " + input_filename + " > " + stem +
             ".pwo";
  return r;
}

std::string resource_path_for(const std::string& input_path) {
  std::string out = input_path;
  if (out.size() > 4 && out.substr(out.size() - 4) == ".pwi") out.resize(out.size() - 4);
  return out + ".res";
}

ResourceSuggestion suggest_resources(const std::string& input_path, const ClusterSpec& cluster,
                                     double duration_c0, double duration_c1) {
  auto [spec, s] = qeio::parse_input(input_path);
  ResourceSuggestion r =
      plan_resources(fs::path(input_path).filename().string(), static_cast<int>(s.natoms()),
                     spec.electron_maxstep, cluster, duration_c0, duration_c1);
  write_text_file(resource_path_for(input_path), r.render());
  return r;
}

const char* job_state_name(JobState s) {
  switch (s) {
    case JobState::Pending: return "pending";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "pending";
}

ClusterSim::ClusterSim(ClusterSpec spec, BackendFn backend, uint64_t seed)
    : spec_(std::move(spec)), backend_(std::move(backend)), seed_(seed) {
  for (const auto& p : spec_.partitions)
    parts_.emplace(p.name, PartitionState{p, p.node_count, {}});
}

void ClusterSim::emit(const std::string& event, const JobRecord& job) {
  trace_ += format_fixed(now_, 6) + " " + event + " " + std::to_string(job.id) + " " +
            job.partition + "\n";
}

std::vector<uint64_t> ClusterSim::submit(const std::vector<std::string>& input_paths,
                                         const std::vector<ResourceSuggestion>& suggestions) {
  if (input_paths.size() != suggestions.size())
    fail(Err::LengthMismatch, "one suggestion per input required");
  std::vector<uint64_t> ids;
  ids.reserve(input_paths.size());
  for (size_t i = 0; i < input_paths.size(); ++i) {
    const auto& sug = suggestions[i];
    const Partition& p = spec_.partition(sug.partition);
    if (sug.ntasks > p.cores_per_node * p.node_count || sug.nnodes > p.node_count)
      fail(Err::NoFeasiblePartition,
           "suggestion for " + input_paths[i] + " exceeds partition capacity");
    JobRecord j;
    j.id = next_id_++;
    j.input_path = input_paths[i];
    j.output_path = surrogate::Backend::output_path_for(input_paths[i]);
    j.partition = sug.partition;
    j.nnodes = sug.nnodes;
    j.ntasks = sug.ntasks;
    j.submit_time = now_;
    j.state = JobState::Pending;
    emit("submit", j);
    parts_.at(sug.partition).queue.push_back(j.id);
    jobs_.emplace(j.id, std::move(j));
    ids.push_back(next_id_ - 1);
  }
  for (auto& [_, ps] : parts_) schedule(ps);
  return ids;
}

std::vector<uint64_t> ClusterSim::submit(const std::vector<std::string>& input_paths) {
  std::vector<ResourceSuggestion> suggestions;
  suggestions.reserve(input_paths.size());
  for (const auto& path : input_paths) {
    const std::string rpath = resource_path_for(path);
    if (!fs::exists(rpath))
      fail(Err::MissingSuggestion, "no persisted resource suggestion for " + path);
    suggestions.push_back(ResourceSuggestion::parse(read_text_file(rpath)));
  }
  return submit(input_paths, suggestions);
}

void ClusterSim::schedule(PartitionState& ps) {
  // Strict FIFO with head-of-line blocking keeps start order equal to
  // submit order within a partition.
  while (!ps.queue.empty()) {
    uint64_t id = ps.queue.front();
    JobRecord& j = jobs_.at(id);
    if (j.nnodes > ps.free_nodes) break;
    ps.queue.pop_front();
    ps.free_nodes -= j.nnodes;
    j.state = JobState::Running;
    j.start_time = now_;
    emit("start", j);
    // Synchronous surrogate call at start-event processing decides the
    // simulated duration and terminal state.
    BackendResult res = backend_(j.input_path, j.ntasks);
    j.finish_time = now_ + res.wall_seconds;
    outcome_[id] = res.converged ? JobState::Done : JobState::Failed;
    running_.emplace(std::make_pair(j.finish_time, id), id);
  }
}

void ClusterSim::run_until_idle() {
  while (!running_.empty()) {
    auto it = running_.begin();
    uint64_t id = it->second;
    running_.erase(it);
    JobRecord& j = jobs_.at(id);
    now_ = j.finish_time;
    j.state = outcome_.at(id);
    emit(j.state == JobState::Done ? "finish" : "fail", j);
    PartitionState& ps = parts_.at(j.partition);
    ps.free_nodes += j.nnodes;
    schedule(ps);
  }
}

std::map<uint64_t, JobState> ClusterSim::wait_all(const std::vector<uint64_t>& ids) {
  for (uint64_t id : ids)
    if (!jobs_.count(id)) fail(Err::UnknownJobId, "job " + std::to_string(id) + " was never submitted");
  run_until_idle();
  std::map<uint64_t, JobState> out;
  for (uint64_t id : ids) out[id] = jobs_.at(id).state;
  return out;
}

const JobRecord& ClusterSim::job(uint64_t id) const {
  auto it = jobs_.find(id);
  if (it == jobs_.end()) fail(Err::UnknownJobId, "job " + std::to_string(id) + " was never submitted");
  return it->second;
}

std::vector<std::pair<uint64_t, double>> ClusterSim::collect_energies(
    const std::vector<uint64_t>& ids) const {
  std::vector<std::pair<uint64_t, double>> out;
  out.reserve(ids.size());
  for (uint64_t id : ids) {
    const JobRecord& j = job(id);
    if (j.state != JobState::Done)
      fail(Err::JobNotFinished, "job " + std::to_string(id) + " is " + job_state_name(j.state) +
                                    ", not done");
    out.emplace_back(id, qeio::parse_output(j.output_path).total_energy);
  }
  return out;
}

}  // namespace matforge::hpc
