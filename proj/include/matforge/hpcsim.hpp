#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "matforge/common.hpp"

namespace matforge::hpc {

struct Partition {
  std::string name;
  int node_count = 1;
  int cores_per_node = 1;
  int max_walltime_minutes = 60;
};

struct ClusterSpec {
  std::vector<Partition> partitions;

  static ClusterSpec parse(const std::string& text);
  static ClusterSpec load(const std::string& path);
  const Partition& partition(const std::string& name) const;
};

struct ResourceSuggestion {
  std::string input;  // input filename (basename)
  std::string partition;
  int nnodes = 1;
  int ntasks = 1;
  int runtime_minutes = 10;
  std::string script;

  std::string render() const;
  static ResourceSuggestion parse(const std::string& text);
};

// Policy rules: ntasks equals the input's atom count; nnodes is the minimal
// node count holding that many cores; the partition wasting the fewest cores
// wins, ties broken by name; the runtime request is three times the duration
// model's worst-case estimate rounded up to 10 minutes.
ResourceSuggestion plan_resources(const std::string& input_filename, int nat,
                                  int electron_maxstep, const ClusterSpec& cluster,
                                  double duration_c0 = 30.0, double duration_c1 = 2.0);

// Parses the input file for its atom count, plans, and persists the
// suggestion as "<input stem>.res" next to the input.
ResourceSuggestion suggest_resources(const std::string& input_path, const ClusterSpec& cluster,
                                     double duration_c0 = 30.0, double duration_c1 = 2.0);

std::string resource_path_for(const std::string& input_path);

enum class JobState { Pending, Running, Done, Failed };

const char* job_state_name(JobState s);

struct JobRecord {
  uint64_t id = 0;
  std::string input_path;
  std::string output_path;
  JobState state = JobState::Pending;
  std::string partition;
  int nnodes = 1;
  int ntasks = 1;
  double submit_time = 0.0;
  double start_time = 0.0;
  double finish_time = 0.0;
};

// Backend seam: given an input path and its task count, run the calculation,
// write the output file, and report (converged, wall_seconds). The surrogate
// implements this; a real-scheduler adapter would too.
struct BackendResult {
  bool converged = false;
  double wall_seconds = 0.0;
};
using BackendFn = std::function<BackendResult(const std::string& input_path, int ntasks)>;

// Deterministic discrete-event simulation of a partitioned cluster with
// strict FIFO scheduling per partition (no backfill, no preemption).
class ClusterSim {
public:
  ClusterSim(ClusterSpec spec, BackendFn backend, uint64_t seed = 0);

  std::vector<uint64_t> submit(const std::vector<std::string>& input_paths,
                               const std::vector<ResourceSuggestion>& suggestions);
  // Convenience: loads each input's persisted .res suggestion.
  std::vector<uint64_t> submit(const std::vector<std::string>& input_paths);

  std::map<uint64_t, JobState> wait_all(const std::vector<uint64_t>& ids);

  const JobRecord& job(uint64_t id) const;
  const std::string& trace() const { return trace_; }
  double now() const { return now_; }

  // Parses each referenced job's output for its total energy (Ry).
  std::vector<std::pair<uint64_t, double>> collect_energies(const std::vector<uint64_t>& ids) const;

private:
  struct PartitionState {
    Partition spec;
    int free_nodes = 0;
    std::deque<uint64_t> queue;
  };

  void schedule(PartitionState& ps);
  void run_until_idle();
  void emit(const std::string& event, const JobRecord& job);

  ClusterSpec spec_;
  BackendFn backend_;
  uint64_t seed_;
  std::map<std::string, PartitionState> parts_;
  std::map<uint64_t, JobRecord> jobs_;
  std::map<uint64_t, JobState> outcome_;
  // (finish_time, sequence) orders the event queue deterministically
  std::map<std::pair<double, uint64_t>, uint64_t> running_;
  uint64_t next_id_ = 1;
  double now_ = 0.0;
  std::string trace_;
};

}  // namespace matforge::hpc
