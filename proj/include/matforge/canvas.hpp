#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "matforge/common.hpp"

namespace matforge::canvas {

using Value = nlohmann::json;

// Large artifacts never live in the canvas; they are referenced by a tagged
// workdir path value.
Value path_ref(const std::string& path);
bool is_path_ref(const Value& v);
std::string path_of(const Value& v);

enum class Mode { Normal, ReadOnly, Protected, FormatRestricted };

const char* mode_name(Mode m);
Mode mode_from_name(const std::string& name);

enum class Op { Write, Overwrite, Rejected };

const char* op_name(Op op);

struct Entry {
  std::string key;
  Value value;
  Mode mode = Mode::Normal;
  std::string schema_id;  // set iff mode == FormatRestricted
  uint64_t created_seq = 0;
  uint64_t updated_seq = 0;
};

struct ChangeRecord {
  uint64_t seq = 0;
  double time = 0.0;
  std::string actor;
  Op op = Op::Write;
  std::string key;
  std::string summary;
};

struct WriteOptions {
  bool overwrite = false;
  Mode mode = Mode::Normal;     // applied on creation only
  std::string schema_id;        // required for FormatRestricted creation
};

using SchemaFn = std::function<bool(const Value&, std::string& why)>;
using ClockFn = std::function<double()>;

// Shared information dashboard. All mutations funnel through write() and are
// serialized by the owning engine thread; readers may interleave freely
// between mutations. Every accepted or rejected mutation appends exactly one
// ChangeRecord, and seq values are dense (1, 2, 3, ...).
class Canvas {
public:
  Canvas();
  explicit Canvas(ClockFn clock);

  std::vector<std::string> inspect() const;
  const Value& read(const std::string& key) const;
  bool contains(const std::string& key) const;
  const Entry& entry(const std::string& key) const;

  // Creates the entry when absent; replaces the value only when
  // opts.overwrite is true and the entry's mode permits it. Failed attempts
  // raise and are logged with op = rejected.
  void write(const std::string& actor, const std::string& key, const Value& value,
             const WriteOptions& opts = {});

  const std::vector<ChangeRecord>& log() const { return log_; }
  size_t size() const { return entries_.size(); }

  void register_schema(const std::string& id, SchemaFn fn);

  void snapshot(const std::string& path) const;
  static Canvas restore(const std::string& path);

  std::string render_dump() const;
  std::string render_log() const;

private:
  void append_record(const std::string& actor, Op op, const std::string& key,
                     const std::string& summary);
  std::string creator_of(const Entry& e) const;
  void check_schema(const std::string& schema_id, const Value& v) const;

  std::map<std::string, Entry> entries_;
  std::vector<ChangeRecord> log_;
  std::map<std::string, SchemaFn> schemas_;
  ClockFn clock_;
  uint64_t next_seq_ = 1;
  double tick_ = 0.0;
};

// Built-in schema ids: "filename-list" (list of plain relative filenames)
// and "record" (any JSON object).
void install_builtin_schemas(Canvas& c);

}  // namespace matforge::canvas
