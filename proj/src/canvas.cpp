#include "matforge/canvas.hpp"

#include <fstream>
#include <regex>
#include <sstream>

namespace matforge::canvas {

namespace {
constexpr const char* kHeader = "mfcanvas 1";
constexpr size_t kSummaryLimit = 200;

std::string clip_summary(const std::string& s) {
  if (s.size() <= kSummaryLimit) return s;
  return s.substr(0, kSummaryLimit);
}

std::string value_summary(const Value& v) {
  std::string s = v.dump();
  return clip_summary(s);
}
}  // namespace

Value path_ref(const std::string& path) { return Value{{"$path", path}}; }

bool is_path_ref(const Value& v) {
  return v.is_object() && v.size() == 1 && v.contains("$path") && v["$path"].is_string();
}

std::string path_of(const Value& v) {
  if (!is_path_ref(v)) fail(Err::ConstraintViolation, "value is not a path reference");
  return v["$path"].get<std::string>();
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Normal: return "normal";
    case Mode::ReadOnly: return "read-only";
    case Mode::Protected: return "protected";
    case Mode::FormatRestricted: return "format-restricted";
  }
  return "normal";
}

Mode mode_from_name(const std::string& name) {
  if (name == "normal") return Mode::Normal;
  if (name == "read-only") return Mode::ReadOnly;
  if (name == "protected") return Mode::Protected;
  if (name == "format-restricted") return Mode::FormatRestricted;
  fail(Err::CorruptSnapshot, "unknown mode '" + name + "'");
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Write: return "write";
    case Op::Overwrite: return "overwrite";
    case Op::Rejected: return "rejected";
  }
  return "write";
}

static Op op_from_name(const std::string& name) {
  if (name == "write") return Op::Write;
  if (name == "overwrite") return Op::Overwrite;
  if (name == "rejected") return Op::Rejected;
  fail(Err::CorruptSnapshot, "unknown op '" + name + "'");
}

Canvas::Canvas() : Canvas(ClockFn{}) {}

Canvas::Canvas(ClockFn clock) : clock_(std::move(clock)) {
  install_builtin_schemas(*this);
}

std::vector<std::string> Canvas::inspect() const {
  std::vector<std::string> keys;
  keys.reserve(entries_.size());
  for (const auto& [k, _] : entries_) keys.push_back(k);
  return keys;  // map iteration is already lexicographic
}

bool Canvas::contains(const std::string& key) const { return entries_.count(key) > 0; }

const Value& Canvas::read(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    fail(Err::KeyNotFound,
         "no entry '" + key + "'; run inspect first to list the available keys");
  return it->second.value;
}

const Entry& Canvas::entry(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end())
    fail(Err::KeyNotFound,
         "no entry '" + key + "'; run inspect first to list the available keys");
  return it->second;
}

void Canvas::register_schema(const std::string& id, SchemaFn fn) {
  schemas_[id] = std::move(fn);
}

void Canvas::check_schema(const std::string& schema_id, const Value& v) const {
  auto it = schemas_.find(schema_id);
  if (it == schemas_.end())
    fail(Err::ConstraintViolation, "unregistered schema '" + schema_id + "'");
  std::string why;
  if (!it->second(v, why))
    fail(Err::ConstraintViolation,
         "format-restricted: value rejected by schema '" + schema_id + "': " + why);
}

std::string Canvas::creator_of(const Entry& e) const {
  for (const auto& rec : log_)
    if (rec.seq == e.created_seq) return rec.actor;
  return {};
}

void Canvas::append_record(const std::string& actor, Op op, const std::string& key,
                           const std::string& summary) {
  double t = clock_ ? clock_() : tick_++;
  log_.push_back(ChangeRecord{next_seq_++, t, actor, op, key, clip_summary(summary)});
}

void Canvas::write(const std::string& actor, const std::string& key, const Value& value,
                   const WriteOptions& opts) {
  auto reject = [&](Err code, const std::string& msg) {
    append_record(actor, Op::Rejected, key, msg);
    fail(code, msg);
  };

  if (key.empty()) reject(Err::ConstraintViolation, "canvas keys must be non-empty");

  auto it = entries_.find(key);
  if (it == entries_.end()) {
    if (opts.mode == Mode::FormatRestricted) {
      if (opts.schema_id.empty())
        reject(Err::ConstraintViolation, "format-restricted entry needs a schema id");
      try {
        check_schema(opts.schema_id, value);
      } catch (const Error& e) {
        reject(Err::ConstraintViolation, e.what());
      }
    }
    Entry e;
    e.key = key;
    e.value = value;
    e.mode = opts.mode;
    e.schema_id = opts.mode == Mode::FormatRestricted ? opts.schema_id : std::string{};
    e.created_seq = next_seq_;
    e.updated_seq = next_seq_;
    append_record(actor, Op::Write, key, value_summary(value));
    entries_.emplace(key, std::move(e));
    return;
  }

  Entry& e = it->second;
  if (!opts.overwrite)
    reject(Err::AlreadyExists,
           "key '" + key + "' already exists; pass overwrite=true to replace it");
  switch (e.mode) {
    case Mode::ReadOnly:
      reject(Err::ConstraintViolation, "key '" + key + "' is read-only");
      break;
    case Mode::Protected: {
      std::string creator = creator_of(e);
      if (actor != creator)
        reject(Err::ConstraintViolation, "key '" + key + "' is protected; only its creator '" +
                                             creator + "' may overwrite it");
      break;
    }
    case Mode::FormatRestricted:
      try {
        check_schema(e.schema_id, value);
      } catch (const Error& err) {
        reject(Err::ConstraintViolation, err.what());
      }
      break;
    case Mode::Normal:
      break;
  }
  e.value = value;
  e.updated_seq = next_seq_;
  append_record(actor, Op::Overwrite, key, value_summary(value));
}

void Canvas::snapshot(const std::string& path) const {
  std::ostringstream out;
  out << kHeader << "\n";
  for (const auto& [_, e] : entries_) {
    Value rec{{"key", e.key},
              {"mode", mode_name(e.mode)},
              {"created", e.created_seq},
              {"updated", e.updated_seq},
              {"value", e.value}};
    if (e.mode == Mode::FormatRestricted) rec["schema"] = e.schema_id;
    out << "entry " << rec.dump() << "\n";
  }
  for (const auto& r : log_) {
    Value rec{{"seq", r.seq},     {"time", r.time}, {"actor", r.actor},
              {"op", op_name(r.op)}, {"key", r.key},   {"summary", r.summary}};
    out << "log " << rec.dump() << "\n";
  }
  write_text_file(path, out.str());
}

Canvas Canvas::restore(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open snapshot " + path);
  Canvas c;
  std::string line;
  size_t lineno = 0;
  auto corrupt = [&](const std::string& why) {
    fail(Err::CorruptSnapshot, "snapshot " + path + " invalid at line " +
                                   std::to_string(lineno) + ": " + why);
  };
  if (!std::getline(in, line)) {
    lineno = 1;
    corrupt("missing header");
  }
  ++lineno;
  if (trim(line) != kHeader) corrupt("bad header");
  uint64_t max_seq = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) corrupt("blank record line");
    size_t sp = line.find(' ');
    if (sp == std::string::npos) corrupt("missing record tag");
    std::string tag = line.substr(0, sp);
    Value rec = Value::parse(line.substr(sp + 1), nullptr, false);
    if (rec.is_discarded()) corrupt("malformed json payload");
    try {
      if (tag == "entry") {
        Entry e;
        e.key = rec.at("key").get<std::string>();
        e.mode = mode_from_name(rec.at("mode").get<std::string>());
        e.created_seq = rec.at("created").get<uint64_t>();
        e.updated_seq = rec.at("updated").get<uint64_t>();
        e.value = rec.at("value");
        if (e.mode == Mode::FormatRestricted) e.schema_id = rec.at("schema").get<std::string>();
        if (e.key.empty()) corrupt("empty key");
        if (!c.entries_.emplace(e.key, e).second) corrupt("duplicate key '" + e.key + "'");
      } else if (tag == "log") {
        ChangeRecord r;
        r.seq = rec.at("seq").get<uint64_t>();
        r.time = rec.at("time").get<double>();
        r.actor = rec.at("actor").get<std::string>();
        r.op = op_from_name(rec.at("op").get<std::string>());
        r.key = rec.at("key").get<std::string>();
        r.summary = rec.at("summary").get<std::string>();
        if (r.seq != c.log_.size() + 1) corrupt("log seq gap");
        c.log_.push_back(r);
        max_seq = std::max(max_seq, r.seq);
      } else {
        corrupt("unknown record tag '" + tag + "'");
      }
    } catch (const Value::exception& e) {
      corrupt(e.what());
    }
  }
  c.next_seq_ = max_seq + 1;
  c.tick_ = c.log_.empty() ? 0.0 : c.log_.back().time + 1.0;
  return c;
}

std::string Canvas::render_dump() const {
  std::ostringstream out;
  for (const auto& key : inspect()) {
    const Entry& e = entries_.at(key);
    out << key << " [" << mode_name(e.mode) << "] = " << e.value.dump() << "\n";
  }
  return out.str();
}

std::string Canvas::render_log() const {
  std::ostringstream out;
  for (const auto& r : log_) {
    out << r.seq << " t=" << format_double(r.time) << " " << r.actor << " " << op_name(r.op)
        << " " << r.key << " :: " << r.summary << "\n";
  }
  return out.str();
}

void install_builtin_schemas(Canvas& c) {
  static const std::regex filename_re("[A-Za-z0-9][A-Za-z0-9._-]*");
  c.register_schema("filename-list", [](const Value& v, std::string& why) {
    if (!v.is_array()) {
      why = "expected a list";
      return false;
    }
    for (const auto& item : v) {
      if (!item.is_string() || !std::regex_match(item.get<std::string>(), filename_re)) {
        why = "expected well-formed filenames, got " + item.dump();
        return false;
      }
    }
    return true;
  });
  c.register_schema("record", [](const Value& v, std::string& why) {
    if (v.is_object()) return true;
    why = "expected an object";
    return false;
  });
}

}  // namespace matforge::canvas
