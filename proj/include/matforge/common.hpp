#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace matforge {

// Unit rule: every energy inside the engine is Ry; eV appears only in reports.
inline constexpr double kRyInEv = 13.605693;
inline constexpr double kGpaPerEvA3 = 160.2176634;
inline constexpr double kGpaPerRyA3 = kRyInEv * kGpaPerEvA3;
inline constexpr double kMevPerAtomInRy = 0.001 / kRyInEv;
inline constexpr double kPi = 3.14159265358979323846;

enum class Err {
  // canvas
  KeyNotFound,
  AlreadyExists,
  ConstraintViolation,
  CorruptSnapshot,
  // planner
  UnsupportedObjective,
  NoActiveStep,
  LoopLimitExceeded,
  // agentcore
  DuplicateTool,
  ParseFailure,
  // structlab
  UnknownLattice,
  MissingParameter,
  UnsupportedFacet,
  CountMismatch,
  SiteOutOfCell,
  NonPositiveScale,
  // qeio
  ElementNotInCatalog,
  InvariantViolation,
  SyntaxError,
  MissingEnergy,
  SingularCell,
  // numerics
  NoConvergedValue,
  NoInteriorMinimum,
  FitDiverged,
  NonCubicReference,
  LengthMismatch,
  // hpcsim
  NoFeasiblePartition,
  MissingSuggestion,
  UnknownJobId,
  JobNotFinished,
  // surrogate
  ClassMismatch,
  FixtureNotFound,
  // generic
  IoError,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
  Error(Err code, const std::string& message)
      : std::runtime_error(std::string(err_name(code)) + ": " + message), code_(code) {}
  Err code() const { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& message) {
  throw Error(code, message);
}

// Shortest round-trip decimal form; the backbone of byte-deterministic writers.
std::string format_double(double v);
std::string format_fixed(double v, int digits);

// Ceil with a small absolute nudge so products intended as exact integers
// (e.g. 180 * (0.02/0.03) * (0.7/0.3) * 1.3) do not round up spuriously.
long nudged_ceil(double x);

uint64_t fnv1a64(std::string_view bytes);

std::vector<std::string> split_ws(std::string_view line);
std::string trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
std::string lower(std::string_view s);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace matforge
