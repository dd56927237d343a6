#include "matforge/common.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace matforge {

const char* err_name(Err e) {
  switch (e) {
    case Err::KeyNotFound: return "KeyNotFound";
    case Err::AlreadyExists: return "AlreadyExists";
    case Err::ConstraintViolation: return "ConstraintViolation";
    case Err::CorruptSnapshot: return "CorruptSnapshot";
    case Err::UnsupportedObjective: return "UnsupportedObjective";
    case Err::NoActiveStep: return "NoActiveStep";
    case Err::LoopLimitExceeded: return "LoopLimitExceeded";
    case Err::DuplicateTool: return "DuplicateTool";
    case Err::ParseFailure: return "ParseFailure";
    case Err::UnknownLattice: return "UnknownLattice";
    case Err::MissingParameter: return "MissingParameter";
    case Err::UnsupportedFacet: return "UnsupportedFacet";
    case Err::CountMismatch: return "CountMismatch";
    case Err::SiteOutOfCell: return "SiteOutOfCell";
    case Err::NonPositiveScale: return "NonPositiveScale";
    case Err::ElementNotInCatalog: return "ElementNotInCatalog";
    case Err::InvariantViolation: return "InvariantViolation";
    case Err::SyntaxError: return "SyntaxError";
    case Err::MissingEnergy: return "MissingEnergy";
    case Err::SingularCell: return "SingularCell";
    case Err::NoConvergedValue: return "NoConvergedValue";
    case Err::NoInteriorMinimum: return "NoInteriorMinimum";
    case Err::FitDiverged: return "FitDiverged";
    case Err::NonCubicReference: return "NonCubicReference";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::NoFeasiblePartition: return "NoFeasiblePartition";
    case Err::MissingSuggestion: return "MissingSuggestion";
    case Err::UnknownJobId: return "UnknownJobId";
    case Err::JobNotFinished: return "JobNotFinished";
    case Err::ClassMismatch: return "ClassMismatch";
    case Err::FixtureNotFound: return "FixtureNotFound";
    case Err::IoError: return "IoError";
  }
  return "Error";
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

long nudged_ceil(double x) { return static_cast<long>(std::ceil(x - 1e-9)); }

uint64_t fnv1a64(std::string_view bytes) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string> split_ws(std::string_view line) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Err::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Err::IoError, "cannot write " + path);
  out << content;
  if (!out) fail(Err::IoError, "short write to " + path);
}

}  // namespace matforge
