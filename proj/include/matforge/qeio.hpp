#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "matforge/structure.hpp"

namespace matforge::qeio {

using structure::Mat3;
using structure::StructureModel;

// Flat extras value: the lenient side door for fields the writer does not
// model first-class (doctor additions, attempt markers, ...).
using ExtraValue = std::variant<bool, long, double, std::string>;
using Extras = std::map<std::string, ExtraValue>;

std::string extra_to_token(const ExtraValue& v);

struct CalcSpec {
  std::string calculation = "scf";  // scf | relax | ensemble
  std::string restart_mode = "from_scratch";
  std::string prefix = "calc";
  std::string disk_io = "low";
  int ibrav = 0;
  int nat = 0;
  int ntyp = 0;
  double ecutwfc = 60.0;                 // Ry
  std::optional<double> ecutrho;         // Ry; effective default is 8 * ecutwfc
  std::string occupations = "smearing";
  std::string smearing = "methfessel-paxton";
  double degauss = 0.02;                 // Ry
  double conv_thr = 1.0e-6;              // Ry
  int electron_maxstep = 200;
  double mixing_beta = 0.7;
  std::string mixing_mode = "plain";     // plain | local-TF
  std::string diagonalization = "david";
  std::string startingwfc = "atomic";
  double kspacing = 0.1;                 // 1/Angstrom
  std::string input_dft = "PBE";         // LDA | PBE | BEEF-vdW
  std::map<std::string, std::string> pseudopotentials;  // element -> filename
  Extras extras;

  double effective_ecutrho() const { return ecutrho ? *ecutrho : 8.0 * ecutwfc; }
  bool operator==(const CalcSpec&) const = default;
};

void validate(const CalcSpec& spec);

struct OutputSummary {
  double total_energy = 0.0;  // Ry
  bool converged = false;
  int n_scf = 0;
  std::vector<double> accuracy_series;       // Ry, one per scf iteration
  std::optional<std::vector<double>> ensemble_energies;  // Ry
  double wall_seconds = 0.0;
};

struct PseudoEntry {
  std::string element;
  double mass = 0.0;
  std::string filename;
};

class PseudoCatalog {
public:
  static PseudoCatalog parse(const std::string& text);
  static PseudoCatalog load(const std::string& path);

  const PseudoEntry& find(const std::string& element) const;
  bool contains(const std::string& element) const { return entries_.count(element) > 0; }
  size_t size() const { return entries_.size(); }

private:
  std::map<std::string, PseudoEntry> entries_;
};

std::string find_pseudopotential(const std::string& element, const PseudoCatalog& catalog);

struct WriteResult {
  std::string path;
  std::vector<std::string> warnings;
};

// Deterministic field ordering, booleans unquoted, shortest round-trip
// numbers; equal inputs always produce byte-identical files.
std::string render_input(const CalcSpec& spec, const StructureModel& s,
                         std::vector<std::string>* warnings = nullptr);
WriteResult write_input(const CalcSpec& spec, const StructureModel& s, const std::string& path);

enum class ParseMode { Lenient, Strict };

std::pair<CalcSpec, StructureModel> parse_input_text(const std::string& text,
                                                     ParseMode mode = ParseMode::Lenient);
std::pair<CalcSpec, StructureModel> parse_input(const std::string& path,
                                                ParseMode mode = ParseMode::Lenient);

OutputSummary parse_output_text(const std::string& text);
OutputSummary parse_output(const std::string& path);

// n_i = max(1, ceil(|b_i| / kspacing)) with the 2*pi factor included in the
// reciprocal vectors.
std::array<int, 3> kgrid(const Mat3& cell, double kspacing);

}  // namespace matforge::qeio
