#include "matforge/qeio.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

namespace matforge::qeio {

namespace {

const std::map<std::string, double>& mass_table() {
  static const std::map<std::string, double> t{
      {"H", 1.008},     {"C", 12.011},    {"N", 14.007},   {"O", 15.999},
      {"Li", 6.94},     {"Na", 22.98976928}, {"K", 39.0983}, {"Rb", 85.4678},
      {"Ca", 40.078},   {"Sr", 87.62},    {"Ba", 137.327}, {"V", 50.9415},
      {"Nb", 92.90637}, {"Ta", 180.94788}, {"Mo", 95.95},  {"W", 183.84},
      {"Fe", 55.845},   {"Rh", 102.90549}, {"Ir", 192.217}, {"Ni", 58.6934},
      {"Pd", 106.42},   {"Pt", 195.084},  {"Cu", 63.546},  {"Ag", 107.8682},
      {"Au", 196.966569}, {"Al", 26.9815385}, {"Pb", 207.2}, {"Si", 28.085},
      {"Ge", 72.63},    {"Sn", 118.71}};
  return t;
}

double mass_of(const std::string& el) {
  auto it = mass_table().find(el);
  return it == mass_table().end() ? 1.0 : it->second;
}

bool is_integer_token(const std::string& t) {
  static const std::regex re(R"([+-]?\d+)");
  return std::regex_match(t, re);
}

bool is_number_token(const std::string& t) {
  static const std::regex re(R"([+-]?(\d+\.?\d*|\.\d+)([eEdD][+-]?\d+)?)");
  return std::regex_match(t, re);
}

std::string quote(const std::string& s) {
  if (s.find('\'') != std::string::npos)
    fail(Err::InvariantViolation, "string values may not contain single quotes");
  return "'" + s + "'";
}

std::string double_token(double v) {
  std::string t = format_double(v);
  if (t.find('.') == std::string::npos && t.find('e') == std::string::npos &&
      t.find("inf") == std::string::npos && t.find("nan") == std::string::npos)
    t += ".0";
  return t;
}

std::vector<std::string> element_order(const StructureModel& s) {
  std::vector<std::string> order;
  for (const auto& sym : s.symbols)
    if (std::find(order.begin(), order.end(), sym) == order.end()) order.push_back(sym);
  return order;
}

}  // namespace

std::string extra_to_token(const ExtraValue& v) {
  if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? ".true." : ".false.";
  if (std::holds_alternative<long>(v)) return std::to_string(std::get<long>(v));
  if (std::holds_alternative<double>(v)) return double_token(std::get<double>(v));
  return quote(std::get<std::string>(v));
}

static ExtraValue token_to_extra(const std::string& t) {
  if (t == ".true.") return true;
  if (t == ".false.") return false;
  if (t.size() >= 2 && t.front() == '\'' && t.back() == '\'')
    return t.substr(1, t.size() - 2);
  if (is_integer_token(t)) return static_cast<long>(std::stol(t));
  if (is_number_token(t)) return std::stod(t);
  return t;  // bare word; keep as string
}

void validate(const CalcSpec& spec) {
  auto bad = [](const std::string& why) { fail(Err::InvariantViolation, why); };
  if (spec.ecutwfc <= 0) bad("ecutwfc must be positive");
  if (spec.ecutrho && *spec.ecutrho <= 0) bad("ecutrho must be positive");
  if (spec.kspacing <= 0) bad("kspacing must be positive");
  if (spec.mixing_beta <= 0 || spec.mixing_beta > 1) bad("mixing_beta must be in (0, 1]");
  if (spec.electron_maxstep < 1) bad("electron_maxstep must be >= 1");
  if (spec.degauss < 0) bad("degauss must be non-negative");
  if (spec.conv_thr <= 0) bad("conv_thr must be positive");
  if (spec.calculation != "scf" && spec.calculation != "relax" && spec.calculation != "ensemble")
    bad("calculation must be scf, relax or ensemble");
  if (spec.restart_mode != "from_scratch" && spec.restart_mode != "restart")
    bad("restart_mode must be from_scratch or restart");
  if (spec.mixing_mode != "plain" && spec.mixing_mode != "local-TF")
    bad("mixing_mode must be plain or local-TF");
  if (spec.input_dft != "LDA" && spec.input_dft != "PBE" && spec.input_dft != "BEEF-vdW")
    bad("input_dft must be LDA, PBE or BEEF-vdW");
  if (spec.prefix.empty()) bad("prefix must be non-empty");
}

PseudoCatalog PseudoCatalog::parse(const std::string& text) {
  PseudoCatalog cat;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (lineno == 1 || starts_with(t, "mfpseudo")) {
      if (starts_with(t, "mfpseudo")) continue;
    }
    auto f = split_ws(t);
    if (f.size() != 3)
      fail(Err::SyntaxError, "catalog line " + std::to_string(lineno) + " malformed");
    cat.entries_[f[0]] = PseudoEntry{f[0], std::stod(f[1]), f[2]};
  }
  return cat;
}

PseudoCatalog PseudoCatalog::load(const std::string& path) {
  return parse(read_text_file(path));
}

const PseudoEntry& PseudoCatalog::find(const std::string& element) const {
  auto it = entries_.find(element);
  if (it == entries_.end())
    fail(Err::ElementNotInCatalog, "no pseudopotential for element '" + element + "'");
  return it->second;
}

std::string find_pseudopotential(const std::string& element, const PseudoCatalog& catalog) {
  return catalog.find(element).filename;
}

std::string render_input(const CalcSpec& spec, const StructureModel& s,
                         std::vector<std::string>* warnings) {
  validate(spec);
  structure::validate(s);
  if (spec.nat != static_cast<int>(s.natoms()))
    fail(Err::InvariantViolation, "nat (" + std::to_string(spec.nat) +
                                      ") does not match the structure's atom count (" +
                                      std::to_string(s.natoms()) + ")");
  auto order = element_order(s);
  if (spec.ntyp != static_cast<int>(order.size()))
    fail(Err::InvariantViolation, "ntyp does not match the number of distinct elements");
  for (const auto& el : order)
    if (!spec.pseudopotentials.count(el))
      fail(Err::InvariantViolation, "no pseudopotential assigned for element '" + el + "'");
  if (warnings && (spec.ecutwfc < 30.0 || spec.ecutwfc > 100.0))
    warnings->push_back("ecutwfc " + format_double(spec.ecutwfc) +
                        " Ry is outside the 30-100 Ry guidance band");

  std::ostringstream out;
  out << "&CONTROL\n";
  out << "  calculation = " << quote(spec.calculation) << "\n";
  out << "  restart_mode = " << quote(spec.restart_mode) << "\n";
  out << "  prefix = " << quote(spec.prefix) << "\n";
  out << "  disk_io = " << quote(spec.disk_io) << "\n";
  out << "/\n";
  out << "&SYSTEM\n";
  out << "  ibrav = " << spec.ibrav << "\n";
  out << "  nat = " << spec.nat << "\n";
  out << "  ntyp = " << spec.ntyp << "\n";
  out << "  ecutwfc = " << double_token(spec.ecutwfc) << "\n";
  if (spec.ecutrho) out << "  ecutrho = " << double_token(*spec.ecutrho) << "\n";
  out << "  occupations = " << quote(spec.occupations) << "\n";
  out << "  smearing = " << quote(spec.smearing) << "\n";
  out << "  degauss = " << double_token(spec.degauss) << "\n";
  out << "  input_dft = " << quote(spec.input_dft) << "\n";
  out << "  kspacing = " << double_token(spec.kspacing) << "\n";
  std::string pbc;
  for (int k = 0; k < 3; ++k) pbc += s.periodic[k] ? 'T' : 'F';
  out << "  pbc = " << quote(pbc) << "\n";
  out << "/\n";
  out << "&ELECTRONS\n";
  out << "  conv_thr = " << double_token(spec.conv_thr) << "\n";
  out << "  electron_maxstep = " << spec.electron_maxstep << "\n";
  out << "  mixing_beta = " << double_token(spec.mixing_beta) << "\n";
  out << "  mixing_mode = " << quote(spec.mixing_mode) << "\n";
  out << "  diagonalization = " << quote(spec.diagonalization) << "\n";
  out << "  startingwfc = " << quote(spec.startingwfc) << "\n";
  for (const auto& [k, v] : spec.extras) out << "  " << k << " = " << extra_to_token(v) << "\n";
  out << "/\n";
  out << "ATOMIC_SPECIES\n";
  for (const auto& el : order)
    out << el << " " << format_double(mass_of(el)) << " " << spec.pseudopotentials.at(el)
        << "\n";
  out << "ATOMIC_POSITIONS angstrom\n";
  for (size_t i = 0; i < s.natoms(); ++i) {
    const char* flags = s.fixed_indices.count(i) ? "0 0 0" : "1 1 1";
    out << s.symbols[i] << " " << format_double(s.positions[i][0]) << " "
        << format_double(s.positions[i][1]) << " " << format_double(s.positions[i][2]) << " "
        << flags << "\n";
  }
  auto grid = kgrid(s.cell, spec.kspacing);
  out << "K_POINTS automatic\n";
  out << grid[0] << " " << grid[1] << " " << grid[2] << " 0 0 0\n";
  out << "CELL_PARAMETERS angstrom\n";
  for (const auto& row : s.cell)
    out << format_double(row[0]) << " " << format_double(row[1]) << " " << format_double(row[2])
        << "\n";
  return out.str();
}

WriteResult write_input(const CalcSpec& spec, const StructureModel& s, const std::string& path) {
  WriteResult res;
  res.path = path;
  write_text_file(path, render_input(spec, s, &res.warnings));
  return res;
}

namespace {

struct Assign {
  std::string key;
  std::string token;
  size_t lineno;
};

class InputParser {
public:
  InputParser(const std::string& text, ParseMode mode) : mode_(mode) {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines_.push_back(line);
  }

  std::pair<CalcSpec, StructureModel> run() {
    parse_namelists_and_cards();
    CalcSpec spec = build_spec();
    StructureModel s = build_structure();
    if (spec.nat != static_cast<int>(s.natoms()))
      err(nat_line_, "nat does not match the number of position lines");
    spec.ntyp = static_cast<int>(species_.size());
    if (declared_ntyp_ >= 0 && declared_ntyp_ != spec.ntyp)
      err(nat_line_, "ntyp does not match ATOMIC_SPECIES");
    return {std::move(spec), std::move(s)};
  }

private:
  [[noreturn]] void err(size_t lineno, const std::string& why) {
    fail(Err::SyntaxError, "line " + std::to_string(lineno) + ": " + why);
  }

  double num(const Assign& a) {
    std::string t = a.token;
    if (!is_number_token(t)) err(a.lineno, "expected a number for " + a.key);
    return std::stod(t);
  }

  int integer(const Assign& a) {
    if (!is_integer_token(a.token)) err(a.lineno, "expected an integer for " + a.key);
    return std::stoi(a.token);
  }

  std::string str(const Assign& a) {
    const std::string& t = a.token;
    if (t.size() >= 2 && t.front() == '\'' && t.back() == '\'')
      return t.substr(1, t.size() - 2);
    err(a.lineno, "expected a quoted string for " + a.key);
  }

  void parse_namelists_and_cards() {
    size_t i = 0;
    while (i < lines_.size()) {
      std::string t = trim(lines_[i]);
      size_t lineno = i + 1;
      if (t.empty()) {
        ++i;
        continue;
      }
      if (t[0] == '&') {
        std::string name = t.substr(1);
        ++i;
        while (i < lines_.size() && trim(lines_[i]) != "/") {
          std::string body = trim(lines_[i]);
          size_t eq = body.find('=');
          if (eq == std::string::npos) err(i + 1, "expected key = value inside &" + name);
          Assign a{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), i + 1};
          if (a.key.empty() || a.token.empty()) err(i + 1, "empty key or value");
          assigns_.push_back(std::move(a));
          ++i;
        }
        if (i == lines_.size()) err(lineno, "unterminated namelist &" + name);
        ++i;
      } else if (starts_with(t, "ATOMIC_SPECIES")) {
        ++i;
        while (i < lines_.size() && !trim(lines_[i]).empty() && is_card_body(lines_[i])) {
          auto f = split_ws(lines_[i]);
          if (f.size() != 3) err(i + 1, "species line needs element, mass, filename");
          if (!is_number_token(f[1])) err(i + 1, "species mass must be numeric");
          species_.emplace_back(f[0], f[2]);
          ++i;
        }
      } else if (starts_with(t, "ATOMIC_POSITIONS")) {
        ++i;
        while (i < lines_.size() && !trim(lines_[i]).empty() && is_card_body(lines_[i])) {
          auto f = split_ws(lines_[i]);
          if (f.size() != 4 && f.size() != 7) err(i + 1, "position line malformed");
          for (int k = 1; k <= 3; ++k)
            if (!is_number_token(f[k])) err(i + 1, "position coordinate must be numeric");
          PosLine p;
          p.symbol = f[0];
          p.xyz = {std::stod(f[1]), std::stod(f[2]), std::stod(f[3])};
          p.fixed = f.size() == 7 && f[4] == "0" && f[5] == "0" && f[6] == "0";
          positions_.push_back(p);
          ++i;
        }
      } else if (starts_with(t, "K_POINTS")) {
        ++i;  // grid line is a derived view of kspacing; accept and skip
        if (i < lines_.size()) ++i;
      } else if (starts_with(t, "CELL_PARAMETERS")) {
        ++i;
        for (int r = 0; r < 3; ++r) {
          if (i >= lines_.size()) err(lineno, "cell block truncated");
          auto f = split_ws(lines_[i]);
          if (f.size() != 3) err(i + 1, "cell row needs 3 numbers");
          for (int k = 0; k < 3; ++k) {
            if (!is_number_token(f[k])) err(i + 1, "cell entry must be numeric");
            cell_[r][k] = std::stod(f[k]);
          }
          ++i;
        }
        have_cell_ = true;
      } else {
        err(lineno, "unrecognized directive '" + t + "'");
      }
    }
  }

  static bool is_card_body(const std::string& line) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '&') return false;
    static const char* cards[] = {"ATOMIC_SPECIES", "ATOMIC_POSITIONS", "K_POINTS",
                                  "CELL_PARAMETERS"};
    for (const char* c : cards)
      if (starts_with(t, c)) return false;
    return true;
  }

  CalcSpec build_spec() {
    CalcSpec spec;
    spec.extras.clear();
    for (const auto& a : assigns_) {
      const std::string& k = a.key;
      if (k == "calculation") spec.calculation = str(a);
      else if (k == "restart_mode") spec.restart_mode = str(a);
      else if (k == "prefix") spec.prefix = str(a);
      else if (k == "disk_io") spec.disk_io = str(a);
      else if (k == "ibrav") spec.ibrav = integer(a);
      else if (k == "nat") { spec.nat = integer(a); nat_line_ = a.lineno; }
      else if (k == "ntyp") declared_ntyp_ = integer(a);
      else if (k == "ecutwfc") spec.ecutwfc = num(a);
      else if (k == "ecutrho") spec.ecutrho = num(a);
      else if (k == "occupations") spec.occupations = str(a);
      else if (k == "smearing") spec.smearing = str(a);
      else if (k == "degauss") spec.degauss = num(a);
      else if (k == "input_dft") spec.input_dft = str(a);
      else if (k == "kspacing") spec.kspacing = num(a);
      else if (k == "pbc") pbc_ = str(a);
      else if (k == "conv_thr") spec.conv_thr = num(a);
      else if (k == "electron_maxstep") spec.electron_maxstep = integer(a);
      else if (k == "mixing_beta") spec.mixing_beta = num(a);
      else if (k == "mixing_mode") spec.mixing_mode = str(a);
      else if (k == "diagonalization") spec.diagonalization = str(a);
      else if (k == "startingwfc") spec.startingwfc = str(a);
      else if (mode_ == ParseMode::Strict)
        err(a.lineno, "unknown field '" + k + "' (strict mode)");
      else
        spec.extras[k] = token_to_extra(a.token);
    }
    for (const auto& [el, file] : species_) spec.pseudopotentials[el] = file;
    validate(spec);
    return spec;
  }

  StructureModel build_structure() {
    if (!have_cell_) fail(Err::SyntaxError, "missing CELL_PARAMETERS block");
    StructureModel s;
    s.cell = cell_;
    for (size_t i = 0; i < positions_.size(); ++i) {
      s.symbols.push_back(positions_[i].symbol);
      s.positions.push_back(positions_[i].xyz);
      if (positions_[i].fixed) s.fixed_indices.insert(i);
    }
    for (int k = 0; k < 3; ++k) s.periodic[k] = k < static_cast<int>(pbc_.size()) && pbc_[k] == 'T';
    structure::validate(s);
    return s;
  }

  struct PosLine {
    std::string symbol;
    structure::Vec3 xyz;
    bool fixed = false;
  };

  ParseMode mode_;
  std::vector<std::string> lines_;
  std::vector<Assign> assigns_;
  std::vector<std::pair<std::string, std::string>> species_;
  std::vector<PosLine> positions_;
  Mat3 cell_{};
  bool have_cell_ = false;
  std::string pbc_ = "TTT";
  int declared_ntyp_ = -1;
  size_t nat_line_ = 0;
};

}  // namespace

std::pair<CalcSpec, StructureModel> parse_input_text(const std::string& text, ParseMode mode) {
  return InputParser(text, mode).run();
}

std::pair<CalcSpec, StructureModel> parse_input(const std::string& path, ParseMode mode) {
  return parse_input_text(read_text_file(path), mode);
}

OutputSummary parse_output_text(const std::string& text) {
  OutputSummary out;
  std::istringstream in(text);
  std::string line;
  bool have_energy = false;
  bool marker = false;
  size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (lineno == 1) {
      if (t != "mfout 1") fail(Err::SyntaxError, "bad output header");
      header = true;
      continue;
    }
    if (starts_with(t, "iter ")) {
      auto f = split_ws(t);
      if (f.size() != 4 || f[2] != "accuracy")
        fail(Err::SyntaxError, "line " + std::to_string(lineno) + ": bad iter line");
      out.accuracy_series.push_back(std::stod(f[3]));
    } else if (t == "convergence NOT achieved") {
      marker = true;
    } else if (starts_with(t, "! total energy")) {
      size_t eq = t.find('=');
      if (eq == std::string::npos)
        fail(Err::SyntaxError, "line " + std::to_string(lineno) + ": bad energy line");
      auto f = split_ws(t.substr(eq + 1));
      if (f.empty()) fail(Err::SyntaxError, "missing energy value");
      out.total_energy = std::stod(f[0]);
      have_energy = true;
    } else if (starts_with(t, "ENSEMBLE")) {
      auto f = split_ws(t);
      if (f.size() != 2) fail(Err::SyntaxError, "bad ENSEMBLE line");
      size_t n = std::stoul(f[1]);
      std::vector<double> ens;
      ens.reserve(n);
      for (size_t k = 0; k < n; ++k) {
        if (!std::getline(in, line))
          fail(Err::SyntaxError, "ensemble block truncated after " + std::to_string(k) +
                                     " of " + std::to_string(n) + " lines");
        ++lineno;
        ens.push_back(std::stod(trim(line)));
      }
      out.ensemble_energies = std::move(ens);
    } else if (starts_with(t, "wall_seconds")) {
      auto f = split_ws(t);
      if (f.size() != 2) fail(Err::SyntaxError, "bad wall_seconds line");
      out.wall_seconds = std::stod(f[1]);
    } else if (starts_with(t, "prefix") || starts_with(t, "nat")) {
      // descriptive header lines
    } else {
      fail(Err::SyntaxError, "line " + std::to_string(lineno) + ": unrecognized '" + t + "'");
    }
  }
  if (!header) fail(Err::SyntaxError, "empty output document");
  out.converged = !marker;
  out.n_scf = static_cast<int>(out.accuracy_series.size());
  if (!have_energy) fail(Err::MissingEnergy, "no final total-energy marker in output");
  return out;
}

OutputSummary parse_output(const std::string& path) {
  return parse_output_text(read_text_file(path));
}

std::array<int, 3> kgrid(const Mat3& cell, double kspacing) {
  if (kspacing <= 0) fail(Err::InvariantViolation, "kspacing must be positive");
  double v = det(cell);
  if (std::abs(v) < 1e-12) fail(Err::SingularCell, "cell volume vanishes");
  auto cross = [](const structure::Vec3& a, const structure::Vec3& b) {
    return structure::Vec3{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                           a[0] * b[1] - a[1] * b[0]};
  };
  std::array<int, 3> n;
  for (int i = 0; i < 3; ++i) {
    auto c = cross(cell[(i + 1) % 3], cell[(i + 2) % 3]);
    double blen = 2.0 * kPi *
                  std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) / std::abs(v);
    n[i] = static_cast<int>(std::max<long>(1, nudged_ceil(blen / kspacing)));
  }
  return n;
}

}  // namespace matforge::qeio
