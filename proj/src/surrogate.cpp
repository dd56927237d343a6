#include "matforge/surrogate.hpp"

#include <cmath>
#include <sstream>

#include "matforge/data.hpp"
#include "matforge/numerics.hpp"
#include "matforge/rng.hpp"

namespace matforge::surrogate {

const char* class_name(SystemClass c) {
  switch (c) {
    case SystemClass::Bulk: return "bulk";
    case SystemClass::Slab: return "slab";
    case SystemClass::Molecule: return "molecule";
    case SystemClass::SlabAdsorbate: return "slab+adsorbate";
  }
  return "bulk";
}

SystemClass class_from_name(const std::string& name) {
  if (name == "bulk") return SystemClass::Bulk;
  if (name == "slab") return SystemClass::Slab;
  if (name == "molecule") return SystemClass::Molecule;
  if (name == "slab+adsorbate") return SystemClass::SlabAdsorbate;
  fail(Err::SyntaxError, "unknown system class '" + name + "'");
}

double MaterialFixture::site_energy(const std::string& functional, const std::string& site,
                                    const std::string& orientation) const {
  auto it = energy_table.find(functional + "|" + site + "|" + orientation);
  if (it == energy_table.end())
    fail(Err::FixtureNotFound, "fixture '" + id + "' has no energy for (" + functional + ", " +
                                   site + ", " + orientation + ")");
  return it->second;
}

double MaterialFixture::beef_weight(const std::string& site) const {
  auto it = beef_site_w.find(site);
  return it == beef_site_w.end() ? beef_w : it->second;
}

FixtureLibrary FixtureLibrary::parse(const std::string& text) {
  FixtureLibrary lib;
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  MaterialFixture* cur = nullptr;
  bool in_globals = false;
  auto err = [&](const std::string& why) {
    fail(Err::SyntaxError, "fixture line " + std::to_string(lineno) + ": " + why);
  };
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (!header) {
      if (t != "mfx 1") err("bad fixture header");
      header = true;
      continue;
    }
    if (starts_with(t, "[")) {
      if (t == "[globals]") {
        in_globals = true;
        cur = nullptr;
        continue;
      }
      if (!starts_with(t, "[system ") || t.back() != ']') err("bad section header");
      std::string id = trim(t.substr(8, t.size() - 9));
      if (id.empty()) err("empty system id");
      auto [it, fresh] = lib.fixtures_.emplace(id, MaterialFixture{});
      if (!fresh) err("duplicate system '" + id + "'");
      it->second.id = id;
      cur = &it->second;
      in_globals = false;
      continue;
    }
    auto f = split_ws(t);
    if (in_globals) {
      if (f.size() != 2) err("globals line needs key value");
      if (f[0] == "duration_c0") lib.globals_.duration_c0 = std::stod(f[1]);
      else if (f[0] == "duration_c1") lib.globals_.duration_c1 = std::stod(f[1]);
      else if (f[0] == "jitter_amp") lib.globals_.jitter_amp = std::stod(f[1]);
      else err("unknown global '" + f[0] + "'");
      continue;
    }
    if (!cur) err("field outside any section");
    const std::string& k = f[0];
    if (k == "energy") {
      if (f.size() != 5) err("energy line needs functional site orientation value");
      cur->energy_table[f[1] + "|" + f[2] + "|" + f[3]] = std::stod(f[4]);
    } else if (k == "beef_site_w") {
      if (f.size() != 3) err("beef_site_w line needs site value");
      cur->beef_site_w[f[1]] = std::stod(f[2]);
    } else if (f.size() == 2) {
      if (k == "class") cur->cls = class_from_name(f[1]);
      else if (k == "lattice") cur->lattice = f[1];
      else if (k == "a_exp") cur->a_exp = std::stod(f[1]);
      else if (k == "a_expert") cur->a_expert = std::stod(f[1]);
      else if (k == "e0") cur->e0 = std::stod(f[1]);
      else if (k == "v0") cur->v0 = std::stod(f[1]);
      else if (k == "b0") cur->b0 = std::stod(f[1]);
      else if (k == "b0_prime") cur->b0_prime = std::stod(f[1]);
      else if (k == "a_c") cur->a_c = std::stod(f[1]);
      else if (k == "lambda_c") cur->lambda_c = std::stod(f[1]);
      else if (k == "a_k") cur->a_k = std::stod(f[1]);
      else if (k == "scf_base") cur->scf_base = std::stoi(f[1]);
      else if (k == "beef_w") cur->beef_w = std::stod(f[1]);
      else if (k == "beef_offset") cur->beef_offset = std::stod(f[1]);
      else if (k == "seed") cur->seed = std::stoull(f[1]);
      else err("unknown fixture field '" + k + "'");
    } else {
      err("malformed fixture line");
    }
  }
  for (const auto& [id, fx] : lib.fixtures_) {
    if (fx.lambda_c <= 0) fail(Err::InvariantViolation, id + ": lambda_c must be positive");
    if (fx.a_k < 0) fail(Err::InvariantViolation, id + ": a_k must be non-negative");
    if (fx.scf_base < 1) fail(Err::InvariantViolation, id + ": scf_base must be >= 1");
    if (fx.cls == SystemClass::Bulk && fx.v0 <= 0)
      fail(Err::InvariantViolation, id + ": bulk fixtures need v0 > 0");
  }
  return lib;
}

FixtureLibrary FixtureLibrary::load(const std::string& path) {
  return parse(read_text_file(path));
}

const FixtureLibrary& builtin_fixtures() {
  static const FixtureLibrary lib = FixtureLibrary::parse(data::fixtures_text());
  return lib;
}

const MaterialFixture& FixtureLibrary::find(const std::string& id) const {
  auto it = fixtures_.find(id);
  if (it == fixtures_.end()) fail(Err::FixtureNotFound, "no fixture for system '" + id + "'");
  return it->second;
}

std::vector<std::string> FixtureLibrary::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : fixtures_) out.push_back(id);
  return out;
}

long required_scf_iterations(int scf_base, const qeio::CalcSpec& spec) {
  const double m = spec.mixing_mode == "local-TF" ? 1.0 : 1.3;
  const double degauss = spec.degauss > 0 ? spec.degauss : 1e-6;
  return nudged_ceil(scf_base * (0.02 / degauss) * (spec.mixing_beta / 0.3) * m);
}

namespace {

std::string spec_fingerprint(const MaterialFixture& fx, const structure::StructureModel& s,
                             const qeio::CalcSpec& spec) {
  std::ostringstream ss;
  ss << fx.id << "|" << spec.prefix << "|" << format_double(spec.ecutwfc) << "|"
     << format_double(spec.kspacing) << "|" << format_double(spec.degauss) << "|"
     << format_double(spec.mixing_beta) << "|" << spec.mixing_mode << "|"
     << spec.electron_maxstep << "|" << spec.calculation << "|" << spec.input_dft << "|"
     << s.natoms() << "|" << format_double(structure::det(s.cell));
  return ss.str();
}

std::string extras_site(const qeio::CalcSpec& spec, const char* key) {
  auto it = spec.extras.find(key);
  if (it == spec.extras.end()) return "-";
  if (std::holds_alternative<std::string>(it->second)) return std::get<std::string>(it->second);
  return "-";
}

}  // namespace

SimOutput evaluate(const MaterialFixture& fixture, const structure::StructureModel& s,
                   const qeio::CalcSpec& spec, uint64_t workflow_seed, const Globals& globals,
                   int ntasks, size_t ensemble_members) {
  const size_t nat = s.natoms();
  SimOutput out;

  // Physical part of the energy.
  double e_phys = 0.0;
  switch (fixture.cls) {
    case SystemClass::Bulk: {
      if (!s.periodic[0] || !s.periodic[1] || !s.periodic[2])
        fail(Err::ClassMismatch, "bulk fixture needs a periodic structure");
      e_phys = numerics::bm3_energy(structure::det(s.cell), fixture.e0, fixture.v0, fixture.b0,
                                    fixture.b0_prime);
      break;
    }
    case SystemClass::Molecule:
      if (s.periodic[0] || s.periodic[1] || s.periodic[2])
        fail(Err::ClassMismatch, "molecule fixture needs a non-periodic structure");
      e_phys = fixture.site_energy(spec.input_dft, "-", "-");
      break;
    case SystemClass::Slab:
      e_phys = fixture.site_energy(spec.input_dft, "-", "-");
      break;
    case SystemClass::SlabAdsorbate: {
      std::string site = extras_site(spec, "site");
      std::string orientation = extras_site(spec, "orientation");
      if (site == "-" || orientation == "-")
        fail(Err::ClassMismatch,
             "slab+adsorbate evaluation needs 'site' and 'orientation' extras");
      e_phys = fixture.site_energy(spec.input_dft, site, orientation);
      break;
    }
  }

  // Discretization error vanishes monotonically with stricter settings.
  const double per_atom_err = fixture.a_c * std::exp(-spec.ecutwfc / fixture.lambda_c) +
                              fixture.a_k * spec.kspacing * spec.kspacing;
  const uint64_t jitter_key =
      rng::key_from("jitter", workflow_seed ^ fixture.seed) ^
      fnv1a64(spec_fingerprint(fixture, s, spec));
  const double jitter = (rng::uniform(jitter_key, 0) - 0.5) * 2.0 * globals.jitter_amp;
  out.total_energy = e_phys + static_cast<double>(nat) * per_atom_err + jitter;

  // scf behavior.
  const long required = required_scf_iterations(fixture.scf_base, spec);
  out.converged = required <= spec.electron_maxstep;
  out.n_scf = static_cast<int>(std::min<long>(required, spec.electron_maxstep));
  const double acc0 = 1.0;
  const double target = spec.conv_thr * 0.9;
  out.accuracy_series.resize(out.n_scf);
  if (required <= 1) {
    out.accuracy_series.assign(1, target);
    out.n_scf = 1;
  } else {
    const double rho = std::pow(target / acc0, 1.0 / static_cast<double>(required - 1));
    for (int i = 0; i < out.n_scf; ++i) out.accuracy_series[i] = acc0 * std::pow(rho, i);
  }

  if (spec.calculation == "ensemble") {
    std::string site = fixture.cls == SystemClass::SlabAdsorbate ? extras_site(spec, "site") : "-";
    const double w = fixture.beef_weight(site);
    std::vector<double> ens(ensemble_members);
    for (size_t m = 0; m < ensemble_members; ++m)
      ens[m] = out.total_energy + fixture.beef_offset + w * rng::ensemble_z(workflow_seed, m);
    out.ensemble_energies = std::move(ens);
  }

  const int tasks = ntasks > 0 ? ntasks : static_cast<int>(nat);
  out.wall_seconds = globals.duration_c0 +
                     globals.duration_c1 * static_cast<double>(nat) * out.n_scf / tasks;
  return out;
}

std::string render_output(const SimOutput& out, const qeio::CalcSpec& spec,
                          const structure::StructureModel& s) {
  std::ostringstream os;
  os << "mfout 1\n";
  os << "prefix " << spec.prefix << "\n";
  os << "nat " << s.natoms() << "\n";
  for (size_t i = 0; i < out.accuracy_series.size(); ++i)
    os << "iter " << (i + 1) << " accuracy " << format_double(out.accuracy_series[i]) << "\n";
  if (!out.converged) os << "convergence NOT achieved\n";
  os << "! total energy = " << format_double(out.total_energy) << " Ry\n";
  if (out.ensemble_energies) {
    os << "ENSEMBLE " << out.ensemble_energies->size() << "\n";
    for (double e : *out.ensemble_energies) os << format_double(e) << "\n";
  }
  os << "wall_seconds " << format_double(out.wall_seconds) << "\n";
  return os.str();
}

SimOutput Backend::run(const std::string& input_path, int ntasks) const {
  auto [spec, s] = qeio::parse_input(input_path);
  const size_t sep = spec.prefix.find("__");
  const std::string system_id = sep == std::string::npos ? spec.prefix : spec.prefix.substr(0, sep);
  const MaterialFixture& fx = lib_->find(system_id);
  SimOutput out = evaluate(fx, s, spec, seed_, lib_->globals(), ntasks, members_);
  write_text_file(output_path_for(input_path), render_output(out, spec, s));
  return out;
}

std::string Backend::output_path_for(const std::string& input_path) {
  std::string out = input_path;
  const std::string suffix = ".pwi";
  if (out.size() >= suffix.size() && out.substr(out.size() - suffix.size()) == suffix)
    out = out.substr(0, out.size() - suffix.size());
  return out + ".pwo";
}

}  // namespace matforge::surrogate
