#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "matforge/qeio.hpp"
#include "matforge/structure.hpp"

namespace matforge::surrogate {

enum class SystemClass { Bulk, Slab, Molecule, SlabAdsorbate };

const char* class_name(SystemClass c);
SystemClass class_from_name(const std::string& name);

// Calibrated truths behind one simulated system. Bulk systems carry
// Birch-Murnaghan parameters; surface systems carry a per-functional
// energy table keyed by (functional, site, orientation) where non-adsorbate
// classes use "-" placeholders.
struct MaterialFixture {
  std::string id;
  SystemClass cls = SystemClass::Bulk;

  // bulk truth
  std::string lattice;
  double a_exp = 0.0;
  double a_expert = 0.0;
  double e0 = 0.0;        // Ry per conventional cell
  double v0 = 0.0;        // A^3
  double b0 = 0.0;        // Ry/A^3
  double b0_prime = 4.0;

  // energy table for non-bulk classes
  std::map<std::string, double> energy_table;  // "functional|site|orientation" -> Ry

  // discretization-error amplitudes
  double a_c = 0.0;       // Ry/atom
  double lambda_c = 1.0;  // Ry^-1 decay scale on ecutwfc
  double a_k = 0.0;       // Ry*A^2/atom

  int scf_base = 1;
  double beef_w = 0.0;       // Ry, default spread weight
  double beef_offset = 0.0;  // Ry
  std::map<std::string, double> beef_site_w;  // per-site spread override (Ry)
  uint64_t seed = 0;

  double site_energy(const std::string& functional, const std::string& site,
                     const std::string& orientation) const;
  double beef_weight(const std::string& site) const;
};

struct Globals {
  double duration_c0 = 30.0;
  double duration_c1 = 2.0;
  double jitter_amp = 1e-7;  // Ry
};

class FixtureLibrary {
public:
  static FixtureLibrary parse(const std::string& text);
  static FixtureLibrary load(const std::string& path);

  const MaterialFixture& find(const std::string& id) const;
  bool contains(const std::string& id) const { return fixtures_.count(id) > 0; }
  std::vector<std::string> ids() const;
  const Globals& globals() const { return globals_; }

private:
  std::map<std::string, MaterialFixture> fixtures_;
  Globals globals_;
};

// Built-in library parsed from the data file embedded at build time.
const FixtureLibrary& builtin_fixtures();

struct SimOutput {
  bool converged = false;
  double total_energy = 0.0;  // Ry
  int n_scf = 0;
  std::vector<double> accuracy_series;
  std::optional<std::vector<double>> ensemble_energies;
  double wall_seconds = 0.0;
};

// Required scf iterations for a parameter set:
//   R = ceil(scf_base * (0.02 / degauss) * (mixing_beta / 0.3) * m)
// with m = 1.3 for plain mixing and 1.0 for local-TF. The run converges iff
// R <= electron_maxstep.
long required_scf_iterations(int scf_base, const qeio::CalcSpec& spec);

SimOutput evaluate(const MaterialFixture& fixture, const structure::StructureModel& s,
                   const qeio::CalcSpec& spec, uint64_t workflow_seed,
                   const Globals& globals = Globals{}, int ntasks = 0,
                   size_t ensemble_members = 2000);

std::string render_output(const SimOutput& out, const qeio::CalcSpec& spec,
                          const structure::StructureModel& s);

// File-level backend: resolves the fixture from the input's prefix
// ("<system>__<jobtag>"), evaluates, and writes "<stem>.pwo" beside the
// input.
class Backend {
public:
  Backend(const FixtureLibrary& lib, uint64_t workflow_seed, size_t ensemble_members = 2000)
      : lib_(&lib), seed_(workflow_seed), members_(ensemble_members) {}

  SimOutput run(const std::string& input_path, int ntasks) const;
  static std::string output_path_for(const std::string& input_path);
  const FixtureLibrary& library() const { return *lib_; }
  uint64_t seed() const { return seed_; }

private:
  const FixtureLibrary* lib_;
  uint64_t seed_;
  size_t members_;
};

}  // namespace matforge::surrogate
