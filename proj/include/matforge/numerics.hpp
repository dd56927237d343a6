#pragma once

#include <array>
#include <string>
#include <vector>

#include "matforge/structure.hpp"

namespace matforge::numerics {

struct ConvergenceSeries {
  std::string parameter;              // "ecutwfc" or "kspacing"
  std::vector<double> values;         // sampled settings, any order
  std::vector<double> energies;       // Ry/atom, aligned with values
  double reference_energy = 0.0;      // Ry/atom at the strictest setting
};

// Cheapest sampled value whose whole stricter tail stays within the
// threshold. Cost order: ecutwfc ascending, kspacing descending.
double select_converged(const ConvergenceSeries& series, double threshold_mev_per_atom = 1.0);

struct EOSFit {
  double e0 = 0.0;        // Ry
  double v0 = 0.0;        // A^3
  double b0 = 0.0;        // Ry/A^3
  double b0_prime = 0.0;
  double residual_norm = 0.0;

  double b0_gpa() const;
};

// Third-order Birch-Murnaghan energy at volume v.
double bm3_energy(double v, double e0, double v0, double b0, double b0_prime);

// Exact quadratic seed in V: E0 and V0 from the vertex, B0 from the
// curvature, B0' = 4.
std::array<double, 4> quadratic_seed(const std::vector<double>& volumes,
                                     const std::vector<double>& energies);

EOSFit fit_eos(const std::vector<double>& volumes, const std::vector<double>& energies);

double lattice_from_fit(const EOSFit& fit, const structure::StructureModel& reference);

double bulk_modulus_gpa(const EOSFit& fit);

inline double adsorption_energy(double e_system, double e_slab, double e_molecule) {
  return e_system - e_molecule - e_slab;
}

inline double delta_be(double e_ads_ontop, double e_ads_fcc) {
  return e_ads_ontop - e_ads_fcc;
}

struct EnsembleStats {
  double mean = 0.0;            // eV
  double stddev = 0.0;          // eV, sample (N-1)
  size_t n = 0;
  double sigma_distance = 0.0;  // |mean| / stddev
};

// Per-member dBE from four aligned ensembles (Ry in, eV out). Both the
// four-term and the cancelled two-term route are evaluated and must agree to
// machine precision at the input energy scale.
EnsembleStats analyze_beef(const std::vector<double>& slab_ens,
                           const std::vector<double>& molecule_ens,
                           const std::vector<double>& ontop_ens,
                           const std::vector<double>& fcc_ens);

}  // namespace matforge::numerics
