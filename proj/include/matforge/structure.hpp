#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "matforge/common.hpp"

namespace matforge::structure {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;  // rows are lattice vectors

struct StructureModel {
  std::vector<std::string> symbols;
  std::vector<Vec3> positions;  // Cartesian, Angstrom
  Mat3 cell{};
  std::array<bool, 3> periodic{true, true, true};
  std::set<size_t> fixed_indices;
  std::vector<int> layer_tags;  // empty unless built as a slab

  size_t natoms() const { return symbols.size(); }
  bool operator==(const StructureModel& other) const;
};

double det(const Mat3& m);
double volume(const StructureModel& s);
void validate(const StructureModel& s);

// In-plane coordinates (Angstrom) of the symmetry-distinct adsorption sites
// on the top surface.
using SiteMap = std::map<std::string, std::array<double, 2>>;

// Lattice names accepted by build_bulk; mirrors the bulk-builder tool doc.
const std::vector<std::string>& known_lattices();

StructureModel build_bulk(const std::string& element, const std::string& lattice, double a,
                          std::optional<double> b = std::nullopt,
                          std::optional<double> c = std::nullopt);

struct Surface {
  StructureModel slab;
  SiteMap sites;
};

Surface build_surface(const std::string& element, const std::string& crystal, double a,
                      const std::string& facet, std::array<int, 3> supercell, int n_fixed = 3,
                      double vacuum = 10.0);

StructureModel build_molecule(const std::string& symbols, const std::vector<Vec3>& positions);

struct Rotation {
  double angle_deg = 0.0;
  char axis = 'z';
};

// Rotates the molecule about its anchor (first) atom, then translates it so
// the anchor sits at (site_x, site_y, top-layer z + height). Slab atoms are
// copied bit-exactly.
StructureModel place_adsorbate(const StructureModel& slab, const StructureModel& molecule,
                               std::array<double, 2> site, const std::vector<Rotation>& rotations,
                               double height = 2.0);

StructureModel scale(const StructureModel& s, double alpha);

double nearest_neighbor_distance(const StructureModel& s);

// Plain-text trajectory-style persistence (.traj files).
std::string to_traj(const StructureModel& s);
StructureModel from_traj(const std::string& text);
void save_traj(const StructureModel& s, const std::string& path);
StructureModel load_traj(const std::string& path);

}  // namespace matforge::structure
