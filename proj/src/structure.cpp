#include "matforge/structure.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace matforge::structure {

namespace {

Vec3 add(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 mul(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

Mat3 cubic_cell(double a) {
  return Mat3{Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, a}};
}

StructureModel from_basis(const std::string& element, const Mat3& cell,
                          const std::vector<Vec3>& frac) {
  StructureModel s;
  s.cell = cell;
  for (const auto& f : frac) {
    s.symbols.push_back(element);
    Vec3 p{0, 0, 0};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) p[j] += f[i] * cell[i][j];
    s.positions.push_back(p);
  }
  return s;
}

const std::vector<Vec3>& fcc_frac() {
  static const std::vector<Vec3> f{{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}};
  return f;
}

}  // namespace

bool StructureModel::operator==(const StructureModel& other) const {
  return symbols == other.symbols && positions == other.positions && cell == other.cell &&
         periodic == other.periodic && fixed_indices == other.fixed_indices &&
         layer_tags == other.layer_tags;
}

double det(const Mat3& m) {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

double volume(const StructureModel& s) { return det(s.cell); }

void validate(const StructureModel& s) {
  if (s.symbols.size() != s.positions.size())
    fail(Err::InvariantViolation, "symbol and position counts differ");
  if (det(s.cell) <= 0.0) fail(Err::InvariantViolation, "cell determinant must be positive");
  for (size_t i : s.fixed_indices)
    if (i >= s.natoms()) fail(Err::InvariantViolation, "fixed index out of range");
  if (!s.layer_tags.empty() && s.layer_tags.size() != s.natoms())
    fail(Err::InvariantViolation, "layer tag count mismatch");
}

const std::vector<std::string>& known_lattices() {
  static const std::vector<std::string> names{
      "sc",  "fcc",          "bcc",        "tetragonal", "bct",
      "hcp", "rhombohedral", "orthorhombic", "mcl",      "diamond",
      "zincblende", "rocksalt", "cesiumchloride", "fluorite", "wurtzite"};
  return names;
}

StructureModel build_bulk(const std::string& element, const std::string& lattice, double a,
                          std::optional<double> b, std::optional<double> c) {
  if (a <= 0) fail(Err::MissingParameter, "lattice constant a must be positive");
  std::string lat = lower(lattice);
  if (std::find(known_lattices().begin(), known_lattices().end(), lat) ==
      known_lattices().end())
    fail(Err::UnknownLattice, "'" + lattice + "' is not a recognized lattice");

  // "If only a and b given, b will be interpreted as c."
  if (b && !c) {
    c = b;
    b.reset();
  }

  StructureModel s;
  if (lat == "sc") {
    s = from_basis(element, cubic_cell(a), {{0, 0, 0}});
  } else if (lat == "bcc") {
    s = from_basis(element, cubic_cell(a), {{0, 0, 0}, {0.5, 0.5, 0.5}});
  } else if (lat == "fcc") {
    s = from_basis(element, cubic_cell(a), fcc_frac());
  } else if (lat == "diamond" || lat == "zincblende") {
    std::vector<Vec3> frac = fcc_frac();
    for (const auto& f : fcc_frac()) frac.push_back(add(f, {0.25, 0.25, 0.25}));
    s = from_basis(element, cubic_cell(a), frac);
  } else if (lat == "rocksalt") {
    std::vector<Vec3> frac = fcc_frac();
    for (const auto& f : fcc_frac()) frac.push_back(add(f, {0.5, 0, 0}));
    s = from_basis(element, cubic_cell(a), frac);
  } else if (lat == "cesiumchloride") {
    s = from_basis(element, cubic_cell(a), {{0, 0, 0}, {0.5, 0.5, 0.5}});
  } else if (lat == "fluorite") {
    std::vector<Vec3> frac = fcc_frac();
    for (const auto& f : fcc_frac()) {
      frac.push_back(add(f, {0.25, 0.25, 0.25}));
      frac.push_back(add(f, {0.75, 0.75, 0.75}));
    }
    s = from_basis(element, cubic_cell(a), frac);
  } else if (lat == "tetragonal" || lat == "bct") {
    if (!c) fail(Err::MissingParameter, lat + " needs lattice constant c");
    Mat3 cell{Vec3{a, 0, 0}, Vec3{0, a, 0}, Vec3{0, 0, *c}};
    std::vector<Vec3> frac{{0, 0, 0}};
    if (lat == "bct") frac.push_back({0.5, 0.5, 0.5});
    s = from_basis(element, cell, frac);
  } else if (lat == "orthorhombic") {
    if (!b || !c) fail(Err::MissingParameter, "orthorhombic needs a, b and c");
    Mat3 cell{Vec3{a, 0, 0}, Vec3{0, *b, 0}, Vec3{0, 0, *c}};
    s = from_basis(element, cell, {{0, 0, 0}});
  } else if (lat == "hcp" || lat == "wurtzite") {
    if (!c) fail(Err::MissingParameter, lat + " needs lattice constant c");
    Mat3 cell{Vec3{a, 0, 0}, Vec3{-a / 2, a * std::sqrt(3.0) / 2, 0}, Vec3{0, 0, *c}};
    std::vector<Vec3> frac{{0, 0, 0}, {1.0 / 3, 2.0 / 3, 0.5}};
    if (lat == "wurtzite") {
      frac.push_back({0, 0, 0.375});
      frac.push_back({1.0 / 3, 2.0 / 3, 0.875});
    }
    s = from_basis(element, cell, frac);
  } else {
    // rhombohedral and mcl need angle parameters the (a, b, c) signature
    // cannot carry.
    fail(Err::MissingParameter, lat + " needs angle parameters beyond (a, b, c)");
  }
  validate(s);
  return s;
}

Surface build_surface(const std::string& element, const std::string& crystal, double a,
                      const std::string& facet, std::array<int, 3> supercell, int n_fixed,
                      double vacuum) {
  if (lower(crystal) != "fcc" || facet != "111")
    fail(Err::UnsupportedFacet, crystal + "(" + facet + ") is not supported; use fcc(111)");
  int p = supercell[0], q = supercell[1], layers = supercell[2];
  if (p < 1 || q < 1 || layers < 1) fail(Err::MissingParameter, "supercell must be positive");
  if (layers < n_fixed)
    fail(Err::MissingParameter, "slab needs at least as many layers as fixed layers");
  if (n_fixed < 0) fail(Err::MissingParameter, "n_fixed must be non-negative");
  if (a <= 0) fail(Err::MissingParameter, "lattice constant a must be positive");

  const double d = a / std::sqrt(2.0);       // in-plane nearest-neighbor distance
  const double h = a / std::sqrt(3.0);       // interlayer spacing
  const Vec3 a1{d, 0, 0};
  const Vec3 a2{d / 2, d * std::sqrt(3.0) / 2, 0};

  StructureModel slab;
  slab.cell = Mat3{mul(a1, p), mul(a2, q), Vec3{0, 0, (layers - 1) * h + vacuum}};
  slab.periodic = {true, true, true};

  // ABC stacking, bottom to top; each layer is shifted by s in fractional
  // coordinates of the primitive surface cell.
  auto frac_offset = [](int layer) {
    double f1 = std::fmod(layer * (2.0 / 3.0), 1.0);
    double f2 = std::fmod(layer * (1.0 / 3.0), 1.0);
    return std::array<double, 2>{f1, f2};
  };

  for (int layer = 0; layer < layers; ++layer) {
    auto off = frac_offset(layer);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < q; ++j) {
        Vec3 pos = add(mul(a1, i + off[0]), mul(a2, j + off[1]));
        pos[2] = layer * h;
        slab.symbols.push_back(element);
        slab.positions.push_back(pos);
        slab.layer_tags.push_back(layer);
        if (layer < n_fixed) slab.fixed_indices.insert(slab.positions.size() - 1);
      }
    }
  }
  validate(slab);

  auto in_plane = [&](std::array<double, 2> f) {
    f[0] = std::fmod(std::fmod(f[0], 1.0) + 1.0, 1.0);
    f[1] = std::fmod(std::fmod(f[1], 1.0) + 1.0, 1.0);
    Vec3 v = add(mul(a1, f[0]), mul(a2, f[1]));
    return std::array<double, 2>{v[0], v[1]};
  };

  auto top = frac_offset(layers - 1);
  SiteMap sites;
  sites["ontop"] = in_plane(top);
  sites["bridge"] = in_plane({top[0] + 0.5, top[1]});
  sites["fcc"] = in_plane({top[0] + 2.0 / 3.0, top[1] + 1.0 / 3.0});
  sites["hcp"] = in_plane({top[0] - 2.0 / 3.0, top[1] - 1.0 / 3.0});
  return Surface{std::move(slab), std::move(sites)};
}

StructureModel build_molecule(const std::string& symbols, const std::vector<Vec3>& positions) {
  std::vector<std::string> parsed;
  for (size_t i = 0; i < symbols.size();) {
    if (!std::isupper(static_cast<unsigned char>(symbols[i])))
      fail(Err::CountMismatch, "symbols string must be element symbols without delimiters");
    size_t j = i + 1;
    while (j < symbols.size() && std::islower(static_cast<unsigned char>(symbols[j]))) ++j;
    parsed.push_back(symbols.substr(i, j - i));
    i = j;
  }
  if (parsed.size() != positions.size())
    fail(Err::CountMismatch, std::to_string(parsed.size()) + " symbols vs " +
                                 std::to_string(positions.size()) + " positions");
  if (parsed.empty()) fail(Err::CountMismatch, "molecule needs at least one atom");

  // Isolated-reference convention: a 15 A box, recorded but non-periodic.
  StructureModel s;
  s.symbols = std::move(parsed);
  s.positions = positions;
  s.cell = Mat3{Vec3{15, 0, 0}, Vec3{0, 15, 0}, Vec3{0, 0, 15}};
  s.periodic = {false, false, false};
  validate(s);
  return s;
}

StructureModel place_adsorbate(const StructureModel& slab, const StructureModel& molecule,
                               std::array<double, 2> site, const std::vector<Rotation>& rotations,
                               double height) {
  // Site must fall inside the in-plane cell footprint.
  const double ax = slab.cell[0][0], ay = slab.cell[0][1];
  const double bx = slab.cell[1][0], by = slab.cell[1][1];
  const double d2 = ax * by - ay * bx;
  if (std::abs(d2) < 1e-12) fail(Err::SingularCell, "slab cell has no in-plane area");
  const double f1 = (site[0] * by - site[1] * bx) / d2;
  const double f2 = (ax * site[1] - ay * site[0]) / d2;
  const double eps = 1e-9;
  if (f1 < -eps || f1 > 1 + eps || f2 < -eps || f2 > 1 + eps)
    fail(Err::SiteOutOfCell, "site (" + format_double(site[0]) + ", " + format_double(site[1]) +
                                 ") lies outside the cell footprint");

  double top_z = 0.0;
  for (const auto& p : slab.positions) top_z = std::max(top_z, p[2]);

  // Rotate about the anchor atom (the molecule's first atom), in list order.
  std::vector<Vec3> rel(molecule.positions.size());
  const Vec3 anchor = molecule.positions.front();
  for (size_t i = 0; i < rel.size(); ++i)
    rel[i] = {molecule.positions[i][0] - anchor[0], molecule.positions[i][1] - anchor[1],
              molecule.positions[i][2] - anchor[2]};
  for (const auto& r : rotations) {
    const double t = r.angle_deg * kPi / 180.0;
    const double c = std::cos(t), s = std::sin(t);
    for (auto& v : rel) {
      Vec3 o = v;
      switch (r.axis) {
        case 'x': v = {o[0], c * o[1] - s * o[2], s * o[1] + c * o[2]}; break;
        case 'y': v = {c * o[0] + s * o[2], o[1], -s * o[0] + c * o[2]}; break;
        case 'z': v = {c * o[0] - s * o[1], s * o[0] + c * o[1], o[2]}; break;
        default: fail(Err::MissingParameter, "rotation axis must be x, y or z");
      }
    }
  }

  StructureModel out = slab;
  out.layer_tags.clear();
  const Vec3 target{site[0], site[1], top_z + height};
  for (size_t i = 0; i < rel.size(); ++i) {
    out.symbols.push_back(molecule.symbols[i]);
    out.positions.push_back(add(rel[i], target));
  }
  validate(out);
  return out;
}

StructureModel scale(const StructureModel& s, double alpha) {
  if (alpha <= 0) fail(Err::NonPositiveScale, "scale factor must be positive");
  StructureModel out = s;
  for (auto& row : out.cell) row = mul(row, alpha);
  for (auto& p : out.positions) p = mul(p, alpha);
  return out;
}

double nearest_neighbor_distance(const StructureModel& s) {
  if (s.natoms() < 2) fail(Err::InvariantViolation, "need at least two atoms");
  double best = 1e300;
  // Minimum-image over one periodic shell; adequate for the compact cells
  // this engine builds.
  for (size_t i = 0; i < s.natoms(); ++i) {
    for (size_t j = i + 1; j < s.natoms(); ++j) {
      for (int n1 = -1; n1 <= 1; ++n1)
        for (int n2 = -1; n2 <= 1; ++n2)
          for (int n3 = -1; n3 <= 1; ++n3) {
            Vec3 dvec;
            for (int k = 0; k < 3; ++k)
              dvec[k] = s.positions[j][k] - s.positions[i][k] + n1 * s.cell[0][k] +
                        n2 * s.cell[1][k] + n3 * s.cell[2][k];
            best = std::min(best, std::sqrt(dvec[0] * dvec[0] + dvec[1] * dvec[1] +
                                            dvec[2] * dvec[2]));
          }
    }
  }
  return best;
}

std::string to_traj(const StructureModel& s) {
  std::ostringstream out;
  out << "mftraj 1\n";
  out << "natoms " << s.natoms() << "\n";
  out << "cell\n";
  for (const auto& row : s.cell)
    out << format_double(row[0]) << " " << format_double(row[1]) << " " << format_double(row[2])
        << "\n";
  out << "pbc " << (s.periodic[0] ? "T" : "F") << " " << (s.periodic[1] ? "T" : "F") << " "
      << (s.periodic[2] ? "T" : "F") << "\n";
  out << "atoms\n";
  for (size_t i = 0; i < s.natoms(); ++i) {
    out << s.symbols[i] << " " << format_double(s.positions[i][0]) << " "
        << format_double(s.positions[i][1]) << " " << format_double(s.positions[i][2]);
    if (!s.layer_tags.empty()) out << " " << s.layer_tags[i];
    out << "\n";
  }
  out << "fixed";
  for (size_t i : s.fixed_indices) out << " " << i;
  out << "\n";
  return out.str();
}

StructureModel from_traj(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  size_t lineno = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) fail(Err::SyntaxError, "unexpected end of traj data");
    ++lineno;
    return trim(line);
  };
  if (next() != "mftraj 1") fail(Err::SyntaxError, "bad traj header");
  auto nat_line = split_ws(next());
  if (nat_line.size() != 2 || nat_line[0] != "natoms")
    fail(Err::SyntaxError, "expected natoms at line " + std::to_string(lineno));
  size_t nat = std::stoul(nat_line[1]);
  if (next() != "cell") fail(Err::SyntaxError, "expected cell block");
  StructureModel s;
  for (auto& row : s.cell) {
    auto f = split_ws(next());
    if (f.size() != 3) fail(Err::SyntaxError, "cell row needs 3 numbers");
    for (int k = 0; k < 3; ++k) row[k] = std::stod(f[k]);
  }
  auto pbc = split_ws(next());
  if (pbc.size() != 4 || pbc[0] != "pbc") fail(Err::SyntaxError, "expected pbc line");
  for (int k = 0; k < 3; ++k) s.periodic[k] = pbc[k + 1] == "T";
  if (next() != "atoms") fail(Err::SyntaxError, "expected atoms block");
  bool any_layer = false;
  for (size_t i = 0; i < nat; ++i) {
    auto f = split_ws(next());
    if (f.size() != 4 && f.size() != 5)
      fail(Err::SyntaxError, "atom line " + std::to_string(lineno) + " malformed");
    s.symbols.push_back(f[0]);
    s.positions.push_back({std::stod(f[1]), std::stod(f[2]), std::stod(f[3])});
    if (f.size() == 5) {
      any_layer = true;
      s.layer_tags.push_back(std::stoi(f[4]));
    } else {
      s.layer_tags.push_back(0);
    }
  }
  if (!any_layer) s.layer_tags.clear();
  auto fixed = split_ws(next());
  if (fixed.empty() || fixed[0] != "fixed") fail(Err::SyntaxError, "expected fixed line");
  for (size_t k = 1; k < fixed.size(); ++k) s.fixed_indices.insert(std::stoul(fixed[k]));
  validate(s);
  return s;
}

void save_traj(const StructureModel& s, const std::string& path) {
  write_text_file(path, to_traj(s));
}

StructureModel load_traj(const std::string& path) { return from_traj(read_text_file(path)); }

}  // namespace matforge::structure
