#include "matforge/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace matforge::numerics {

double select_converged(const ConvergenceSeries& series, double threshold_mev_per_atom) {
  if (series.parameter != "ecutwfc" && series.parameter != "kspacing")
    fail(Err::InvariantViolation, "unknown convergence parameter '" + series.parameter + "'");
  if (series.values.size() != series.energies.size())
    fail(Err::LengthMismatch, "values and energies differ in length");
  if (series.values.size() < 2)
    fail(Err::InvariantViolation, "need at least 2 samples plus the reference");
  const double tau = threshold_mev_per_atom * kMevPerAtomInRy;

  // Order from strictest to cheapest: ecutwfc descending, kspacing ascending.
  std::vector<size_t> idx(series.values.size());
  std::iota(idx.begin(), idx.end(), 0);
  const bool ecut = series.parameter == "ecutwfc";
  std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    return ecut ? series.values[a] > series.values[b] : series.values[a] < series.values[b];
  });
  for (size_t k = 1; k < idx.size(); ++k)
    if (series.values[idx[k]] == series.values[idx[k - 1]])
      fail(Err::InvariantViolation, "sampled values must be strictly monotone");

  double chosen = 0.0;
  bool any = false;
  for (size_t k = 0; k < idx.size(); ++k) {
    double err = std::abs(series.energies[idx[k]] - series.reference_energy);
    if (err > tau) break;  // tail rule: stop at the first stricter failure
    chosen = series.values[idx[k]];
    any = true;
  }
  if (!any)
    fail(Err::NoConvergedValue, "even the strictest " + series.parameter +
                                    " sample misses the threshold");
  return chosen;
}

double EOSFit::b0_gpa() const { return b0 * kGpaPerRyA3; }

double bm3_energy(double v, double e0, double v0, double b0, double b0_prime) {
  const double x = std::cbrt((v0 / v) * (v0 / v));  // (v0/v)^(2/3)
  const double t = x - 1.0;
  return e0 + 9.0 * v0 * b0 / 16.0 * (t * t * t * b0_prime + t * t * (6.0 - 4.0 * x));
}

namespace {

// Analytic Jacobian of bm3_energy with respect to (e0, v0, b0, b0_prime).
std::array<double, 4> bm3_jacobian(double v, double /*e0*/, double v0, double b0,
                                   double b0_prime) {
  const double x = std::cbrt((v0 / v) * (v0 / v));
  const double t = x - 1.0;
  const double shape = t * t * t * b0_prime + t * t * (6.0 - 4.0 * x);
  const double dshape_dx = 3.0 * t * t * b0_prime + 2.0 * t * (6.0 - 4.0 * x) - 4.0 * t * t;
  const double dx_dv0 = (2.0 / 3.0) * x / v0;
  std::array<double, 4> j;
  j[0] = 1.0;
  j[1] = 9.0 * b0 / 16.0 * shape + 9.0 * v0 * b0 / 16.0 * dshape_dx * dx_dv0;
  j[2] = 9.0 * v0 / 16.0 * shape;
  j[3] = 9.0 * v0 * b0 / 16.0 * t * t * t;
  return j;
}

// Solve the symmetric positive (semi)definite 4x4 system A x = b in place.
bool solve4(std::array<std::array<double, 4>, 4>& a, std::array<double, 4>& b,
            std::array<double, 4>& x) {
  for (int col = 0; col < 4; ++col) {
    int piv = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    if (std::abs(a[piv][col]) < 1e-300) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (int r = col + 1; r < 4; ++r) {
      double f = a[r][col] / a[col][col];
      for (int c = col; c < 4; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  for (int r = 3; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < 4; ++c) s -= a[r][c] * x[c];
    x[r] = s / a[r][r];
  }
  return true;
}

}  // namespace

std::array<double, 4> quadratic_seed(const std::vector<double>& volumes,
                                     const std::vector<double>& energies) {
  // Least-squares parabola E = c0 + c1 V + c2 V^2 via normal equations on
  // centered volumes (well conditioned for the narrow EOS spans used here).
  const size_t n = volumes.size();
  double vbar = std::accumulate(volumes.begin(), volumes.end(), 0.0) / n;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0, t0 = 0, t1 = 0, t2 = 0;
  for (size_t i = 0; i < n; ++i) {
    double u = volumes[i] - vbar;
    double u2 = u * u;
    s1 += u;
    s2 += u2;
    s3 += u2 * u;
    s4 += u2 * u2;
    t0 += energies[i];
    t1 += energies[i] * u;
    t2 += energies[i] * u2;
  }
  std::array<std::array<double, 4>, 4> a{};
  std::array<double, 4> rhs{}, sol{};
  a[0] = {double(n), s1, s2, 0};
  a[1] = {s1, s2, s3, 0};
  a[2] = {s2, s3, s4, 0};
  a[3] = {0, 0, 0, 1};
  rhs = {t0, t1, t2, 0};
  if (!solve4(a, rhs, sol)) fail(Err::FitDiverged, "quadratic seed is singular");
  double c2 = sol[2], c1 = sol[1], c0 = sol[0];
  if (c2 <= 0) fail(Err::NoInteriorMinimum, "sampled energies are not convex");
  double u0 = -c1 / (2 * c2);
  double v0 = u0 + vbar;
  double e0 = c0 + c1 * u0 + c2 * u0 * u0;
  double b0 = 2.0 * c2 * v0;
  return {e0, v0, b0, 4.0};
}

EOSFit fit_eos(const std::vector<double>& volumes, const std::vector<double>& energies) {
  const size_t n = volumes.size();
  if (n != energies.size()) fail(Err::LengthMismatch, "volumes and energies differ in length");
  if (n < 5) fail(Err::InvariantViolation, "EOS fit needs at least 5 points");
  for (double v : volumes)
    if (!(v > 0) || !std::isfinite(v)) fail(Err::InvariantViolation, "volumes must be positive");
  for (double e : energies)
    if (!std::isfinite(e)) fail(Err::InvariantViolation, "energies must be finite");

  // A strict interior minimum must exist among the samples.
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return volumes[a] < volumes[b]; });
  size_t imin = order[0];
  for (size_t k : order)
    if (energies[k] < energies[imin]) imin = k;
  if (imin == order.front() || imin == order.back())
    fail(Err::NoInteriorMinimum, "no interior minimum in the sampled energies");

  auto params = quadratic_seed(volumes, energies);
  double lambda = 1e-3;
  const double scale = std::max(1.0, std::abs(energies[imin]));

  auto residual_norm2 = [&](const std::array<double, 4>& p) {
    double s = 0;
    for (size_t i = 0; i < n; ++i) {
      double r = bm3_energy(volumes[i], p[0], p[1], p[2], p[3]) - energies[i];
      s += r * r;
    }
    return s;
  };

  double chi2 = residual_norm2(params);
  bool converged = false;
  for (int iter = 0; iter < 400; ++iter) {
    // Accumulate J^T J and J^T r.
    std::array<std::array<double, 4>, 4> jtj{};
    std::array<double, 4> jtr{};
    for (size_t i = 0; i < n; ++i) {
      double r = bm3_energy(volumes[i], params[0], params[1], params[2], params[3]) -
                 energies[i];
      auto j = bm3_jacobian(volumes[i], params[0], params[1], params[2], params[3]);
      for (int a = 0; a < 4; ++a) {
        jtr[a] += j[a] * r;
        for (int b = 0; b < 4; ++b) jtj[a][b] += j[a] * j[b];
      }
    }
    double gmax = 0;
    for (int a = 0; a < 4; ++a) gmax = std::max(gmax, std::abs(jtr[a]));
    if (gmax <= 1e-10 * scale) {
      converged = true;
      break;
    }
    bool stepped = false;
    for (int attempt = 0; attempt < 60 && !stepped; ++attempt) {
      auto a = jtj;
      for (int d = 0; d < 4; ++d) a[d][d] += lambda * std::max(jtj[d][d], 1e-30);
      std::array<double, 4> rhs{-jtr[0], -jtr[1], -jtr[2], -jtr[3]}, step{};
      if (!solve4(a, rhs, step)) {
        lambda *= 10;
        continue;
      }
      std::array<double, 4> trial{params[0] + step[0], params[1] + step[1],
                                  params[2] + step[2], params[3] + step[3]};
      if (trial[1] > 0 && trial[2] > 0) {
        double trial_chi2 = residual_norm2(trial);
        if (trial_chi2 <= chi2 * (1.0 + 1e-14)) {
          params = trial;
          chi2 = trial_chi2;
          lambda = std::max(lambda * 0.25, 1e-12);
          stepped = true;
          break;
        }
      }
      lambda *= 10;
    }
    if (!stepped) {
      // No productive step left; treat the current point as stationary.
      converged = true;
      break;
    }
  }
  if (!converged) fail(Err::FitDiverged, "EOS fit did not reach the gradient tolerance");

  EOSFit fit;
  fit.e0 = params[0];
  fit.v0 = params[1];
  fit.b0 = params[2];
  fit.b0_prime = params[3];
  fit.residual_norm = std::sqrt(chi2);
  const auto [vlo, vhi] = std::minmax_element(volumes.begin(), volumes.end());
  if (fit.v0 < *vlo || fit.v0 > *vhi)
    fail(Err::NoInteriorMinimum, "fitted V0 escaped the sampled volume range");
  if (fit.b0 <= 0) fail(Err::FitDiverged, "fitted B0 is not positive");
  return fit;
}

double lattice_from_fit(const EOSFit& fit, const structure::StructureModel& reference) {
  // Cubic-conventional reference: diagonal cell with equal edges.
  const auto& c = reference.cell;
  const double a = c[0][0];
  const double eps = 1e-9 * std::max(1.0, std::abs(a));
  auto near = [&](double x, double y) { return std::abs(x - y) <= eps; };
  if (!(near(c[1][1], a) && near(c[2][2], a) && near(c[0][1], 0) && near(c[0][2], 0) &&
        near(c[1][0], 0) && near(c[1][2], 0) && near(c[2][0], 0) && near(c[2][1], 0)) ||
      a <= 0)
    fail(Err::NonCubicReference, "reference structure is not a cubic conventional cell");
  const double det_ref = structure::det(c);
  return std::cbrt(fit.v0) * (a / std::cbrt(det_ref));
}

double bulk_modulus_gpa(const EOSFit& fit) { return fit.b0 * kGpaPerRyA3; }

EnsembleStats analyze_beef(const std::vector<double>& slab_ens,
                           const std::vector<double>& molecule_ens,
                           const std::vector<double>& ontop_ens,
                           const std::vector<double>& fcc_ens) {
  const size_t n = slab_ens.size();
  if (molecule_ens.size() != n || ontop_ens.size() != n || fcc_ens.size() != n)
    fail(Err::LengthMismatch, "ensemble lists must all have the same length");
  if (n < 2) fail(Err::InvariantViolation, "ensemble statistics need n >= 2");

  double escale = 0.0;
  std::vector<double> dbe(n);
  for (size_t m = 0; m < n; ++m) {
    const double four_term = (ontop_ens[m] - slab_ens[m] - molecule_ens[m]) -
                             (fcc_ens[m] - slab_ens[m] - molecule_ens[m]);
    const double two_term = ontop_ens[m] - fcc_ens[m];
    escale = std::max({escale, std::abs(ontop_ens[m]), std::abs(slab_ens[m]),
                       std::abs(molecule_ens[m]), std::abs(fcc_ens[m])});
    if (std::abs(four_term - two_term) > 64.0 * std::numeric_limits<double>::epsilon() *
                                             std::max(1.0, escale))
      fail(Err::InvariantViolation, "four-term and two-term routes disagree");
    dbe[m] = two_term * kRyInEv;
  }

  EnsembleStats st;
  st.n = n;
  st.mean = std::accumulate(dbe.begin(), dbe.end(), 0.0) / n;
  double ss = 0;
  for (double d : dbe) ss += (d - st.mean) * (d - st.mean);
  st.stddev = std::sqrt(ss / (n - 1));
  st.sigma_distance = st.stddev > 0 ? std::abs(st.mean) / st.stddev
                                    : std::numeric_limits<double>::infinity();
  return st;
}

}  // namespace matforge::numerics
