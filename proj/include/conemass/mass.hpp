#pragma once

// ADM mass of the asymptotically flat end of a radial metric.
//
// Near infinity the metric is written in Euclidean coordinates x with
// rho = |x| = r:
//
//   g_ij = phi (delta_ij + psi P_ij),  phi = w^{4/(n-2)},  psi = f^2/rho^2 - 1,
//   P_ij = delta_ij - x_i x_j / rho^2.
//
// With chi = phi psi the flux integrand is radial and the sphere integral
// divided by the unit-sphere volume is
//
//   F(R) = -(n-1) R^{n-1} (phi' + chi' + chi / R).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "conemass/conformal.hpp"
#include "conemass/error.hpp"
#include "conemass/geometry.hpp"
#include "conemass/numerics.hpp"
#include "conemass/radial_solver.hpp"

namespace conemass {

inline double adm_flux(const RadialMetric& m, double R) {
  require(R > 0.0 && R > m.r_min && R <= m.r_max, ErrorKind::kDomain,
          "adm_flux: R outside the metric domain");
  require(!std::isnan(m.af_order), ErrorKind::kDomain,
          "adm_flux: metric has no asymptotically flat end");
  const int n = m.n;
  const Jet f = m.warp(R);
  double phi = 1.0, phi_r = 0.0;
  if (m.has_conformal_factor()) {
    const Jet w = m.conformal(R);
    require(w.value > 0.0, ErrorKind::kDomain, "adm_flux: conformal factor must be positive");
    const double p = m.conformal_exponent();
    phi = std::pow(w.value, p);
    phi_r = p * std::pow(w.value, p - 1.0) * w.d1;
  }
  // psi = f^2/R^2 - 1 formed as (f/R - 1)(f/R + 1) to keep small deviations.
  const double q = f.value / R;
  const double psi = (q - 1.0) * (q + 1.0);
  const double psi_r = 2.0 * q * (f.d1 - q) / R;
  const double chi = phi * psi;
  const double chi_r = phi_r * psi + phi * psi_r;
  return -(n - 1.0) * std::pow(R, n - 1.0) * (phi_r + chi_r + chi / R);
}

/// Geometric ladder from lo to hi with `count` radii.
inline std::vector<double> geometric_ladder(double lo, double hi, int count) {
  require(count >= 3 && lo > 0.0 && hi > lo, ErrorKind::kConfig,
          "geometric_ladder: need count >= 3 and 0 < lo < hi");
  return log_grid(lo, hi, static_cast<std::size_t>(count));
}

inline std::vector<double> default_ladder() { return geometric_ladder(1e2, 1e4, 5); }

struct MassReport {
  std::vector<double> radii;
  std::vector<double> fluxes;
  double mass = 0.0;
  double order = 0.0;      // kappa used in the extrapolation
  double order_fit = 0.0;  // kappa fitted from the last three fluxes
  double error_bar = 0.0;  // |last extrapolant - previous|
  double previous = 0.0;   // extrapolant from all but the first radius
  double omega_n = 0.0;
  bool non_monotone_tail = false;
};

namespace detail {

/// Polynomial extrapolation to x = 0 through (x_i, y_i) (Neville).
inline double neville_at_zero(std::vector<double> x, std::vector<double> y) {
  const std::size_t m = x.size();
  for (std::size_t level = 1; level < m; ++level) {
    for (std::size_t i = 0; i + level < m; ++i) {
      y[i] = (x[i + level] * y[i] - x[i] * y[i + 1]) / (x[i + level] - x[i]);
    }
  }
  return y[0];
}

/// kappa with (F2-F1)/(F3-F2) = (R1^-k - R2^-k)/(R2^-k - R3^-k), by bisection.
inline double fit_order(double r1, double r2, double r3, double ratio) {
  auto model = [&](double k) {
    const double a = std::pow(r1, -k), b = std::pow(r2, -k), c = std::pow(r3, -k);
    return (a - b) / (b - c);
  };
  double lo = 1e-3, hi = 30.0;
  if (!(ratio > model(lo)) || !(ratio < model(hi))) return std::numeric_limits<double>::quiet_NaN();
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (model(mid) < ratio ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline constexpr double kOrderSnap = 0.1;

/// Extrapolates the flux to R = infinity in powers of R^{-kappa}.
inline MassReport adm_mass(const RadialMetric& m, const std::vector<double>& ladder) {
  require(ladder.size() >= 3, ErrorKind::kConfig, "adm_mass: ladder needs at least three radii");
  for (std::size_t i = 1; i < ladder.size(); ++i) {
    require(ladder[i] > ladder[i - 1], ErrorKind::kConfig, "adm_mass: ladder must be increasing");
  }
  MassReport rep;
  rep.radii = ladder;
  rep.omega_n = numerics::unit_sphere_volume(m.n);
  for (double R : ladder) rep.fluxes.push_back(adm_flux(m, R));
  const auto& F = rep.fluxes;
  const std::size_t k = F.size();

  double scale = 0.0, spread = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    scale = std::max(scale, std::abs(F[i]));
    if (i > 0) spread = std::max(spread, std::abs(F[i] - F[i - 1]));
  }
  if (spread <= 1e-14 * scale || spread == 0.0) {
    rep.mass = F.back();
    rep.previous = F[k - 2];
    rep.order = rep.order_fit = 0.0;
    rep.error_bar = std::abs(rep.mass - rep.previous);
    return rep;
  }
  for (std::size_t i = 2; i < k; ++i) {
    if ((F[i] - F[i - 1]) * (F[i - 1] - F[i - 2]) < 0.0) rep.non_monotone_tail = true;
  }
  const double d1 = F[k - 2] - F[k - 3], d2 = F[k - 1] - F[k - 2];
  rep.order_fit = d2 != 0.0 ? detail::fit_order(ladder[k - 3], ladder[k - 2], ladder[k - 1], d1 / d2)
                            : std::numeric_limits<double>::quiet_NaN();
  double kappa = rep.order_fit;
  if (std::isnan(kappa)) {
    rep.non_monotone_tail = true;
    kappa = std::isfinite(m.af_order) && m.af_order > 0.0 ? m.af_order : m.n - 2.0;
  } else if (std::abs(kappa - std::round(kappa)) < kOrderSnap && std::round(kappa) >= 1.0) {
    kappa = std::round(kappa);
  }
  rep.order = kappa;
  std::vector<double> x(k);
  for (std::size_t i = 0; i < k; ++i) x[i] = std::pow(ladder[i], -kappa);
  rep.mass = detail::neville_at_zero(x, F);
  rep.previous = detail::neville_at_zero(std::vector<double>(x.begin() + 1, x.end()),
                                         std::vector<double>(F.begin() + 1, F.end()));
  rep.error_bar = std::abs(rep.mass - rep.previous);
  return rep;
}

inline MassReport adm_mass(const RadialMetric& m) { return adm_mass(m, default_ladder()); }

inline void write_csv(std::ostream& os, const MassReport& r) {
  os << "R,flux\n";
  char line[96];
  for (std::size_t i = 0; i < r.radii.size(); ++i) {
    std::snprintf(line, sizeof line, "%.17g,%.17g\n", r.radii[i], r.fluxes[i]);
    os << line;
  }
}

// --- mass shift under the blow-up ----------------------------------------------

struct MassShiftResult {
  std::vector<double> deltas;
  std::vector<double> masses;
  std::vector<double> error_bars;
  double slope = 0.0;
  double intercept = 0.0;
  double nonlinearity = 0.0;  // 1 - R^2 of the linear fit
  double A = 0.0;
  double coefficient = 0.0;   // slope / A
  double rel_to_4_n_minus_2 = 0.0;
  double rel_to_4_n_minus_1 = 0.0;
  std::string matched;        // "4(n-1)", "4(n-2)" or "neither"
};

inline constexpr double kNonlinearityThreshold = 1e-6;
inline constexpr double kShiftMatchTolerance = 5e-3;

/// m(g_delta) for each delta, its linear fit in delta, and c = slope / A.
inline MassShiftResult mass_shift_experiment(const RadialMetric& m, const GreenHarmonic& u,
                                             const std::vector<double>& deltas,
                                             const std::vector<double>& ladder = default_ladder(),
                                             double threshold = kNonlinearityThreshold) {
  require(deltas.size() >= 3, ErrorKind::kConfig, "mass_shift_experiment: need at least three deltas");
  MassShiftResult out;
  out.deltas = deltas;
  out.A = u.A;
  for (double d : deltas) {
    require(d >= 0.0, ErrorKind::kConfig, "mass_shift_experiment: deltas must be nonnegative");
    const RadialMetric g = d == 0.0 ? m : conformally_blown_metric(m, d, u.deviation);
    const MassReport rep = adm_mass(g, ladder);
    out.masses.push_back(rep.mass);
    out.error_bars.push_back(rep.error_bar);
  }
  const auto fit = numerics::fit_line(out.deltas, out.masses);
  out.slope = fit.slope;
  out.intercept = fit.intercept;
  out.nonlinearity = 1.0 - fit.r_squared;
  out.coefficient = out.slope / out.A;
  const double c2 = 4.0 * (m.n - 2.0), c1 = 4.0 * (m.n - 1.0);
  out.rel_to_4_n_minus_2 = std::abs(out.coefficient - c2) / c2;
  out.rel_to_4_n_minus_1 = std::abs(out.coefficient - c1) / c1;
  out.matched = out.rel_to_4_n_minus_1 < kShiftMatchTolerance   ? "4(n-1)"
                : out.rel_to_4_n_minus_2 < kShiftMatchTolerance ? "4(n-2)"
                                                                 : "neither";
  require(out.nonlinearity < threshold, ErrorKind::kInvariant,
          "mass_shift_experiment: masses are not linear in delta");
  return out;
}

}  // namespace conemass
