#pragma once

// Conformal changes u^{4/(n-2)} g of radial metrics, the blow-up of the cone
// tip by a Green-type harmonic function, and mean curvature of radial slices.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "conemass/error.hpp"
#include "conemass/geometry.hpp"
#include "conemass/numerics.hpp"
#include "conemass/radial_function.hpp"
#include "conemass/radial_solver.hpp"

namespace conemass {

/// Scalar curvature of u^{4/(n-2)} g for g = dr^2 + f^2 g^N and radial u > 0.
inline double conformal_scalar(const RadialMetric& base, const Jet& u, double r) {
  require(!base.has_conformal_factor(), ErrorKind::kDomain,
          "conformal_scalar: base metric must be a pure warped product");
  require(u.value > 0.0, ErrorKind::kDomain, "conformal_scalar: u must be positive");
  const int n = base.n;
  const Jet f = base.warp(r);
  const double laplacian = u.d2 + (n - 1.0) * f.d1 / f.value * u.d1;
  const double sc = warped_scalar_curvature(base, r);
  return 4.0 * (n - 1.0) / (n - 2.0) * std::pow(u.value, -(n + 2.0) / (n - 2.0)) *
         (-laplacian + (n - 2.0) / (4.0 * (n - 1.0)) * sc * u.value);
}

/// Same, with the factor taken from the metric's own conformal profile.
inline double conformal_scalar(const RadialMetric& m, double r) {
  RadialMetric base = m;
  base.conformal = Profile::constant(1.0);
  return conformal_scalar(base, m.conformal(r), r);
}

/// Maps warp samples (r, f) to (s, F) with s = c / r and F = s f / r,
/// returned in increasing s. Applying it twice with the same c is the identity.
inline std::pair<std::vector<double>, std::vector<double>> invert_warp_samples(
    const std::vector<double>& r, const std::vector<double>& f, double c) {
  require(r.size() == f.size(), ErrorKind::kDomain, "invert_warp_samples: size mismatch");
  require(c > 0.0, ErrorKind::kDomain, "invert_warp_samples: c must be positive");
  std::vector<double> s(r.size()), F(r.size());
  for (std::size_t k = 0; k < r.size(); ++k) {
    const std::size_t i = r.size() - 1 - k;
    require(r[i] > 0.0, ErrorKind::kDomain, "invert_warp_samples: r must be positive");
    s[k] = c / r[i];
    F[k] = s[k] * f[i] / r[i];
  }
  return {std::move(s), std::move(F)};
}

/// Alpha' used in decay fits: min{1, alpha} shrunk by one percent.
inline double alpha_prime(double conical_order) {
  const double a = std::isnan(conical_order) ? 1.0 : std::min(1.0, conical_order);
  return a * (1.0 - 1e-2);
}

inline constexpr double kSliceConcavityThreshold = 1e-3;  // H s0 below minus this
inline constexpr double kSliceDeviationThreshold = 1e-2;
inline constexpr double kDecayFitFloor = 1e-8;

struct BlowUpResult {
  double delta = 0.0;
  int n = 3;
  double aperture = 1.0;  // f / r at the tip
  double s_scale = 1.0;   // s = s_scale / r
  std::vector<double> r;
  std::vector<double> s;  // increasing
  std::vector<double> warp, warp_ds;           // F(s) = s f(r) / r
  std::vector<double> conformal, conformal_ds; // Omega(s), g_delta = Omega (ds^2 + F^2 g^N)
  std::vector<double> deviation;               // |Omega - 1| + |F / (a s) - 1|
  std::vector<double> mean_curvature;          // toward decreasing s

  double decay_exponent = std::numeric_limits<double>::infinity();
  double decay_fit_residual = 0.0;
  double decay_window_lo = 0.0, decay_window_hi = 0.0;
  double alpha_prime = 0.99;

  bool s0_found = false;
  double s0 = 0.0;
  double h_at_s0 = 0.0;

  RadialMetric af_end;  // u_delta^{4/(n-2)} g in the original r coordinate
};

/// Metric u_delta^{4/(n-2)} g with u_delta = 1 + delta (u - 1); the deviation
/// u - 1 is passed directly.
inline RadialMetric conformally_blown_metric(const RadialMetric& m, double delta,
                                             const RadialFunction& deviation) {
  RadialMetric g = m;
  g.name = m.name + "_blown";
  const auto dev = std::make_shared<RadialFunction>(deviation);
  const Profile w = m.conformal;
  const bool has_w = m.has_conformal_factor();
  g.conformal = Profile(
      [dev, delta, w, has_w](double r) {
        const Jet d = dev->at(r);
        const Jet u{1.0 + delta * d.value, delta * d.d1, delta * d.d2};
        return has_w ? u * w(r) : u;
      },
      m.conformal.breakpoints());
  g.r_min = std::max(m.r_min, deviation.r_min());
  g.r_max = std::min(m.r_max, deviation.r_max());
  g.af_order = std::min(m.af_order, m.n - 2.0);
  g.conical_order = std::numeric_limits<double>::quiet_NaN();
  return g;
}

inline BlowUpResult blow_up(const RadialMetric& m, double delta, const RadialFunction& deviation) {
  require(delta > 0.0, ErrorKind::kDomain, "blow_up: delta must be positive");
  for (double v : deviation.values()) {
    require(v > 0.0, ErrorKind::kDomain, "blow_up: u must be strictly greater than 1");
  }
  const int n = m.n;
  const double p = 4.0 / (n - 2.0);
  BlowUpResult b;
  b.delta = delta;
  b.n = n;
  b.s_scale = std::pow(delta, 2.0 / (n - 2.0));
  b.alpha_prime = alpha_prime(m.conical_order);
  const auto& grid = deviation.grid();
  b.aperture = m.warp.value(grid.front()) / grid.front();
  const std::size_t N = grid.size();
  for (auto* v : {&b.r, &b.s, &b.warp, &b.warp_ds, &b.conformal, &b.conformal_ds, &b.deviation,
                  &b.mean_curvature}) {
    v->resize(N);
  }
  const double c = b.s_scale;
  for (std::size_t k = 0; k < N; ++k) {
    const std::size_t i = N - 1 - k;  // increasing s
    const double r = grid[i];
    const double s = c / r;
    const Jet f = m.warp(r);
    Jet W{1.0 + delta * deviation.values()[i], delta * deviation.d1()[i], 0.0};
    if (m.has_conformal_factor()) W = W * m.conformal(r);
    // W_hat = W r^{n-2} / delta, so Omega = W_hat^{4/(n-2)}.
    const double rn = std::pow(r, n - 2.0);
    const double wh = W.value * rn / delta;
    const double wh_r = (W.d1 * rn + (n - 2.0) * W.value * rn / r) / delta;
    const double omega = std::pow(wh, p);
    const double omega_r = p * std::pow(wh, p - 1.0) * wh_r;
    const double F = c * f.value / (r * r);
    const double F_r = c * (f.d1 / (r * r) - 2.0 * f.value / (r * r * r));
    const double to_s = -r * r / c;  // d/ds = (dr/ds) d/dr
    b.r[k] = r;
    b.s[k] = s;
    b.warp[k] = F;
    b.warp_ds[k] = to_s * F_r;
    b.conformal[k] = omega;
    b.conformal_ds[k] = to_s * omega_r;
    b.deviation[k] = std::abs(omega - 1.0) + std::abs(F / (b.aperture * s) - 1.0);
    const double phi = std::sqrt(omega) * F;
    const double phi_s = 0.5 / std::sqrt(omega) * b.conformal_ds[k] * F + std::sqrt(omega) * b.warp_ds[k];
    b.mean_curvature[k] = -(n - 1.0) / std::sqrt(omega) * phi_s / phi;
  }

  // Decay of the deviation over the outermost s-decade it is resolved on.
  std::size_t hi = N;
  while (hi > 0 && !(b.deviation[hi - 1] > kDecayFitFloor)) --hi;
  if (hi >= 2) {
    const double s_hi = b.s[hi - 1];
    std::vector<double> x, y;
    for (std::size_t k = 0; k < hi; ++k) {
      if (b.s[k] < 0.1 * s_hi || !(b.deviation[k] > kDecayFitFloor)) continue;
      x.push_back(std::log(b.s[k]));
      y.push_back(std::log(b.deviation[k]));
    }
    if (x.size() >= 2) {
      const auto fit = numerics::fit_line(x, y);
      b.decay_exponent = -fit.slope;
      b.decay_fit_residual = fit.rms_residual;
      b.decay_window_lo = std::exp(x.front());
      b.decay_window_hi = std::exp(x.back());
    }
  }

  for (std::size_t k = 0; k < N; ++k) {
    if (b.mean_curvature[k] * b.s[k] < -kSliceConcavityThreshold &&
        b.deviation[k] < kSliceDeviationThreshold) {
      b.s0_found = true;
      b.s0 = b.s[k];
      b.h_at_s0 = b.mean_curvature[k];
      break;
    }
  }
  b.af_end = conformally_blown_metric(m, delta, deviation);
  return b;
}

/// Blow-up by a Green-type harmonic function.
inline BlowUpResult blow_up(const RadialMetric& m, double delta, const GreenHarmonic& u) {
  return blow_up(m, delta, u.deviation);
}

enum class SliceNormal { kTowardDecreasing, kTowardIncreasing };

/// Mean curvature (trace of the second fundamental form, convention
/// H = div nu) of {s = s0} in the blown-up metric, normal toward the AF end.
inline double slice_mean_curvature(const BlowUpResult& b, double s0) {
  auto it = std::lower_bound(b.s.begin(), b.s.end(), s0 * (1.0 - 1e-12));
  require(it != b.s.end() && std::abs(*it - s0) <= 1e-9 * s0, ErrorKind::kDomain,
          "slice_mean_curvature: s0 is not a grid sample");
  const auto k = static_cast<std::size_t>(it - b.s.begin());
  require(b.warp[k] > 0.0 && std::isfinite(b.warp_ds[k]), ErrorKind::kDomain,
          "slice_mean_curvature: degenerate warp at s0");
  return b.mean_curvature[k];
}

/// Mean curvature of {r = s0} in a radial metric, treating r as the slice
/// coordinate.
inline double slice_mean_curvature(const RadialMetric& m, double s0,
                                   SliceNormal normal = SliceNormal::kTowardDecreasing) {
  require(s0 > m.r_min && s0 < m.r_max, ErrorKind::kDomain,
          "slice_mean_curvature: s0 outside the metric domain");
  const Jet f = m.warp(s0);
  require(f.value > 0.0 && std::isfinite(f.d1), ErrorKind::kDomain,
          "slice_mean_curvature: degenerate warp at s0");
  double omega = 1.0, omega_s = 0.0;
  if (m.has_conformal_factor()) {
    const Jet w = m.conformal(s0);
    const double p = m.conformal_exponent();
    omega = std::pow(w.value, p);
    omega_s = p * std::pow(w.value, p - 1.0) * w.d1;
  }
  const double phi = std::sqrt(omega) * f.value;
  const double phi_s = 0.5 / std::sqrt(omega) * omega_s * f.value + std::sqrt(omega) * f.d1;
  const double sign = normal == SliceNormal::kTowardDecreasing ? -1.0 : 1.0;
  return sign * (m.n - 1.0) / std::sqrt(omega) * phi_s / phi;
}

inline void write_csv(std::ostream& os, const BlowUpResult& b) {
  os << "s,warp,conformal_remainder,H\n";
  char line[160];
  for (std::size_t k = 0; k < b.s.size(); ++k) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", b.s[k], b.warp[k],
                  b.conformal[k] - 1.0, b.mean_curvature[k]);
    os << line;
  }
}

}  // namespace conemass
