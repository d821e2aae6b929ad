#pragma once

// Model cones, warped metrics dr^2 + f(r)^2 g^N with an optional conformal
// factor, and their curvature.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "conemass/error.hpp"
#include "conemass/numerics.hpp"
#include "conemass/radial_function.hpp"
#include "conemass/spectral.hpp"

namespace conemass {

inline constexpr int kDefaultCatalogWindow = 32;

/// g = u(r)^{4/(n-2)} (dr^2 + f(r)^2 g^N) on (r_min, r_max) x N.
///
/// The built-in families all use g^N = round unit sphere; a cone over the
/// round sphere of radius a is the warp f = a r.
struct RadialMetric {
  std::string name = "custom";
  int n = 3;
  SpectralData spectral;
  Profile warp;
  Profile conformal = Profile::constant(1.0);
  double cross_section_scalar = 2.0;  // Sc of g^N, assumed constant
  double einstein_constant = 1.0;     // kappa with Ric_{g^N} = kappa g^N
  double conical_order = std::numeric_limits<double>::infinity();  // alpha
  double af_order = std::numeric_limits<double>::infinity();       // tau
  double r_min = 0.0;
  double r_max = std::numeric_limits<double>::infinity();

  double conformal_exponent() const { return 4.0 / (n - 2); }
  bool has_conformal_factor() const { return !conformal.is_unit(); }

  std::vector<double> breakpoints() const {
    std::vector<double> b = warp.breakpoints();
    b.insert(b.end(), conformal.breakpoints().begin(), conformal.breakpoints().end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }
};

namespace metrics {

inline RadialMetric sphere_based(std::string name, int n) {
  require(n >= 3, ErrorKind::kDomain, "metric: n must be >= 3");
  RadialMetric m;
  m.name = std::move(name);
  m.n = n;
  m.spectral = sphere_spectrum(n, kDefaultCatalogWindow);
  m.cross_section_scalar = static_cast<double>((n - 1) * (n - 2));
  m.einstein_constant = static_cast<double>(n - 2);
  return m;
}

/// dr^2 + a^2 r^2 g_{S^{n-1}}; a = 1 is flat R^n minus a point.
inline RadialMetric cone(int n, double aperture = 1.0) {
  require(aperture > 0.0, ErrorKind::kDomain, "cone: aperture must be positive");
  RadialMetric m = sphere_based(aperture == 1.0 ? "flat" : "cone", n);
  m.warp = Profile::power(aperture, 1.0);
  if (aperture != 1.0) m.af_order = std::numeric_limits<double>::quiet_NaN();
  return m;
}

inline RadialMetric flat(int n) { return cone(n, 1.0); }

/// Model r^b-horn dr^2 + r^{2b} g^N.
inline RadialMetric horn(int n, double b) {
  require(b > 0.0, ErrorKind::kDomain, "horn: exponent b must be positive");
  RadialMetric m = sphere_based("horn", n);
  m.warp = Profile::power(1.0, b);
  m.conical_order = std::numeric_limits<double>::quiet_NaN();
  m.af_order = std::numeric_limits<double>::quiet_NaN();
  return m;
}

/// (1 + A r^{2-n})^{4/(n-2)} g_{R^n}; A > 0 only.
inline RadialMetric schwarzschild(int n, double coefficient) {
  require(coefficient > 0.0, ErrorKind::kDomain, "schwarzschild: mass parameter must be positive");
  RadialMetric m = sphere_based("schwarzschild", n);
  m.warp = Profile::power(1.0, 1.0);
  const double a = coefficient;
  m.conformal = Profile([a, n](double r) { return Jet{1.0, 0.0, 0.0} + a * power_jet(r, 2.0 - n); });
  m.af_order = n - 2.0;
  return m;
}

/// (1 - m r^{2-n})^{4/(n-2)} g_{R^n} on r > m^{1/(n-2)}: scalar flat with
/// negative mass; degenerates at the inner end into a horn.
inline RadialMetric neg_schwarzschild(int n, double mass) {
  require(mass > 0.0, ErrorKind::kDomain, "neg_schwarzschild: mass parameter must be positive");
  RadialMetric m = sphere_based("neg_schwarzschild", n);
  m.warp = Profile::power(1.0, 1.0);
  m.conformal =
      Profile([mass, n](double r) { return Jet{1.0, 0.0, 0.0} + (-mass) * power_jet(r, 2.0 - n); });
  m.af_order = n - 2.0;
  m.conical_order = std::numeric_limits<double>::quiet_NaN();
  m.r_min = std::pow(mass, 1.0 / (n - 2));
  return m;
}

namespace detail {

/// C^3 septic ramp from 0 at x <= 0 to 1 at x >= 1, as a jet in x.
inline Jet septic_ramp(double x) {
  if (x <= 0.0) return {0.0, 0.0, 0.0};
  if (x >= 1.0) return {1.0, 0.0, 0.0};
  const double x2 = x * x, x3 = x2 * x, x4 = x3 * x;
  return {x4 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x3),
          140.0 * x3 * (1.0 - x) * (1.0 - x) * (1.0 - x),
          420.0 * x2 * (1.0 - x) * (1.0 - x) * (1.0 - 2.0 * x)};
}

}  // namespace detail

/// Cone of aperture a for r < cone_radius blended (C^3) into flat space for
/// r > af_radius: f = r (a + (1 - a) S((r - r1)/(r2 - r1))).
inline RadialMetric glued(int n, double aperture, double cone_radius = 1.0, double af_radius = 2.0) {
  require(aperture > 0.0, ErrorKind::kDomain, "glued: aperture must be positive");
  require(cone_radius > 0.0 && af_radius > cone_radius, ErrorKind::kDomain,
          "glued: need 0 < cone_radius < af_radius");
  RadialMetric m = sphere_based("glued", n);
  const double a = aperture, r1 = cone_radius, w = af_radius - cone_radius;
  m.warp = Profile(
      [a, r1, w](double r) {
        Jet s = detail::septic_ramp((r - r1) / w);
        s.d1 /= w;
        s.d2 /= w * w;
        const Jet blend = Jet{a, 0.0, 0.0} + (1.0 - a) * s;
        return Jet{r, 1.0, 0.0} * blend;
      },
      {cone_radius, af_radius});
  return m;
}

/// Pullback of c^2 g under x -> x / c: warp c f(r/c), conformal u(r/c).
inline RadialMetric rescaled(const RadialMetric& base, double c) {
  require(c > 0.0, ErrorKind::kDomain, "rescaled: scale must be positive");
  RadialMetric m = base;
  m.name = base.name + "_rescaled";
  const Profile f = base.warp, u = base.conformal;
  auto scale_bp = [c](std::vector<double> b) {
    for (double& x : b) x *= c;
    return b;
  };
  m.warp = Profile(
      [f, c](double r) {
        const Jet j = f(r / c);
        return Jet{c * j.value, j.d1, j.d2 / c};
      },
      scale_bp(f.breakpoints()));
  if (u.is_unit()) {
    m.conformal = Profile::constant(1.0);
  } else {
    m.conformal = Profile(
        [u, c](double r) {
          const Jet j = u(r / c);
          return Jet{j.value, j.d1 / c, j.d2 / (c * c)};
        },
        scale_bp(u.breakpoints()));
  }
  m.r_min = base.r_min * c;
  m.r_max = base.r_max * c;
  return m;
}

}  // namespace metrics

// --- cone formulas ---------------------------------------------------------

/// Scalar curvature of dr^2 + r^2 g^N: (Sc_N - (n-1)(n-2)) / r^2.
inline double cone_scalar_curvature(double sc_cross_section, int n, double r) {
  require(r > 0.0, ErrorKind::kDomain, "cone_scalar_curvature: r must be positive");
  return (sc_cross_section - static_cast<double>((n - 1) * (n - 2))) / (r * r);
}

struct ConeRicci {
  double tangential = 0.0;  // coefficient of g^N
  double radial = 0.0;      // Ric(d_r, .)
};

/// Ricci tensor of the cone over an Einstein cross section Ric_{g^N} = kappa g^N.
inline ConeRicci cone_ricci(double kappa, int n) { return {kappa - (n - 2), 0.0}; }

/// Nonzero Levi-Civita data of dr^2 + r^2 g^N in the frame (e_i / r, d_r).
struct ConeConnection {
  double tangential_of_radial = 0.0;   // nabla_{e_i} d_r = c e_i
  double radial_of_tangential = 0.0;   // nabla_{d_r} e_i
  double radial_of_radial = 0.0;       // nabla_{d_r} d_r
  double normal_part_tangential = 0.0; // d_r-component of nabla_{e_i} e_i
};

inline ConeConnection cone_connection(int n, double r) {
  require(n >= 2, ErrorKind::kDomain, "cone_connection: n must be >= 2");
  require(r > 0.0, ErrorKind::kDomain, "cone_connection: r must be positive");
  return {1.0 / r, 0.0, 0.0, -1.0 / r};
}

// --- warped metrics --------------------------------------------------------

/// Warp of g written as dsigma^2 + F(sigma)^2 g^N, with arclength sigma.
/// Returns F and its first two sigma-derivatives at the coordinate radius r.
inline Jet arclength_warp(const RadialMetric& m, double r) {
  const Jet f = m.warp(r);
  if (!m.has_conformal_factor()) return f;
  const Jet w = m.conformal(r);
  require(w.value > 0.0, ErrorKind::kDomain, "conformal factor must be positive");
  const Jet c = pow(w, 2.0 / (m.n - 2));  // length scale factor
  const Jet F = c * f;
  const double Fs = F.d1 / c.value;
  const double Fss = (F.d2 * c.value - F.d1 * c.d1) / (c.value * c.value * c.value);
  return {F.value, Fs, Fss};
}

/// Scalar curvature of the metric at coordinate radius r, via its arclength
/// warped form: (Sc_N - (n-1)(n-2) F'^2 - 2(n-1) F F'') / F^2.
inline double warped_scalar_curvature(const RadialMetric& m, double r) {
  require(r > m.r_min && r > 0.0, ErrorKind::kDomain, "warped_scalar_curvature: r outside domain");
  const Jet F = arclength_warp(m, r);
  require(F.value > 0.0 && std::isfinite(F.d2), ErrorKind::kDomain,
          "warped_scalar_curvature: warp not smooth and positive at r");
  const int n = m.n;
  const double numerator = m.cross_section_scalar - (n - 1.0) * (n - 2.0) * F.d1 * F.d1 -
                           2.0 * (n - 1.0) * F.value * F.d2;
  return numerator / (F.value * F.value);
}

// --- horn exponent ---------------------------------------------------------

struct HornFit {
  double exponent = 0.0;     // b
  double coefficient = 0.0;  // c in F ~ c s^b
  double rms_residual = 0.0; // of the log-log fit
  bool is_horn = false;
  std::string diagnostic;
};

/// Reparametrizes by arclength s from the degenerate inner end and fits
/// F(s) ~ c s^b by log-log least squares on the innermost decade of s.
inline HornFit horn_exponent_fit(const RadialMetric& m, double residual_threshold = 1e-3) {
  const double scale = m.r_min > 0.0 ? m.r_min : 1.0;
  const double r0 = m.r_min;
  const double lo = 1e-12 * scale, hi = 1e-2 * scale;
  const int per_decade = 40;
  const auto offsets = log_grid_per_decade(lo, hi, per_decade);
  const auto rule = numerics::gauss_legendre(8);
  const double p = 2.0 / (m.n - 2);
  auto speed = [&](double r) {
    return m.has_conformal_factor() ? std::pow(m.conformal.value(r), p) : 1.0;
  };
  auto warp = [&](double r) {
    const double f = m.warp.value(r);
    return m.has_conformal_factor() ? std::pow(m.conformal.value(r), p) * f : f;
  };

  std::vector<double> s(offsets.size()), F(offsets.size());
  double acc = numerics::integrate(speed, r0, r0 + offsets[0], rule, 4);
  s[0] = acc;
  F[0] = warp(r0 + offsets[0]);
  for (std::size_t k = 1; k < offsets.size(); ++k) {
    acc += numerics::integrate(speed, r0 + offsets[k - 1], r0 + offsets[k], rule);
    s[k] = acc;
    F[k] = warp(r0 + offsets[k]);
  }

  HornFit fit;
  if (!(F.front() > 0.0) || !(F.front() < 1e-2 * F.back())) {
    fit.diagnostic = "metric does not degenerate at the inner end";
    return fit;
  }
  std::vector<double> ls, lf;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] > 10.0 * s[0] * (1.0 + 1e-12)) break;
    ls.push_back(std::log(s[k]));
    lf.push_back(std::log(F[k]));
  }
  const auto line = numerics::fit_line(ls, lf);
  fit.exponent = line.slope;
  fit.coefficient = std::exp(line.intercept);
  fit.rms_residual = line.rms_residual;
  fit.is_horn = line.rms_residual <= residual_threshold;
  if (!fit.is_horn) fit.diagnostic = "not a horn: log-log fit residual above threshold";
  return fit;
}

}  // namespace conemass
