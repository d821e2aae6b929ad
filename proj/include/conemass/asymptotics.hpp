#pragma once

// Two-weight Sobolev norms, critical exponents at the cone tip and at
// infinity, and power-law membership bookkeeping.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <limits>
#include <string>
#include <vector>

#include "conemass/error.hpp"
#include "conemass/geometry.hpp"
#include "conemass/numerics.hpp"
#include "conemass/radial_function.hpp"
#include "conemass/spectral.hpp"

namespace conemass {

inline constexpr double kCriticalTolerance = 1e-12;

struct CriticalPair {
  double plus = 0.0;   // nu^+ >= 0
  double minus = 0.0;  // nu^- <= 2 - n
};

/// Roots of nu^2 + (n-2) nu - lambda = 0.
inline CriticalPair critical_exponents(double lambda, int n) {
  require(lambda >= 0.0, ErrorKind::kDomain, "critical_exponents: lambda must be >= 0");
  require(n >= 3, ErrorKind::kDomain, "critical_exponents: n must be >= 3");
  const double b = n - 2.0;
  const double disc = std::sqrt(b * b + 4.0 * lambda);
  // The minus root is formed without cancellation; Vieta gives the other.
  const double minus = 0.5 * (-b - disc);
  const double plus = lambda == 0.0 ? 0.0 : -lambda / minus;
  return {plus, minus};
}

struct CatalogRow {
  std::size_t j = 0;
  double lambda = 0.0;
  std::int64_t multiplicity = 1;
  double nu_plus = 0.0;
  double nu_minus = 0.0;
};

struct ExponentCatalog {
  int n = 3;
  std::vector<CatalogRow> cone_critical;
  std::vector<int> infinity_critical;  // {k} and {2-n-k}, 0 <= k <= window, ascending

  /// All cone-critical exponents as one ascending list.
  std::vector<double> cone_set() const {
    std::vector<double> out;
    for (const auto& row : cone_critical) {
      out.push_back(row.nu_plus);
      out.push_back(row.nu_minus);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// Critical-exponent catalog of a spectrum; the infinity window matches the
/// number of cone rows (k = 0 .. rows-1).
inline ExponentCatalog exponent_catalog(const SpectralData& s, int j_max = kDefaultCatalogWindow) {
  ExponentCatalog cat;
  cat.n = s.n;
  const std::size_t rows = std::min(s.size(), static_cast<std::size_t>(j_max) + 1);
  for (std::size_t j = 0; j < rows; ++j) {
    const auto pair = critical_exponents(s.eigenvalues[j].lambda, s.n);
    cat.cone_critical.push_back({j, s.eigenvalues[j].lambda, s.eigenvalues[j].multiplicity,
                                 pair.plus, pair.minus});
  }
  for (int k = 0; k < static_cast<int>(rows); ++k) {
    cat.infinity_critical.push_back(k);
    cat.infinity_critical.push_back(2 - s.n - k);
  }
  std::sort(cat.infinity_critical.begin(), cat.infinity_critical.end());
  return cat;
}

struct Criticality {
  bool cone = false;
  bool infinity = false;
  bool certified = true;  // false when delta lies beyond the catalog window
  std::string warning;

  bool any() const { return cone || infinity; }
};

inline bool is_critical_at_infinity(double beta, int n, double tol = kCriticalTolerance) {
  const double k = std::round(beta);
  if (std::abs(beta - k) > tol) return false;
  return k >= 0.0 || k <= 2.0 - n;
}

/// Criticality of the weight pair (delta, beta) for the given cross section.
inline Criticality is_critical(double delta, double beta, const SpectralData& s,
                               int j_max = kDefaultCatalogWindow) {
  Criticality c;
  const std::size_t rows = std::min(s.size(), static_cast<std::size_t>(j_max) + 1);
  require(rows > 0, ErrorKind::kDomain, "is_critical: empty spectrum");
  for (std::size_t j = 0; j < rows; ++j) {
    const auto pair = critical_exponents(s.eigenvalues[j].lambda, s.n);
    if (std::abs(delta - pair.plus) <= kCriticalTolerance ||
        std::abs(delta - pair.minus) <= kCriticalTolerance) {
      c.cone = true;
    }
  }
  const auto last = critical_exponents(s.eigenvalues[rows - 1].lambda, s.n);
  if (!c.cone && (delta > last.plus || delta < last.minus)) {
    c.certified = false;
    c.warning = "delta lies beyond the catalog window; noncriticality not certified";
  }
  c.infinity = is_critical_at_infinity(beta, s.n);
  return c;
}

// --- weighted norms ----------------------------------------------------------

struct WeightPair {
  double delta = 0.0;  // cone-tip weight
  double beta = 0.0;   // infinity weight
  int k = 0;           // derivative order, 0..2 supported
  double p = 2.0;
};

struct Membership {
  bool tip = false;
  bool infinity = false;
};

/// r^nu chi_1 is in the space iff nu > delta; rho^mu chi_2 iff mu < beta.
inline Membership membership(double nu, double mu, const WeightPair& w) {
  return {nu > w.delta, mu < w.beta};
}

/// C^2 quintic ramp 6x^5 - 15x^4 + 10x^3 clamped to [0, 1].
inline double quintic_ramp(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
}

/// chi_1 = 1 on r < eps, 0 on r > 2 eps.
inline double tip_cutoff(double r, double eps) { return 1.0 - quintic_ramp((r - eps) / eps); }
/// chi_2 = 0 on r < R, 1 on r > 2R.
inline double infinity_cutoff(double r, double big_r) { return quintic_ramp((r - big_r) / big_r); }

struct WeightedNorm {
  double value = 0.0;  // +inf when a tail test fails
  bool tip_finite = true;
  bool infinity_finite = true;
  double tip_tail_ratio = 0.0;       // worst decade-to-decade ratio toward the tip
  double infinity_tail_ratio = 0.0;  // worst ratio toward infinity
};

inline constexpr double kTailRatioThreshold = 0.99;

/// ||u||_{W^{k,p}_{delta,beta}} for a radial function on a warped metric
/// dr^2 + f^2 g^N (no conformal factor). The integral is truncated to the
/// sampled range; divergence is detected by a geometric tail test over the
/// three outermost grid decades at each end.
inline WeightedNorm weighted_norm(const RadialFunction& u, const WeightPair& w, double eps,
                                  double big_r, const RadialMetric& m) {
  require(w.p >= 1.0 && w.k >= 0 && w.k <= 2, ErrorKind::kDomain,
          "weighted_norm: need p >= 1 and 0 <= k <= 2");
  require(eps > 0.0 && eps < 0.5 && big_r > 2.0, ErrorKind::kDomain,
          "weighted_norm: need 0 < eps < 1/2 and R > 2");
  require(!m.has_conformal_factor(), ErrorKind::kDomain,
          "weighted_norm: metric must be a pure warped product");
  require(u.r_min() <= eps * 1e-3 && u.r_max() >= 2.0 * big_r * 1e3, ErrorKind::kDomain,
          "weighted_norm: insufficient grid coverage (need three decades beyond each cutoff)");
  const int n = m.n;
  const double vol_n = m.spectral.is_round_unit_sphere ? numerics::unit_sphere_volume(n) : 1.0;
  const auto& g = u.grid();
  std::vector<double> density(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double r = g[i];
    const Jet f = m.warp(r);
    const double du[3] = {
        std::abs(u.values()[i]), std::abs(u.d1()[i]),
        std::sqrt(u.d2()[i] * u.d2()[i] +
                  (n - 1.0) * std::pow(u.d1()[i] * f.d1 / f.value, 2.0))};
    const double chi1 = tip_cutoff(r, eps), chi2 = infinity_cutoff(r, big_r);
    const double chi3 = 1.0 - chi1 - chi2;
    double sum = 0.0;
    for (int k = 0; k <= w.k; ++k) {
      const double a = std::pow(du[k], w.p);
      if (a == 0.0) continue;
      double weight = chi3;
      if (chi1 > 0.0) weight += chi1 * std::pow(r, -w.p * (w.delta - k) - n);
      if (chi2 > 0.0) weight += chi2 * std::pow(r, -w.p * (w.beta - k) - n);
      sum += weight * a;
    }
    // dvol = f^{n-1} dr vol(N) and dr = r dt.
    density[i] = sum * std::pow(f.value, n - 1.0) * vol_n * r;
  }

  // Trapezoid in t = ln r between consecutive samples.
  auto segment = [&](std::size_t i) {
    return 0.5 * (density[i] + density[i + 1]) * (std::log(g[i + 1]) - std::log(g[i]));
  };
  auto decade_sum = [&](double lo, double hi) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
      const double mid = std::sqrt(g[i] * g[i + 1]);
      if (mid >= lo && mid < hi) s += segment(i);
    }
    return s;
  };
  auto worst_ratio = [](double outer, double middle, double inner) {
    // Ratios of successive terms moving toward the end of the domain.
    double worst = 0.0;
    for (auto [a, b] : {std::pair{middle, outer}, std::pair{inner, middle}}) {
      if (a == 0.0) continue;
      worst = std::max(worst, b == 0.0 ? std::numeric_limits<double>::infinity() : a / b);
    }
    return worst;
  };

  WeightedNorm out;
  const double r0 = u.r_min(), r1 = u.r_max();
  out.tip_tail_ratio = worst_ratio(decade_sum(r0 * 100.0, r0 * 1000.0), decade_sum(r0 * 10.0, r0 * 100.0),
                                   decade_sum(r0, r0 * 10.0));
  out.infinity_tail_ratio = worst_ratio(decade_sum(r1 / 1000.0, r1 / 100.0),
                                        decade_sum(r1 / 100.0, r1 / 10.0), decade_sum(r1 / 10.0, r1 * 1.0000001));
  out.tip_finite = out.tip_tail_ratio < kTailRatioThreshold;
  out.infinity_finite = out.infinity_tail_ratio < kTailRatioThreshold;
  if (!out.tip_finite || !out.infinity_finite) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) total += segment(i);
  out.value = std::pow(total, 1.0 / w.p);
  return out;
}

}  // namespace conemass
