#pragma once

// Spectral data of the closed cross section (N, g^N) of a cone.
//
// Only eigenvalues and multiplicities are stored: every downstream
// computation works one eigenmode at a time. Where an eigenfunction
// coefficient is reported it refers to an eigenfunction of unit L^2(N) norm.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conemass/error.hpp"

namespace conemass {

struct Eigenvalue {
  double lambda = 0.0;
  std::int64_t multiplicity = 1;
};

struct SpectralData {
  int n = 3;  // dimension of the cone, so dim N = n - 1
  std::vector<Eigenvalue> eigenvalues;
  std::optional<double> ricci_lower_bound;  // largest known kappa, Ric >= kappa g^N
  bool is_round_unit_sphere = false;

  double lambda(std::size_t j) const { return eigenvalues.at(j).lambda; }
  std::size_t size() const { return eigenvalues.size(); }

  /// First nonzero eigenvalue; throws if the table only holds lambda_0.
  double first_nonzero() const {
    require(eigenvalues.size() >= 2, ErrorKind::kDomain,
            "spectrum holds no nonzero eigenvalue");
    return eigenvalues[1].lambda;
  }
};

namespace detail {

inline std::int64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  std::int64_t result = 1;
  for (std::int64_t i = 1; i <= k; ++i) result = result * (n - k + i) / i;
  return result;
}

}  // namespace detail

/// Dimension of degree-j spherical harmonics on S^{n-1}.
inline std::int64_t spherical_harmonic_dimension(int n, int j) {
  return detail::binomial(n + j - 1, j) - detail::binomial(n + j - 3, j - 2);
}

/// Spectrum of the round unit sphere S^{n-1}: lambda_j = j(n-2+j).
inline SpectralData sphere_spectrum(int n, int j_max) {
  require(n >= 3, ErrorKind::kDomain, "sphere_spectrum: n must be >= 3");
  require(j_max >= 0, ErrorKind::kDomain, "sphere_spectrum: j_max must be >= 0");
  SpectralData s;
  s.n = n;
  s.is_round_unit_sphere = true;
  s.ricci_lower_bound = static_cast<double>(n - 2);
  s.eigenvalues.reserve(static_cast<std::size_t>(j_max) + 1);
  for (int j = 0; j <= j_max; ++j) {
    s.eigenvalues.push_back(
        {static_cast<double>(j) * (n - 2 + j), spherical_harmonic_dimension(n, j)});
  }
  return s;
}

/// Spectrum of (N, a^2 g^N) given that of (N, g^N). Eigenvalues scale by a^{-2}
/// and the Ricci bound (a tensor identity Ric(a^2 g) = Ric(g)) becomes
/// kappa / a^2 relative to the new metric.
inline SpectralData rescaled(const SpectralData& s, double radius) {
  require(radius > 0.0, ErrorKind::kDomain, "rescaled: radius must be positive");
  SpectralData out = s;
  for (auto& e : out.eigenvalues) e.lambda /= radius * radius;
  if (out.ricci_lower_bound) *out.ricci_lower_bound /= radius * radius;
  out.is_round_unit_sphere = s.is_round_unit_sphere && radius == 1.0;
  return out;
}

/// Minimum admissible lambda_1 on a cross section with Ric >= (n-2) g^N.
inline double lichnerowicz_floor(int n) {
  require(n >= 3, ErrorKind::kDomain, "lichnerowicz_floor: n must be >= 3");
  return static_cast<double>(n - 1);
}

/// True when the Ricci bound forces lambda_1 >= n-1 and the table has less.
inline bool violates_lichnerowicz(const SpectralData& s, double tol = 1e-12) {
  if (!s.ricci_lower_bound || *s.ricci_lower_bound < s.n - 2 - tol) return false;
  if (s.eigenvalues.size() < 2) return false;
  // Lichnerowicz: lambda_1 >= (n-1)/(n-2) * kappa.
  const double floor = static_cast<double>(s.n - 1) / (s.n - 2) * *s.ricci_lower_bound;
  return s.eigenvalues[1].lambda < floor - tol;
}

/// Checks the SpectralData invariants; an empty result means valid.
inline std::vector<std::string> validate_spectrum(const SpectralData& s) {
  std::vector<std::string> violations;
  if (s.n < 3) violations.emplace_back("n < 3");
  if (s.eigenvalues.empty()) {
    violations.emplace_back("empty spectrum");
    return violations;
  }
  if (s.eigenvalues[0].lambda != 0.0) violations.emplace_back("lambda_0 != 0");
  if (s.eigenvalues[0].multiplicity != 1)
    violations.emplace_back("lambda_0 multiplicity != 1 (cross section not connected)");
  for (std::size_t j = 0; j < s.eigenvalues.size(); ++j) {
    const auto& e = s.eigenvalues[j];
    if (!(e.lambda >= 0.0)) violations.emplace_back("negative eigenvalue at j=" + std::to_string(j));
    if (e.multiplicity < 1)
      violations.emplace_back("nonpositive multiplicity at j=" + std::to_string(j));
    if (j > 0 && !(e.lambda > s.eigenvalues[j - 1].lambda)) {
      violations.emplace_back("not increasing at j=" + std::to_string(j));
    }
  }
  if (s.is_round_unit_sphere) {
    for (std::size_t j = 0; j < s.eigenvalues.size(); ++j) {
      const double expected = static_cast<double>(j) * (s.n - 2 + static_cast<double>(j));
      if (s.eigenvalues[j].lambda != expected) {
        violations.emplace_back("round sphere flag but lambda_" + std::to_string(j) +
                                " != j(n-2+j)");
      }
    }
  }
  if (violates_lichnerowicz(s)) violations.emplace_back("lambda_1 below Lichnerowicz floor n-1");
  return violations;
}

}  // namespace conemass
