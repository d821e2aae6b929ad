#pragma once

// Radial profiles: closed-form jets and sampled functions on log grids.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conemass/error.hpp"

namespace conemass {

/// Value and first two r-derivatives of a radial function at one point.
struct Jet {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline Jet operator*(double c, const Jet& j) { return {c * j.value, c * j.d1, c * j.d2}; }
inline Jet operator+(const Jet& a, const Jet& b) {
  return {a.value + b.value, a.d1 + b.d1, a.d2 + b.d2};
}
inline Jet operator*(const Jet& a, const Jet& b) {
  return {a.value * b.value, a.d1 * b.value + a.value * b.d1,
          a.d2 * b.value + 2.0 * a.d1 * b.d1 + a.value * b.d2};
}

/// Jet of x^p composed with the jet a.
inline Jet pow(const Jet& a, double p) {
  const double v = std::pow(a.value, p);
  const double vp = p * std::pow(a.value, p - 1.0);
  const double vpp = p * (p - 1.0) * std::pow(a.value, p - 2.0);
  return {v, vp * a.d1, vpp * a.d1 * a.d1 + vp * a.d2};
}

/// Jet of r^p at r.
inline Jet power_jet(double r, double p) {
  return {std::pow(r, p), p * std::pow(r, p - 1.0), p * (p - 1.0) * std::pow(r, p - 2.0)};
}

/// A radial function known through its jet at any r in its domain. Breakpoints
/// mark radii where the profile is only finitely smooth (piecewise
/// definitions); solvers align their element boundaries with them.
class Profile {
 public:
  using Eval = std::function<Jet(double)>;

  Profile() : Profile(constant(1.0)) {}
  Profile(Eval eval, std::vector<double> breakpoints = {}, bool is_unit = false)
      : eval_(std::move(eval)), breakpoints_(std::move(breakpoints)), is_unit_(is_unit) {}

  static Profile constant(double c) {
    return Profile([c](double) { return Jet{c, 0.0, 0.0}; }, {}, c == 1.0);
  }
  static Profile power(double coefficient, double exponent) {
    return Profile(
        [coefficient, exponent](double r) { return coefficient * power_jet(r, exponent); });
  }

  Jet operator()(double r) const { return eval_(r); }
  double value(double r) const { return eval_(r).value; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  /// True only for the literal constant 1 (no conformal factor).
  bool is_unit() const { return is_unit_; }

 private:
  Eval eval_;
  std::vector<double> breakpoints_;
  bool is_unit_ = false;
};

/// n_points log-spaced samples from r_lo to r_hi inclusive.
inline std::vector<double> log_grid(double r_lo, double r_hi, std::size_t n_points) {
  require(r_lo > 0.0 && r_hi > r_lo, ErrorKind::kDomain, "log_grid: need 0 < r_lo < r_hi");
  require(n_points >= 2, ErrorKind::kDomain, "log_grid: need at least two points");
  std::vector<double> grid(n_points);
  const double ratio = r_hi / r_lo;
  for (std::size_t k = 0; k < n_points; ++k) {
    grid[k] = r_lo * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n_points - 1));
  }
  grid.front() = r_lo;
  grid.back() = r_hi;
  return grid;
}

/// Log grid with a fixed number of points per decade (endpoints included).
inline std::vector<double> log_grid_per_decade(double r_lo, double r_hi, int per_decade) {
  const double decades = std::log10(r_hi / r_lo);
  const auto n = static_cast<std::size_t>(std::ceil(decades * per_decade - 1e-9)) + 1;
  return log_grid(r_lo, r_hi, std::max<std::size_t>(n, 2));
}

namespace detail {

/// Finite-difference weights for derivatives 0..m at z from arbitrary nodes
/// (Fornberg's recursion). Returns weights[k][i] for derivative k, node i.
inline std::vector<std::vector<double>> fornberg_weights(double z, std::span<const double> x, int m) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> c(static_cast<std::size_t>(m) + 1, std::vector<double>(n, 0.0));
  double c1 = 1.0, c4 = x[0] - z;
  c[0][0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const int mn = std::min<int>(static_cast<int>(i), m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) {
          c[k][i] = c1 * (k * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
        }
        c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
      }
      for (int k = mn; k >= 1; --k) c[k][j] = (c4 * c[k][j] - k * c[k - 1][j]) / c3;
      c[0][j] = c4 * c[0][j] / c3;
    }
    c1 = c2;
  }
  return c;
}

}  // namespace detail

/// A scalar function of r sampled on a strictly increasing grid together with
/// its first two derivatives. Between nodes it is evaluated by quintic Hermite
/// interpolation, which uses all three samples.
class RadialFunction {
 public:
  RadialFunction() = default;
  RadialFunction(std::vector<double> grid, std::vector<double> values, std::vector<double> d1,
                 std::vector<double> d2)
      : grid_(std::move(grid)), values_(std::move(values)), d1_(std::move(d1)), d2_(std::move(d2)) {
    require(grid_.size() >= 2, ErrorKind::kDomain, "RadialFunction: need at least two samples");
    require(values_.size() == grid_.size() && d1_.size() == grid_.size() &&
                d2_.size() == grid_.size(),
            ErrorKind::kDomain, "RadialFunction: sample arrays differ in length");
    for (std::size_t k = 1; k < grid_.size(); ++k) {
      require(grid_[k] > grid_[k - 1], ErrorKind::kDomain,
              "RadialFunction: grid must be strictly increasing");
    }
    require(grid_.front() > 0.0, ErrorKind::kDomain, "RadialFunction: grid must be positive");
  }

  /// Samples a closed-form profile (analytic derivatives).
  static RadialFunction sample(const Profile& p, std::vector<double> grid) {
    std::vector<double> v(grid.size()), d1(grid.size()), d2(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Jet j = p(grid[k]);
      v[k] = j.value;
      d1[k] = j.d1;
      d2[k] = j.d2;
    }
    return RadialFunction(std::move(grid), std::move(v), std::move(d1), std::move(d2));
  }

  /// Builds derivative samples from values by 5-point finite differences
  /// (4th order for d1, 3rd order for d2 on nonuniform grids).
  static RadialFunction from_values(std::vector<double> grid, std::vector<double> values) {
    const std::size_t n = grid.size();
    require(n >= 5, ErrorKind::kDomain, "RadialFunction::from_values: need at least five samples");
    require(values.size() == n, ErrorKind::kDomain, "RadialFunction::from_values: size mismatch");
    std::vector<double> d1(n), d2(n);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t lo = std::min(k < 2 ? 0 : k - 2, n - 5);
      const std::span<const double> nodes(grid.data() + lo, 5);
      const auto w = detail::fornberg_weights(grid[k], nodes, 2);
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < 5; ++i) {
        a += w[1][i] * values[lo + i];
        b += w[2][i] * values[lo + i];
      }
      d1[k] = a;
      d2[k] = b;
    }
    return RadialFunction(std::move(grid), std::move(values), std::move(d1), std::move(d2));
  }

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& d1() const { return d1_; }
  const std::vector<double>& d2() const { return d2_; }
  std::size_t size() const { return grid_.size(); }
  double r_min() const { return grid_.front(); }
  double r_max() const { return grid_.back(); }

  Jet at(double r) const {
    require(r >= grid_.front() * (1.0 - 1e-12) && r <= grid_.back() * (1.0 + 1e-12),
            ErrorKind::kDomain, "RadialFunction::at: r outside sampled range");
    auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    std::size_t k = it == grid_.begin() ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
    if (k >= grid_.size() - 1) k = grid_.size() - 2;
    const double h = grid_[k + 1] - grid_[k];
    const double x = std::clamp((r - grid_[k]) / h, 0.0, 1.0);
    // Quintic Hermite basis and its first two x-derivatives.
    const double x2 = x * x, x3 = x2 * x, x4 = x3 * x, x5 = x4 * x;
    const std::array<double, 6> b = {1 - 10 * x3 + 15 * x4 - 6 * x5,
                                     x - 6 * x3 + 8 * x4 - 3 * x5,
                                     0.5 * (x2 - 3 * x3 + 3 * x4 - x5),
                                     10 * x3 - 15 * x4 + 6 * x5,
                                     -4 * x3 + 7 * x4 - 3 * x5,
                                     0.5 * (x3 - 2 * x4 + x5)};
    const std::array<double, 6> db = {-30 * x2 + 60 * x3 - 30 * x4,
                                      1 - 18 * x2 + 32 * x3 - 15 * x4,
                                      0.5 * (2 * x - 9 * x2 + 12 * x3 - 5 * x4),
                                      30 * x2 - 60 * x3 + 30 * x4,
                                      -12 * x2 + 28 * x3 - 15 * x4,
                                      0.5 * (3 * x2 - 8 * x3 + 5 * x4)};
    const std::array<double, 6> ddb = {-60 * x + 180 * x2 - 120 * x3,
                                       -36 * x + 96 * x2 - 60 * x3,
                                       0.5 * (2 - 18 * x + 36 * x2 - 20 * x3),
                                       60 * x - 180 * x2 + 120 * x3,
                                       -24 * x + 84 * x2 - 60 * x3,
                                       0.5 * (6 * x - 24 * x2 + 20 * x3)};
    const std::array<double, 6> c = {values_[k], h * d1_[k], h * h * d2_[k],
                                     values_[k + 1], h * d1_[k + 1], h * h * d2_[k + 1]};
    Jet out;
    for (std::size_t i = 0; i < 6; ++i) {
      out.value += c[i] * b[i];
      out.d1 += c[i] * db[i];
      out.d2 += c[i] * ddb[i];
    }
    out.d1 /= h;
    out.d2 /= h * h;
    return out;
  }

  double operator()(double r) const { return at(r).value; }

  Profile as_profile() const {
    auto self = std::make_shared<RadialFunction>(*this);
    return Profile([self](double r) { return self->at(r); });
  }

 private:
  std::vector<double> grid_, values_, d1_, d2_;
};

}  // namespace conemass
