#pragma once

// Small numerical kernels shared by the modules: Gauss-Legendre rules,
// Chebyshev-Lobatto collocation data, and straight-line least squares.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "conemass/error.hpp"

namespace conemass::numerics {

struct QuadratureRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

inline QuadratureRule gauss_legendre(int order) {
  require(order >= 1, ErrorKind::kDomain, "gauss_legendre: order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(static_cast<std::size_t>(order));
  rule.weights.resize(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

/// Integrates g over [a, b] with a composite Gauss-Legendre rule.
template <typename F>
double integrate(F&& g, double a, double b, const QuadratureRule& rule, int panels = 1) {
  double total = 0.0;
  const double width = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * width;
    const double mid = lo + 0.5 * width, half = 0.5 * width;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      total += rule.weights[i] * half * g(mid + half * rule.nodes[i]);
    }
  }
  return total;
}

/// Chebyshev-Gauss-Lobatto nodes on [-1, 1] in increasing order
/// together with the first-derivative collocation matrix (row-major).
struct ChebyshevLobatto {
  int degree = 0;
  std::vector<double> nodes;
  std::vector<double> diff;        // (degree+1)^2, D[i*(degree+1)+j]
  std::vector<double> bary;        // barycentric weights

  explicit ChebyshevLobatto(int deg) : degree(deg) {
    require(deg >= 2, ErrorKind::kDomain, "ChebyshevLobatto: degree must be >= 2");
    const int m = deg + 1;
    nodes.resize(static_cast<std::size_t>(m));
    bary.resize(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
      nodes[static_cast<std::size_t>(j)] = -std::cos(std::numbers::pi * j / deg);
      double w = (j % 2 == 0) ? 1.0 : -1.0;
      if (j == 0 || j == deg) w *= 0.5;
      bary[static_cast<std::size_t>(j)] = w;
    }
    diff.assign(static_cast<std::size_t>(m * m), 0.0);
    for (int i = 0; i < m; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < m; ++j) {
        if (i == j) continue;
        const double v = (bary[static_cast<std::size_t>(j)] / bary[static_cast<std::size_t>(i)]) /
                         (nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)]);
        diff[static_cast<std::size_t>(i * m + j)] = v;
        row_sum += v;
      }
      // Negative-sum trick keeps D exact on constants.
      diff[static_cast<std::size_t>(i * m + i)] = -row_sum;
    }
  }

  double d(int i, int j) const { return diff[static_cast<std::size_t>(i * (degree + 1) + j)]; }

  /// Barycentric interpolation of nodal values at x in [-1, 1].
  double interpolate(std::span<const double> values, double x) const {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
      const double dx = x - nodes[j];
      if (dx == 0.0) return values[j];
      const double w = bary[j] / dx;
      num += w * values[j];
      den += w;
    }
    return num / den;
  }
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  double r_squared = 1.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::kDomain,
          "fit_line: need at least two paired samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::kDomain, "fit_line: abscissae are all equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.slope * x[i] + fit.intercept);
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / n);
  fit.r_squared = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  return fit;
}

/// Volume of the unit sphere S^{n-1} in R^n.
inline double unit_sphere_volume(int n) {
  return 2.0 * std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n);
}

}  // namespace conemass::numerics
