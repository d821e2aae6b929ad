#pragma once

// Per-mode radial solves with prescribed power-law branches at the cone tip
// and at infinity.
//
// A function v(r) phi_j(y), with phi_j an eigenfunction of eigenvalue
// lambda_j on the cross section, satisfies Delta_g (v phi_j) - V v phi_j =
// rhs phi_j on g = w^{4/(n-2)} (dr^2 + f^2 g^N) iff
//
//   v'' + ((n-1) f'/f + 2 w'/w) v' - (lambda_j / f^2 + w^{4/(n-2)} V) v
//       = w^{4/(n-2)} rhs.
//
// In t = ln r this becomes v_tt + P v_t - Q v = S, which is discretized by
// Chebyshev-Lobatto collocation on elements of equal t-width (plus metric
// breakpoints), C^1 matching between elements, and one boundary row at each
// truncation radius. Boundary rows pin the amplitude of one of the two local
// power-law branches r^{nu}, nu^2 + P nu - Q = 0, and leave the other free.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "conemass/asymptotics.hpp"
#include "conemass/error.hpp"
#include "conemass/geometry.hpp"
#include "conemass/numerics.hpp"
#include "conemass/radial_function.hpp"

namespace conemass {

struct SolverOptions {
  double r_in = 1e-4;
  double r_out = 1e4;
  int points_per_decade = 400;   // output sampling
  int elements_per_decade = 4;
  int degree = 20;               // polynomial degree per element
  double residual_tolerance = 1e-8;
  double refine_tolerance = 1e-9;  // element bisection target
  int max_refinements = 8;
  std::vector<double> fixed_mesh;  // element breaks in t = ln r; disables refinement when set

  /// Grid-doubling companion used by refinement oracles.
  SolverOptions refined() const {
    SolverOptions o = *this;
    o.elements_per_decade *= 2;
    return o;
  }
};

enum class TipBranch { kRegular, kGreen, kDirichlet };
enum class InfinityBranch { kDecay, kNormalized, kCoordinate, kDirichlet };

struct BoundaryBranchSpec {
  TipBranch tip = TipBranch::kRegular;
  InfinityBranch infinity = InfinityBranch::kDecay;
  double tip_value = 0.0;       // dirichlet only
  double infinity_value = 0.0;  // dirichlet only
};

inline TipBranch parse_tip_branch(const std::string& s, double* value) {
  if (s == "regular") return TipBranch::kRegular;
  if (s == "green") return TipBranch::kGreen;
  if (s.rfind("dirichlet:", 0) == 0) {
    *value = std::stod(s.substr(10));
    return TipBranch::kDirichlet;
  }
  throw Error(ErrorKind::kConfig, "unknown tip branch '" + s + "'");
}

inline InfinityBranch parse_infinity_branch(const std::string& s, double* value) {
  if (s == "decay") return InfinityBranch::kDecay;
  if (s == "normalized") return InfinityBranch::kNormalized;
  if (s == "coordinate") return InfinityBranch::kCoordinate;
  if (s.rfind("dirichlet:", 0) == 0) {
    *value = std::stod(s.substr(10));
    return InfinityBranch::kDirichlet;
  }
  throw Error(ErrorKind::kConfig, "unknown infinity branch '" + s + "'");
}

struct PowerLawFit {
  double exponent = 0.0;
  double coefficient = 0.0;
  double residual = 0.0;  // rms of the log-log fit
};

/// Least-squares fit of log|u - offset| against log r over [r_a, r_b].
inline PowerLawFit fit_power_law(const RadialFunction& u, double r_a, double r_b,
                                 double offset = 0.0) {
  require(r_a < r_b, ErrorKind::kDomain, "fit_power_law: empty window");
  require(r_a >= u.r_min() * (1 - 1e-12) && r_b <= u.r_max() * (1 + 1e-12), ErrorKind::kDomain,
          "fit_power_law: window outside grid");
  std::vector<double> x, y;
  int sign = 0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double r = u.grid()[k];
    if (r < r_a * (1 - 1e-12) || r > r_b * (1 + 1e-12)) continue;
    const double d = u.values()[k] - offset;
    const int s = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    require(s != 0 && (sign == 0 || s == sign), ErrorKind::kDomain,
            "fit_power_law: u - offset is not single-signed on the window");
    sign = s;
    x.push_back(std::log(r));
    y.push_back(std::log(std::abs(d)));
  }
  require(x.size() >= 2, ErrorKind::kDomain, "fit_power_law: fewer than two samples in window");
  const auto line = numerics::fit_line(x, y);
  return {line.slope, sign * std::exp(line.intercept), line.rms_residual};
}

/// Least-squares coefficient c of u - offset = c r^exponent over [r_a, r_b].
inline double fit_coefficient(const RadialFunction& u, double r_a, double r_b, double exponent,
                              double offset = 0.0) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double r = u.grid()[k];
    if (r < r_a * (1 - 1e-12) || r > r_b * (1 + 1e-12)) continue;
    // Weighted so every sample counts relative to the model size.
    const double basis = 1.0;
    const double target = (u.values()[k] - offset) / std::pow(r, exponent);
    num += basis * target;
    den += basis * basis;
  }
  require(den > 0.0, ErrorKind::kDomain, "fit_coefficient: empty window");
  return num / den;
}

struct BranchPair {
  double growing = 0.0;  // larger root
  double decaying = 0.0; // smaller root
};

struct ModeSolution {
  std::size_t mode_index = 0;
  double lambda = 0.0;
  RadialFunction solution;
  PowerLawFit tip_fit;       // innermost decade
  PowerLawFit infinity_fit;  // outermost decade, offset below
  double infinity_offset = 0.0;
  BranchPair tip_branches;
  BranchPair infinity_branches;
  double residual = 0.0;  // max relative ODE residual on the output grid
  double log_abs_determinant = 0.0;
  double determinant_sign = 1.0;
  std::vector<double> mesh;  // final element breaks in t = ln r
  std::vector<double> pointwise_residual;
};

struct ModeProblem {
  std::size_t mode_index = 0;
  double lambda = 0.0;
  std::optional<Profile> rhs;        // source term
  std::optional<Profile> potential;  // V in Delta v - V v
  BoundaryBranchSpec bc;
};

namespace detail {

struct OdeCoefficients {
  double P = 0.0;  // coefficient of v_t
  double Q = 0.0;  // coefficient of -v
  double S = 0.0;  // source
};

inline OdeCoefficients ode_coefficients(const RadialMetric& m, const ModeProblem& prob, double r) {
  const Jet f = m.warp(r);
  const int n = m.n;
  double p = (n - 1.0) * f.d1 / f.value;
  double phi = 1.0;
  if (m.has_conformal_factor()) {
    const Jet w = m.conformal(r);
    p += 2.0 * w.d1 / w.value;
    phi = std::pow(w.value, 4.0 / (n - 2));
  }
  OdeCoefficients c;
  c.P = r * p - 1.0;
  c.Q = r * r * prob.lambda / (f.value * f.value);
  if (prob.potential) c.Q += r * r * phi * prob.potential->value(r);
  if (prob.rhs) c.S = r * r * phi * prob.rhs->value(r);
  return c;
}

/// Roots of the frozen-coefficient indicial equation nu^2 + P nu - Q = 0.
inline BranchPair local_branches(const OdeCoefficients& c) {
  const double disc = std::sqrt(c.P * c.P + 4.0 * c.Q);
  const double lo = 0.5 * (-c.P - disc);
  const double hi = 0.5 * (-c.P + disc);
  return {hi, lo};
}

struct Mesh {
  std::vector<double> breaks;  // in t
  numerics::ChebyshevLobatto cheb;
  std::vector<double> d2;      // D*D on the reference element

  Mesh(std::vector<double> b, int degree) : breaks(std::move(b)), cheb(degree) {
    const int m = degree + 1;
    d2.assign(static_cast<std::size_t>(m * m), 0.0);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int k = 0; k < m; ++k) s += cheb.d(i, k) * cheb.d(k, j);
        d2[static_cast<std::size_t>(i * m + j)] = s;
      }
    for (int i = 0; i < m; ++i) {
      double row_sum = 0.0;
      for (int j = 0; j < m; ++j)
        if (j != i) row_sum += d2[static_cast<std::size_t>(i * m + j)];
      d2[static_cast<std::size_t>(i * m + i)] = -row_sum;
    }
  }

  int degree() const { return cheb.degree; }
  std::size_t elements() const { return breaks.size() - 1; }
  std::size_t unknowns() const { return elements() * static_cast<std::size_t>(degree()) + 1; }
  std::size_t index(std::size_t e, int i) const { return e * static_cast<std::size_t>(degree()) + static_cast<std::size_t>(i); }
  double scale(std::size_t e) const { return 2.0 / (breaks[e + 1] - breaks[e]); }
  double t_node(std::size_t e, int i) const {
    return 0.5 * (breaks[e] + breaks[e + 1]) +
           0.5 * (breaks[e + 1] - breaks[e]) * cheb.nodes[static_cast<std::size_t>(i)];
  }
  double second(int i, int j) const { return d2[static_cast<std::size_t>(i * (degree() + 1) + j)]; }
};

inline Mesh build_mesh(const SolverOptions& o, std::vector<double> breakpoints) {
  const double t0 = std::log(o.r_in), t1 = std::log(o.r_out);
  const double width = std::log(10.0) / o.elements_per_decade;
  std::vector<double> fixed;
  for (double b : breakpoints) {
    if (b > o.r_in && b < o.r_out) fixed.push_back(std::log(b));
  }
  std::vector<double> breaks = {t0, t1};
  const auto steps = static_cast<int>(std::ceil((t1 - t0) / width - 1e-9));
  for (int k = 1; k < steps; ++k) {
    const double t = t0 + (t1 - t0) * k / steps;
    bool near_fixed = false;
    for (double f : fixed) near_fixed = near_fixed || std::abs(t - f) < 0.25 * width;
    if (!near_fixed) breaks.push_back(t);
  }
  breaks.insert(breaks.end(), fixed.begin(), fixed.end());
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  return Mesh(std::move(breaks), o.degree);
}

struct BoundaryRow {
  double value_coeff = 0.0;
  double deriv_coeff = 0.0;  // multiplies v_t
  double rhs = 0.0;
};

/// Local exponent of the source near an end, from two samples one decade apart.
inline std::optional<double> source_exponent(const RadialMetric& m, const ModeProblem& prob,
                                             double r_near, double r_far) {
  if (!prob.rhs) return std::nullopt;
  const double a = ode_coefficients(m, prob, r_near).S;
  const double b = ode_coefficients(m, prob, r_far).S;
  if (a == 0.0 || b == 0.0) return std::nullopt;
  return std::log(std::abs(b / a)) / std::log(r_far / r_near);
}

struct Collocation {
  Eigen::VectorXd v;
  double log_abs_determinant = 0.0;
  double determinant_sign = 1.0;
};

inline Collocation collocate(const RadialMetric& m, const ModeProblem& prob, const Mesh& mesh,
                             const BoundaryRow& tip_row, const BoundaryRow& inf_row) {
  const int N = mesh.degree();
  const std::size_t unknowns = mesh.unknowns();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(unknowns * static_cast<std::size_t>(N + 2));
  Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(unknowns));
  auto put = [&](std::size_t row, std::size_t col, double v) {
    if (v != 0.0) triplets.emplace_back(static_cast<int>(row), static_cast<int>(col), v);
  };

  for (std::size_t e = 0; e < mesh.elements(); ++e) {
    const double s = mesh.scale(e);
    for (int i = 1; i < N; ++i) {
      const auto c = ode_coefficients(m, prob, std::exp(mesh.t_node(e, i)));
      const std::size_t row = mesh.index(e, i);
      for (int j = 0; j <= N; ++j) {
        double a = s * s * mesh.second(i, j) + c.P * s * mesh.cheb.d(i, j);
        if (i == j) a -= c.Q;
        put(row, mesh.index(e, j), a);
      }
      b[static_cast<Eigen::Index>(row)] = c.S;
    }
    if (e + 1 < mesh.elements()) {
      // v_t continuous across the shared node.
      const std::size_t row = mesh.index(e + 1, 0);
      const double s_next = mesh.scale(e + 1);
      for (int j = 0; j <= N; ++j) put(row, mesh.index(e, j), s * mesh.cheb.d(N, j));
      for (int j = 0; j <= N; ++j) put(row, mesh.index(e + 1, j), -s_next * mesh.cheb.d(0, j));
    }
  }

  const double s0 = mesh.scale(0);
  for (int j = 0; j <= N; ++j) {
    double a = tip_row.deriv_coeff * s0 * mesh.cheb.d(0, j);
    if (j == 0) a += tip_row.value_coeff;
    put(0, mesh.index(0, j), a);
  }
  b[0] = tip_row.rhs;
  const std::size_t last = mesh.elements() - 1;
  const double sl = mesh.scale(last);
  for (int j = 0; j <= N; ++j) {
    double a = inf_row.deriv_coeff * sl * mesh.cheb.d(N, j);
    if (j == N) a += inf_row.value_coeff;
    put(unknowns - 1, mesh.index(last, j), a);
  }
  b[static_cast<Eigen::Index>(unknowns - 1)] = inf_row.rhs;

  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(unknowns), static_cast<Eigen::Index>(unknowns));
  A.setFromTriplets(triplets.begin(), triplets.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(A);
  require(lu.info() == Eigen::Success, ErrorKind::kSolver,
          "solve_mode: collocation matrix is singular: " + lu.lastErrorMessage());
  Collocation out;
  out.v = lu.solve(b);
  require(lu.info() == Eigen::Success && out.v.allFinite(), ErrorKind::kSolver,
          "solve_mode: linear solve failed");
  for (int step = 0; step < 2; ++step) {
    const Eigen::VectorXd correction = lu.solve(b - A * out.v);
    out.v += correction;
  }
  out.log_abs_determinant = lu.logAbsDeterminant();
  out.determinant_sign = lu.signDeterminant();
  return out;
}

/// Nodal values and t-derivatives per element.
struct NodalSolution {
  std::vector<std::vector<double>> v, vt, vtt;
};

inline NodalSolution nodal_derivatives(const Mesh& mesh, const Eigen::VectorXd& v) {
  const int N = mesh.degree();
  const auto m = static_cast<std::size_t>(N + 1);
  NodalSolution out;
  out.v.assign(mesh.elements(), std::vector<double>(m, 0.0));
  out.vt = out.v;
  out.vtt = out.v;
  for (std::size_t e = 0; e < mesh.elements(); ++e) {
    const double s = mesh.scale(e);
    for (int j = 0; j <= N; ++j) out.v[e][static_cast<std::size_t>(j)] = v[static_cast<Eigen::Index>(mesh.index(e, j))];
    for (int i = 0; i <= N; ++i) {
      double a = 0.0, b = 0.0;
      for (int j = 0; j <= N; ++j) {
        a += mesh.cheb.d(i, j) * out.v[e][static_cast<std::size_t>(j)];
        b += mesh.second(i, j) * out.v[e][static_cast<std::size_t>(j)];
      }
      out.vt[e][static_cast<std::size_t>(i)] = s * a;
      out.vtt[e][static_cast<std::size_t>(i)] = s * s * b;
    }
  }
  return out;
}

struct Evaluated {
  double v = 0.0, vt = 0.0, vtt = 0.0;
};

inline Evaluated evaluate(const Mesh& mesh, const NodalSolution& s, std::size_t e, double x) {
  return {mesh.cheb.interpolate(s.v[e], x), mesh.cheb.interpolate(s.vt[e], x),
          mesh.cheb.interpolate(s.vtt[e], x)};
}

/// |v_tt + P v_t - Q v - S| relative to the size of its terms and of v.
inline double relative_residual(const RadialMetric& m, const ModeProblem& prob, double r,
                                const Evaluated& ev) {
  const auto c = ode_coefficients(m, prob, r);
  const double res = ev.vtt + c.P * ev.vt - c.Q * ev.v - c.S;
  const double scale = std::abs(ev.vtt) + std::abs(c.P * ev.vt) + std::abs(c.Q * ev.v) +
                       std::abs(c.S) + std::abs(ev.v);
  return scale > 0.0 ? std::abs(res) / scale : 0.0;
}

}  // namespace detail

template <typename Vector>
inline double max_abs(const Vector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// Solves one radial mode. Throws Error(kSolver) on a degenerate linear
/// system, a resonant (critical) source and on residual failure.
inline ModeSolution solve_mode(const RadialMetric& m, const ModeProblem& prob,
                               const SolverOptions& opts = {}) {
  require(prob.lambda >= 0.0, ErrorKind::kDomain, "solve_mode: lambda must be >= 0");
  require(opts.r_in > 0.0 && opts.r_out > opts.r_in, ErrorKind::kConfig,
          "solve_mode: need 0 < r_in < r_out");
  require(opts.r_in > m.r_min && opts.r_out <= m.r_max, ErrorKind::kConfig,
          "solve_mode: truncation radii outside the metric domain");
  require(opts.elements_per_decade >= 1 && opts.degree >= 4, ErrorKind::kConfig,
          "solve_mode: need elements_per_decade >= 1 and degree >= 4");
  if (prob.bc.infinity == InfinityBranch::kCoordinate) {
    require(prob.lambda > 0.0, ErrorKind::kConfig,
            "solve_mode: coordinate branch requires a nonzero eigenvalue");
  }

  const auto tip_c = detail::ode_coefficients(m, prob, opts.r_in);
  const auto inf_c = detail::ode_coefficients(m, prob, opts.r_out);
  ModeSolution out;
  out.mode_index = prob.mode_index;
  out.lambda = prob.lambda;
  out.tip_branches = detail::local_branches(tip_c);
  out.infinity_branches = detail::local_branches(inf_c);

  // Source admissibility: r^2 rhs must stay below the selected branches.
  // A Dirichlet end pins a value instead of a branch.
  constexpr double kResonance = 1e-9;
  if (auto e = detail::source_exponent(m, prob, opts.r_in, 10.0 * opts.r_in)) {
    for (double nu : {out.tip_branches.growing, out.tip_branches.decaying}) {
      require(std::abs(*e - nu) > kResonance, ErrorKind::kSolver,
              "solve_mode: source resonates with a tip branch (critical weight)");
    }
    require(prob.bc.tip == TipBranch::kDirichlet || *e > out.tip_branches.decaying, ErrorKind::kSolver,
            "solve_mode: source too singular at the tip for the requested weight");
  }
  if (auto e = detail::source_exponent(m, prob, opts.r_out, 0.1 * opts.r_out)) {
    for (double nu : {out.infinity_branches.growing, out.infinity_branches.decaying}) {
      require(std::abs(*e - nu) > kResonance, ErrorKind::kSolver,
              "solve_mode: source resonates with an infinity branch (critical weight)");
    }
    require(prob.bc.infinity == InfinityBranch::kDirichlet || *e < out.infinity_branches.growing,
            ErrorKind::kSolver,
            "solve_mode: source decays too slowly at infinity for the requested weight");
  }

  std::vector<double> bps = m.breakpoints();
  if (prob.rhs) bps.insert(bps.end(), prob.rhs->breakpoints().begin(), prob.rhs->breakpoints().end());
  if (prob.potential)
    bps.insert(bps.end(), prob.potential->breakpoints().begin(), prob.potential->breakpoints().end());

  // Boundary rows: value_coeff v + deriv_coeff v_t = rhs.
  detail::BoundaryRow tip_row, inf_row;
  {
    const auto& br = out.tip_branches;
    switch (prob.bc.tip) {
      case TipBranch::kRegular:
        tip_row = {-br.growing, 1.0, 0.0};
        break;
      case TipBranch::kGreen:
        tip_row = {-br.growing, 1.0, (br.decaying - br.growing) * std::pow(opts.r_in, br.decaying)};
        break;
      case TipBranch::kDirichlet:
        tip_row = {1.0, 0.0, prob.bc.tip_value};
        break;
    }
  }
  {
    const auto& br = out.infinity_branches;
    switch (prob.bc.infinity) {
      case InfinityBranch::kDecay:
        inf_row = {-br.decaying, 1.0, 0.0};
        break;
      case InfinityBranch::kNormalized:
      case InfinityBranch::kCoordinate:
        inf_row = {-br.decaying, 1.0, (br.growing - br.decaying) * std::pow(opts.r_out, br.growing)};
        break;
      case InfinityBranch::kDirichlet:
        inf_row = {1.0, 0.0, prob.bc.infinity_value};
        break;
    }
  }

  // Solve, then bisect elements whose sampled residual is above the
  // refinement target until it is met or stops improving.
  detail::Mesh mesh = opts.fixed_mesh.empty() ? detail::build_mesh(opts, bps)
                                              : detail::Mesh(opts.fixed_mesh, opts.degree);
  detail::Collocation sol;
  detail::NodalSolution nodal;
  double previous = std::numeric_limits<double>::infinity();
  for (int pass = 0;; ++pass) {
    sol = detail::collocate(m, prob, mesh, tip_row, inf_row);
    nodal = detail::nodal_derivatives(mesh, sol.v);
    const int N = mesh.degree();
    std::vector<double> element_residual(mesh.elements(), 0.0);
    for (std::size_t e = 0; e < mesh.elements(); ++e) {
      for (int k = 0; k <= 2 * N; ++k) {
        const double x = -1.0 + static_cast<double>(k) / N;
        const double t = 0.5 * (mesh.breaks[e] + mesh.breaks[e + 1]) +
                         0.5 * (mesh.breaks[e + 1] - mesh.breaks[e]) * x;
        const auto ev = detail::evaluate(mesh, nodal, e, x);
        element_residual[e] =
            std::max(element_residual[e], detail::relative_residual(m, prob, std::exp(t), ev));
      }
    }
    const double worst = *std::max_element(element_residual.begin(), element_residual.end());
    if (!opts.fixed_mesh.empty() || worst <= opts.refine_tolerance || pass >= opts.max_refinements ||
        worst > 0.5 * previous)
      break;
    previous = worst;
    std::vector<double> breaks;
    for (std::size_t e = 0; e < mesh.elements(); ++e) {
      breaks.push_back(mesh.breaks[e]);
      if (element_residual[e] > opts.refine_tolerance)
        breaks.push_back(0.5 * (mesh.breaks[e] + mesh.breaks[e + 1]));
    }
    breaks.push_back(mesh.breaks.back());
    mesh = detail::Mesh(std::move(breaks), opts.degree);
  }
  out.log_abs_determinant = sol.log_abs_determinant;
  out.determinant_sign = sol.determinant_sign;
  out.mesh = mesh.breaks;

  // Sample on the output log grid.
  const auto grid = log_grid_per_decade(opts.r_in, opts.r_out, opts.points_per_decade);
  std::vector<double> val(grid.size()), d1(grid.size()), d2(grid.size());
  double worst = 0.0;
  out.pointwise_residual.resize(grid.size());
  std::size_t e = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double r = grid[k];
    const double t = std::log(r);
    while (e + 1 < mesh.elements() && t > mesh.breaks[e + 1]) ++e;
    const double x = std::clamp(
        (2.0 * t - mesh.breaks[e] - mesh.breaks[e + 1]) / (mesh.breaks[e + 1] - mesh.breaks[e]), -1.0, 1.0);
    const auto ev = detail::evaluate(mesh, nodal, e, x);
    val[k] = ev.v;
    d1[k] = ev.vt / r;
    d2[k] = (ev.vtt - ev.vt) / (r * r);
    out.pointwise_residual[k] = detail::relative_residual(m, prob, r, ev);
    worst = std::max(worst, out.pointwise_residual[k]);
  }
  out.residual = worst;
  out.solution = RadialFunction(grid, std::move(val), std::move(d1), std::move(d2));
  require(out.residual < opts.residual_tolerance, ErrorKind::kSolver,
          "solve_mode: ODE residual above tolerance");

  const double tip_hi = std::min(10.0 * opts.r_in, opts.r_out);
  const double inf_lo = std::max(0.1 * opts.r_out, opts.r_in);
  try {
    out.tip_fit = fit_power_law(out.solution, opts.r_in, tip_hi);
  } catch (const Error&) {
    out.tip_fit = {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  }
  out.infinity_offset =
      (prob.lambda == 0.0 && prob.bc.infinity == InfinityBranch::kNormalized) ? 1.0 : 0.0;
  try {
    out.infinity_fit = fit_power_law(out.solution, inf_lo, opts.r_out, out.infinity_offset);
  } catch (const Error&) {
    out.infinity_fit = {std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  }
  return out;
}

/// Convenience overload with a source term.
inline ModeSolution solve_mode(const RadialMetric& m, double lambda, const Profile& rhs,
                               const BoundaryBranchSpec& bc, const SolverOptions& opts = {}) {
  ModeProblem prob;
  prob.lambda = lambda;
  prob.rhs = rhs;
  prob.bc = bc;
  return solve_mode(m, prob, opts);
}

// --- constructions -----------------------------------------------------------

/// f^{n-1} w^2 u', constant in r wherever u is a harmonic radial function.
inline double radial_flux(const RadialMetric& m, const RadialFunction& u, std::size_t k) {
  const double r = u.grid()[k];
  const double f = m.warp.value(r);
  const double w = m.has_conformal_factor() ? m.conformal.value(r) : 1.0;
  return std::pow(f, m.n - 1.0) * w * w * u.d1()[k];
}

/// A in u = 1 + A rho^{2-n} + ..., from the median conserved flux of u over
/// samples in [r_a, r_b].
inline double flux_coefficient(const RadialMetric& m, const RadialFunction& u, double r_a, double r_b) {
  std::vector<double> a;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double r = u.grid()[k];
    if (r < r_a || r > r_b) continue;
    a.push_back(-radial_flux(m, u, k) / (m.n - 2.0));
  }
  if (a.empty()) return 0.0;
  std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(a.size() / 2), a.end());
  return a[a.size() / 2];
}

struct GreenHarmonic {
  ModeSolution mode;        // solution holds u
  RadialFunction deviation; // u - 1, solved for directly
  double A = 0.0;           // u = 1 + A rho^{2-n} + ... at infinity
  double A_tail_fit = 0.0;  // same coefficient from a fixed-exponent fit on the outer decade
  double min_deviation = 0.0;
};

inline RadialFunction shifted(const RadialFunction& u, double c) {
  std::vector<double> v = u.values();
  for (double& x : v) x += c;
  return RadialFunction(u.grid(), std::move(v), u.d1(), u.d2());
}

/// Harmonic u with u ~ r^{2-n} at the tip and u -> 1 at infinity. The
/// deviation u - 1 is harmonic and decaying, so it is solved for directly to
/// keep its relative accuracy far out.
inline GreenHarmonic green_harmonic(const RadialMetric& m, const SolverOptions& opts = {}) {
  ModeProblem prob;
  prob.bc = {TipBranch::kGreen, InfinityBranch::kDecay};
  GreenHarmonic g;
  g.mode = solve_mode(m, prob, opts);
  g.deviation = g.mode.solution;
  g.mode.solution = shifted(g.deviation, 1.0);
  g.mode.infinity_offset = 1.0;
  g.A = flux_coefficient(m, g.deviation, opts.r_in, opts.r_out);
  g.A_tail_fit = fit_coefficient(g.deviation, 0.1 * opts.r_out, opts.r_out, 2.0 - m.n);
  g.min_deviation = *std::min_element(g.deviation.values().begin(), g.deviation.values().end());
  require(g.A > 0.0, ErrorKind::kInvariant,
          "green_harmonic: fitted A <= 0 contradicts the maximum principle");
  require(g.min_deviation > 0.0, ErrorKind::kInvariant,
          "green_harmonic: u <= 1 somewhere on the grid contradicts the maximum principle");
  return g;
}

/// Mode j = 1 harmonic function, regular at the tip and asymptotic to the
/// coordinate branch (r times a first eigenfunction) at infinity.
inline ModeSolution harmonic_coordinate_mode(const RadialMetric& m, const SolverOptions& opts = {}) {
  ModeProblem prob;
  prob.mode_index = 1;
  prob.lambda = m.spectral.first_nonzero();
  prob.bc = {TipBranch::kRegular, InfinityBranch::kCoordinate};
  return solve_mode(m, prob, opts);
}

struct SchrodingerResult {
  ModeSolution mode;         // solution holds u
  RadialFunction deviation;  // u - 1
  double A = 0.0;   // u = 1 + A rho^{2-n} + ... at infinity
  double A_tail_fit = 0.0;
  double B = 0.0;   // limit of u at the tip
  double tip_mode1_coefficient = 0.0;  // a(y) r^{nu_1} term; zero for radial data
  double min_u = 0.0;
  double determinant_ratio = 1.0;      // det(L_V) / det(L_0), signed
};

inline constexpr double kDegeneracyThreshold = 1e-8;

/// Positive solution of -Delta u + V u = 0 with u -> 1 at infinity for a
/// radial potential V supported in a compact annulus. Solved as
/// Delta v - V v = V for v = u - 1, regular at the tip and decaying.
inline SchrodingerResult solve_schrodinger(const RadialMetric& m, const Profile& potential,
                                           const SolverOptions& opts = {}) {
  require(potential.value(opts.r_in) == 0.0 && potential.value(opts.r_out) == 0.0,
          ErrorKind::kDomain, "solve_schrodinger: potential must vanish near the tip and infinity");
  ModeProblem prob;
  prob.potential = potential;
  prob.rhs = potential;
  prob.bc = {TipBranch::kRegular, InfinityBranch::kDecay};
  SchrodingerResult out;
  out.mode = solve_mode(m, prob, opts);

  ModeProblem free;
  free.bc = prob.bc;
  SolverOptions same_mesh = opts;
  same_mesh.fixed_mesh = out.mode.mesh;
  const ModeSolution reference = solve_mode(m, free, same_mesh);
  out.determinant_ratio = out.mode.determinant_sign * reference.determinant_sign *
                          std::exp(out.mode.log_abs_determinant - reference.log_abs_determinant);
  require(out.determinant_ratio > kDegeneracyThreshold, ErrorKind::kSolver,
          "solve_schrodinger: operator degenerate (negative part of the potential too large)");

  out.deviation = out.mode.solution;
  out.mode.solution = shifted(out.deviation, 1.0);
  out.mode.infinity_offset = 1.0;
  const auto& u = out.mode.solution;
  out.min_u = *std::min_element(u.values().begin(), u.values().end());
  require(out.min_u > 0.0, ErrorKind::kSolver, "solve_schrodinger: solution is not positive");
  double support_end = opts.r_in;
  for (double b : potential.breakpoints()) support_end = std::max(support_end, b);
  out.A = flux_coefficient(m, out.deviation, support_end, opts.r_out);
  out.A_tail_fit = fit_coefficient(out.deviation, 0.1 * opts.r_out, opts.r_out, 2.0 - m.n);
  out.B = u.values().front();
  return out;
}

/// CSV columns r,u,du,residual.
inline void write_csv(std::ostream& os, const ModeSolution& s) {
  os << "r,u,du,residual\n";
  char line[160];
  const auto& u = s.solution;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double res = k < s.pointwise_residual.size() ? s.pointwise_residual[k] : 0.0;
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", u.grid()[k], u.values()[k],
                  u.d1()[k], res);
    os << line;
  }
}

}  // namespace conemass
