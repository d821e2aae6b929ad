#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "conemass/asymptotics.hpp"
#include "conemass/radial_solver.hpp"

using namespace conemass;

namespace {

double max_rel_error(const RadialFunction& u, const std::function<double(double)>& exact) {
  double e = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double r = u.grid()[k];
    e = std::max(e, std::abs(u.values()[k] - exact(r)) / std::abs(exact(r)));
  }
  return e;
}

// exp(-(ln r - c)^2 / w^2) as a jet in r.
Profile log_gaussian(double amp, double c, double w) {
  return Profile([=](double r) {
    const double x = (std::log(r) - c) / w;
    const double g = amp * std::exp(-x * x);
    const double gt = -2.0 * x / w * g;                       // d/dt
    const double gtt = (4.0 * x * x - 2.0) / (w * w) * g;     // d2/dt2
    return Jet{g, gt / r, (gtt - gt) / (r * r)};
  });
}

// (r - a)^4 (b - r)^4 on [a, b], zero elsewhere.
Profile bump(double amp, double a, double b) {
  return Profile(
      [=](double r) {
        if (r <= a || r >= b) return Jet{0.0, 0.0, 0.0};
        const double p = r - a, q = b - r;
        const double v = amp * std::pow(p * q, 4);
        const double d1 = amp * 4.0 * std::pow(p * q, 3) * (q - p);
        const double d2 = amp * (12.0 * std::pow(p * q, 2) * (q - p) * (q - p) - 8.0 * std::pow(p * q, 3));
        return Jet{v, d1, d2};
      },
      {a, b});
}

}  // namespace

TEST(FitPowerLaw, Examples) {
  const auto g = log_grid(0.1, 10.0, 81);
  const auto u = RadialFunction::sample(Profile::power(3.0, 2.0), g);
  const auto fit = fit_power_law(u, 0.1, 10.0);
  EXPECT_NEAR(fit.exponent, 2.0, 1e-13);
  EXPECT_NEAR(fit.coefficient, 3.0, 1e-12);
  EXPECT_LT(fit.residual, 1e-13);

  const auto five = RadialFunction::sample(Profile::constant(5.0), g);
  const auto c = fit_power_law(five, 0.1, 10.0, 0.0);
  EXPECT_NEAR(c.exponent, 0.0, 1e-14);
  EXPECT_NEAR(c.coefficient, 5.0, 1e-13);

  for (int n = 3; n <= 5; ++n) {
    const Profile p([n](double r) {
      const double v = std::pow(r, 2.0 - n) * (1.0 + std::sqrt(r));
      return Jet{v, 0.0, 0.0};
    });
    const auto w = RadialFunction::sample(p, log_grid_per_decade(1e-4, 1e4, 40));
    EXPECT_NEAR(fit_power_law(w, 1e-4, 1e-3).exponent, 2.0 - n, 1e-2);
  }
}

TEST(FitPowerLaw, Errors) {
  const auto g = log_grid(0.1, 10.0, 21);
  const auto u = RadialFunction::sample(Profile::power(1.0, 1.0), g);
  EXPECT_THROW(fit_power_law(u, 0.01, 1.0), Error);
  EXPECT_THROW(fit_power_law(u, 1.0, 0.5), Error);
  EXPECT_THROW(fit_power_law(u, 0.1, 10.0, 1.0), Error);  // u - 1 changes sign
}

TEST(ParseBranch, Strings) {
  double v = 0.0;
  EXPECT_EQ(parse_tip_branch("regular", &v), TipBranch::kRegular);
  EXPECT_EQ(parse_tip_branch("green", &v), TipBranch::kGreen);
  EXPECT_EQ(parse_tip_branch("dirichlet:2.5", &v), TipBranch::kDirichlet);
  EXPECT_EQ(v, 2.5);
  EXPECT_EQ(parse_infinity_branch("decay", &v), InfinityBranch::kDecay);
  EXPECT_EQ(parse_infinity_branch("normalized", &v), InfinityBranch::kNormalized);
  EXPECT_EQ(parse_infinity_branch("coordinate", &v), InfinityBranch::kCoordinate);
  EXPECT_EQ(parse_infinity_branch("dirichlet:-1", &v), InfinityBranch::kDirichlet);
  EXPECT_EQ(v, -1.0);
  EXPECT_THROW(parse_tip_branch("decay", &v), Error);
  EXPECT_THROW(parse_infinity_branch("green", &v), Error);
}

TEST(SolveMode, ModelConeDirichletBranch) {
  const SolverOptions o;
  for (double a : {0.5, 1.0}) {
    const auto m = metrics::cone(4, a);
    for (int j = 0; j <= 3; ++j) {
      const double lam = j * (2.0 + j);
      const double nu = critical_exponents(lam / (a * a), 4).plus;
      ModeProblem p;
      p.lambda = lam;
      p.bc = {TipBranch::kDirichlet, InfinityBranch::kDirichlet, std::pow(o.r_in, nu), std::pow(o.r_out, nu)};
      const auto s = solve_mode(m, p, o);
      EXPECT_LT(s.residual, 1e-10);
      EXPECT_LT(max_rel_error(s.solution, [nu](double r) { return std::pow(r, nu); }), 1e-10);
    }
  }
}

TEST(SolveMode, FlatGreenBranch) {
  for (int n = 3; n <= 5; ++n) {
    ModeProblem p;
    p.bc = {TipBranch::kGreen, InfinityBranch::kDecay};
    const auto s = solve_mode(metrics::flat(n), p);
    EXPECT_LT(max_rel_error(s.solution, [n](double r) { return std::pow(r, 2.0 - n); }), 1e-10);
    EXPECT_NEAR(s.tip_fit.exponent, 2.0 - n, 1e-9);
    EXPECT_NEAR(s.infinity_fit.exponent, 2.0 - n, 1e-9);
  }
}

TEST(SolveMode, ManufacturedSolution) {
  // u* = r^nu (1 + r) on flat R^n; Delta_j u* = ((nu+1)(nu+n-1) - lambda) r^{nu-1}.
  const SolverOptions o;
  for (int n = 3; n <= 5; ++n)
    for (int j = 0; j <= 3; ++j) {
      const double lam = j * (n - 2.0 + j);
      const double nu = critical_exponents(lam, n).plus;
      const double c = (nu + 1.0) * (nu + n - 1.0) - lam;
      auto exact = [nu](double r) { return std::pow(r, nu) * (1.0 + r); };
      const auto s = solve_mode(metrics::flat(n), lam, Profile::power(c, nu - 1.0),
                                {TipBranch::kDirichlet, InfinityBranch::kDirichlet, exact(o.r_in), exact(o.r_out)}, o);
      EXPECT_LT(max_rel_error(s.solution, exact), 1e-6) << "n=" << n << " j=" << j;
    }
}

TEST(SolveMode, RejectsBadRequests) {
  const auto m = metrics::flat(3);
  ModeProblem p;
  p.lambda = -1.0;
  EXPECT_THROW(solve_mode(m, p), Error);
  p.lambda = 0.0;
  p.bc.infinity = InfinityBranch::kCoordinate;
  EXPECT_THROW(solve_mode(m, p), Error);
  SolverOptions bad;
  bad.r_in = 1.0;
  bad.r_out = 0.5;
  EXPECT_THROW(solve_mode(m, ModeProblem{}, bad), Error);
  SolverOptions inside;
  inside.r_in = 0.5;
  EXPECT_THROW(solve_mode(metrics::neg_schwarzschild(3, 1.0), ModeProblem{}, inside), Error);
}

TEST(SolveMode, CriticalSourceRefused) {
  // r^2 rhs ~ r^{nu^+}: the particular solution resonates with the regular branch.
  const auto m = metrics::flat(3);
  try {
    solve_mode(m, 2.0, Profile::power(1.0, -1.0), {TipBranch::kRegular, InfinityBranch::kDecay});
    FAIL() << "expected a resonance error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSolver);
    EXPECT_NE(std::string(e.what()).find("critical"), std::string::npos);
  }
  // A source decaying slower than the growing branch at infinity.
  EXPECT_THROW(solve_mode(m, 0.0, Profile::power(1.0, 0.5), {TipBranch::kRegular, InfinityBranch::kDecay}), Error);
}

TEST(SolveMode, BranchAlgebraProperty) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dim(3, 5), mode(0, 4), kind(0, 2);
  std::uniform_real_distribution<double> centre(-1.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = dim(rng), j = mode(rng), k = kind(rng);
    const double lam = j * (n - 2.0 + j);
    const auto c = critical_exponents(lam, n);
    ModeProblem p;
    p.lambda = lam;
    double expect = c.plus;
    if (k == 0) {
      p.bc = {TipBranch::kGreen, InfinityBranch::kDecay};
      expect = c.minus;
    } else if (k == 1 && lam > 0.0) {
      p.bc = {TipBranch::kRegular, InfinityBranch::kNormalized};
    } else {
      p.rhs = log_gaussian(1.0, centre(rng), 0.5);
      p.bc = {TipBranch::kRegular, InfinityBranch::kDecay};
    }
    const auto s = solve_mode(metrics::flat(n), p);
    EXPECT_NEAR(s.tip_fit.exponent, expect, 1e-3) << "n=" << n << " j=" << j << " kind=" << k;
    EXPECT_NEAR(s.tip_branches.growing, c.plus, 1e-12);
    EXPECT_NEAR(s.tip_branches.decaying, c.minus, 1e-12);
  }
}

TEST(SolveMode, ExpansionJumpProperty) {
  // Below a source supported in (1, 2) the Green solution is r^{nu^-} + b r^{nu^+};
  // removing the leading branch leaves the next one.
  for (int n = 3; n <= 4; ++n)
    for (int j = 1; j <= 2; ++j) {
      const double lam = j * (n - 2.0 + j);
      const auto c = critical_exponents(lam, n);
      ModeProblem p;
      p.lambda = lam;
      p.rhs = bump(50.0, 1.0, 2.0);
      p.bc = {TipBranch::kGreen, InfinityBranch::kDecay};
      const SolverOptions o;
      const auto s = solve_mode(metrics::flat(n), p, o);
      const double lead = fit_coefficient(s.solution, o.r_in, o.r_in, c.minus);
      const auto rem = shifted(s.solution, 0.0);
      std::vector<double> v = rem.values();
      for (std::size_t k = 0; k < v.size(); ++k) v[k] -= lead * std::pow(rem.grid()[k], c.minus);
      const RadialFunction remainder(rem.grid(), v, rem.d1(), rem.d2());
      const auto fit = fit_power_law(remainder, 0.1, 0.9);
      EXPECT_GT(fit.exponent, c.plus - 1e-2);
      EXPECT_LT(fit.exponent, c.plus + 1e-2);
    }
}

TEST(SolveMode, LinearInSource) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> centre(-2.0, 2.0), amp(-3.0, 3.0), width(0.3, 1.0);
  std::uniform_int_distribution<int> mode(0, 3);
  const auto m = metrics::glued(3, 0.7);
  for (int trial = 0; trial < 6; ++trial) {
    const double lam = [&] { const int j = mode(rng); return j * (1.0 + j); }();
    const Profile f1 = log_gaussian(amp(rng), centre(rng), width(rng));
    const Profile f2 = log_gaussian(amp(rng), centre(rng), width(rng));
    const Profile sum([f1, f2](double r) { return f1(r) + f2(r); });
    SolverOptions o;
    ModeProblem p;
    p.lambda = lam;
    p.bc = {TipBranch::kRegular, InfinityBranch::kDecay};
    p.rhs = sum;
    const auto s = solve_mode(m, p, o);
    o.fixed_mesh = s.mesh;
    p.rhs = f1;
    const auto a = solve_mode(m, p, o);
    p.rhs = f2;
    const auto b = solve_mode(m, p, o);
    const double scale = max_abs(s.solution.values());
    for (std::size_t k = 0; k < s.solution.size(); ++k) {
      EXPECT_NEAR(s.solution.values()[k], a.solution.values()[k] + b.solution.values()[k], 1e-9 * scale);
    }
  }
}

TEST(SolveMode, AdaptiveRefinementResolvesRamp) {
  ModeProblem p;
  p.bc = {TipBranch::kGreen, InfinityBranch::kDecay};
  const auto s = solve_mode(metrics::glued(4, 0.5), p);
  EXPECT_LT(s.residual, 1e-8);
  // The default mesh has 32 elements; the ramp must have been split.
  EXPECT_GT(s.mesh.size(), 33u);
}

TEST(SolveMode, CsvHeader) {
  ModeProblem p;
  p.bc = {TipBranch::kGreen, InfinityBranch::kDecay};
  SolverOptions o;
  o.r_in = 0.1;
  o.r_out = 10.0;
  o.points_per_decade = 4;
  std::ostringstream os;
  write_csv(os, solve_mode(metrics::flat(3), p, o));
  const std::string text = os.str();
  EXPECT_EQ(text.rfind("r,u,du,residual\n", 0), 0u);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 10);
}

TEST(GreenHarmonic, FlatSpaceExact) {
  for (int n = 3; n <= 5; ++n) {
    const auto g = green_harmonic(metrics::flat(n));
    EXPECT_LT(max_rel_error(g.mode.solution, [n](double r) { return 1.0 + std::pow(r, 2.0 - n); }), 1e-8);
    EXPECT_NEAR(g.A, 1.0, 1e-6);
    EXPECT_NEAR(g.A_tail_fit, 1.0, 1e-3);
    EXPECT_GT(g.min_deviation, 0.0);
  }
}

TEST(GreenHarmonic, GluedMetricPositiveAndStable) {
  for (int n = 3; n <= 5; ++n) {
    const auto m = metrics::glued(n, 0.5);
    const SolverOptions o;
    const auto g = green_harmonic(m, o);
    const auto h = green_harmonic(m, o.refined());
    EXPECT_GT(g.A, 0.0);
    for (double u : g.mode.solution.values()) ASSERT_GT(u, 1.0);
    EXPECT_NEAR(g.A, h.A, 5e-5 * g.A);
    // The flux through the cone region is a^{n-1} times the model value.
    EXPECT_NEAR(g.A, std::pow(0.5, n - 1), 1e-8);
  }
}

TEST(HarmonicCoordinate, FlatIsLinear) {
  for (int n = 3; n <= 5; ++n) {
    const auto s = harmonic_coordinate_mode(metrics::flat(n));
    EXPECT_NEAR(s.tip_fit.exponent, 1.0, 1e-9);
    EXPECT_LT(max_rel_error(s.solution, [](double r) { return r; }), 1e-9);
  }
}

TEST(HarmonicCoordinate, ConeExponentMatchesCatalog) {
  for (int n = 3; n <= 5; ++n)
    for (double a : {0.5, 0.9}) {
      const double nu = critical_exponents((n - 1.0) / (a * a), n).plus;
      EXPECT_GT(nu, 1.0);
      EXPECT_NEAR(harmonic_coordinate_mode(metrics::cone(n, a)).tip_fit.exponent, nu, 1e-3 * nu);
      EXPECT_NEAR(harmonic_coordinate_mode(metrics::glued(n, a)).tip_fit.exponent, nu, 1e-3 * nu);
    }
}

TEST(Schrodinger, ZeroPotentialIsConstant) {
  const auto r = solve_schrodinger(metrics::glued(3, 0.5), Profile::constant(0.0));
  for (double u : r.mode.solution.values()) EXPECT_EQ(u, 1.0);
  EXPECT_LT(r.mode.residual, 1e-12);
  EXPECT_EQ(r.A, 0.0);
  EXPECT_EQ(r.B, 1.0);
  EXPECT_EQ(r.tip_mode1_coefficient, 0.0);
}

TEST(Schrodinger, NonnegativeBumpKeepsSolutionPositive) {
  for (int n = 3; n <= 4; ++n) {
    const auto m = metrics::glued(n, 0.5);
    const SolverOptions o;
    const auto r = solve_schrodinger(m, bump(1e3, 1.2, 1.8), o);
    const auto h = solve_schrodinger(m, bump(1e3, 1.2, 1.8), o.refined());
    EXPECT_GT(r.min_u, 0.0);
    EXPECT_NEAR(r.B, h.B, 5e-5 * r.B);
    // Delta u = V u >= 0 makes u subharmonic, so its tip value lies below
    // its limit at infinity.
    EXPECT_LT(r.B, 1.0);
    EXPECT_LT(r.A, 0.0);
    EXPECT_GT(r.determinant_ratio, 1.0);
  }
}

TEST(Schrodinger, NegativeBumpRaisesTipValue) {
  const auto r = solve_schrodinger(metrics::glued(3, 0.5), bump(-1e3, 1.2, 1.8));
  EXPECT_GT(r.B, 1.0);
  EXPECT_GT(r.A, 0.0);
  EXPECT_GT(r.determinant_ratio, kDegeneracyThreshold);
}

TEST(Schrodinger, DegenerateOperatorDetected) {
  try {
    solve_schrodinger(metrics::glued(3, 0.5), bump(-2e5, 1.2, 1.8));
    FAIL() << "expected a degeneracy error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSolver);
  }
}

TEST(Schrodinger, PotentialMustBeCompactlySupported) {
  EXPECT_THROW(solve_schrodinger(metrics::flat(3), Profile::constant(1.0)), Error);
}
