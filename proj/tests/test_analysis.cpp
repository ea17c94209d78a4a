#include "dfvem/errors.hpp"
#include "dfvem/exceptions.hpp"
#include "dfvem/infsup.hpp"
#include "dfvem/problems.hpp"
#include "dfvem/system.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace dfvem;
using std::numbers::pi;

namespace {

// Central-difference Jacobian of a vector field; row i = gradient of component i.
Eigen::Matrix2d fd_gradient(const VectorField& u, const Point& x, double eps = 1e-5) {
  Eigen::Matrix2d g;
  for (int d = 0; d < 2; ++d) {
    const Point e = Point::Unit(d) * eps;
    g.col(d) = (u(x + e) - u(x - e)) / (2 * eps);
  }
  return g;
}

// -lap u - grad s from the closed-form gradient and central differences.
Eigen::Vector2d strong_residual(const TestProblem& tp, const Point& x, double eps = 1e-5) {
  Eigen::Vector2d lap = Eigen::Vector2d::Zero();
  Eigen::Vector2d grad_s;
  for (int d = 0; d < 2; ++d) {
    const Point e = Point::Unit(d) * eps;
    lap += (tp.velocity_gradient(x + e).col(d) - tp.velocity_gradient(x - e).col(d)) / (2 * eps);
    grad_s(d) = (tp.pressure(x + e) - tp.pressure(x - e)) / (2 * eps);
  }
  return -lap - grad_s - tp.force(x);
}

// Nested adaptive Gauss-Kronrod over the rectangle [x0,x1] x [y0,y1].
double integrate_rect(auto&& f, double x0, double x1, double y0, double y1) {
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  return GK::integrate([&](double x) { return GK::integrate([&](double y) { return f(x, y); }, y0, y1, 8, 1e-13); },
                       x0, x1, 8, 1e-13);
}

SolutionFields zero_fields(const Discretization& disc) {
  SolutionFields f;
  f.velocity = Eigen::VectorXd::Zero(disc.dofs.num_velocity);
  f.pressure = Eigen::VectorXd::Zero(disc.dofs.num_pressure);
  return f;
}

Discretization uniform(int cells, Domain domain, int p, Stabilization stab = Stabilization::d_recipe) {
  const auto mesh = make_uniform_square_mesh(cells, domain);
  return discretize(mesh, assign_degrees(mesh, UniformDegree{p}), {stab, 0, 1});
}

std::vector<Point> random_points(int n, Domain domain, unsigned seed, double min_radius = 0.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0), u11(-1.0, 1.0);
  std::vector<Point> out;
  while (static_cast<int>(out.size()) < n) {
    Point x = domain == Domain::unit_square ? Point(u01(rng), u01(rng)) : Point(u11(rng), u11(rng));
    if (domain == Domain::l_shape && x.x() > 0.0 && x.y() < 0.0) continue;
    if (x.norm() < min_radius) continue;
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST(SingularExponent, ReferenceValues) {
  EXPECT_NEAR(singular_exponent(1.5 * pi), 0.54448373678246, 1e-11);
  EXPECT_EQ(singular_exponent(0.5 * pi), 1.0);
  const double near_crack = singular_exponent(2 * pi - 1e-3);
  EXPECT_GT(near_crack, 0.5);
  EXPECT_LT(near_crack, 0.55);
  EXPECT_THROW(singular_exponent(pi), ConfigError);
  EXPECT_THROW(singular_exponent(0.0), ConfigError);
  EXPECT_THROW(singular_exponent(2 * pi), ConfigError);
}

TEST(SingularExponent, SolvesTheCharacteristicEquation) {
  for (double phi = pi + 0.05; phi < 2 * pi; phi += 0.05) {
    const double l = singular_exponent(phi);
    EXPECT_NEAR(std::pow(std::sin(l * phi), 2), l * l * std::pow(std::sin(phi), 2), 1e-12);
    // No smaller positive root on a dense scan.
    const auto g = [&](double x) { return std::pow(std::sin(x * phi), 2) - x * x * std::pow(std::sin(phi), 2); };
    for (int k = 1; k < 2000; ++k) {
      const double a = l * (k - 1) / 2000.0 + 1e-9, b = l * k / 2000.0 - 1e-9;
      if (b >= l - 1e-9) break;
      EXPECT_FALSE(g(a) * g(b) < 0.0) << "phi=" << phi << " extra root near " << a;
    }
  }
}

TEST(SingularExponent, MonotoneAboveHalf) {
  double prev = 1.0;
  for (int k = 1; k < 400; ++k) {
    const double phi = pi + pi * k / 400.0;
    const double l = singular_exponent(phi);
    EXPECT_LT(l, prev);
    EXPECT_GT(l, 0.5);
    prev = l;
  }
}

TEST(TestProblem1, Identities) {
  const auto tp = test_problem_1();
  EXPECT_TRUE(tp.homogeneous_dirichlet);
  for (double y = 0.0; y <= 1.0; y += 0.05) EXPECT_NEAR(tp.velocity(Point(0.5, y)).y(), 0.0, 1e-15);
  for (int k = 0; k < 100; ++k) {
    const double t = k / 100.0;
    for (const Point& x : {Point(t, 0), Point(1, t), Point(1 - t, 1), Point(0, 1 - t)})
      EXPECT_LT(tp.velocity(x).norm(), 1e-14);
  }
  for (const auto& x : random_points(200, Domain::unit_square, 1)) {
    const Eigen::Matrix2d g = tp.velocity_gradient(x);
    EXPECT_LT(std::abs(g.trace()), 1e-10);
    const Eigen::Matrix2d fd = fd_gradient(tp.velocity, x);
    EXPECT_LT((g - fd).norm(), 1e-6 * std::max(1.0, g.norm()));
    EXPECT_LT(strong_residual(tp, x).norm(), 1e-4 * std::max(1.0, tp.force(x).norm()));
  }
  EXPECT_NEAR(tp.pressure_mean, 0.0, 1e-14);
}

TEST(TestProblem2, Identities) {
  const auto tp = test_problem_2();
  const double alpha = singular_exponent(1.5 * pi);
  EXPECT_FALSE(tp.homogeneous_dirichlet);
  ASSERT_TRUE(tp.singular_corner.has_value());
  for (const auto& x : random_points(50, Domain::l_shape, 2)) EXPECT_EQ(tp.force(x).norm(), 0.0);
  // Homogeneous on the two edges at the re-entrant corner.
  for (int k = 1; k <= 50; ++k) {
    const double t = k / 50.0;
    EXPECT_LT(tp.velocity(Point(t, 0.0)).norm(), 1e-13);
    EXPECT_LT(tp.velocity(Point(0.0, -t)).norm(), 1e-13);
  }
  EXPECT_EQ(tp.velocity(Point::Zero()).norm(), 0.0);
  // Homogeneity of degree alpha.
  for (double theta : {0.3, 1.7, 3.0, 4.4}) {
    const Point x(1e-4 * std::cos(theta), 1e-4 * std::sin(theta));
    const double ratio = tp.velocity(2.0 * x).norm() / tp.velocity(x).norm();
    EXPECT_NEAR(ratio, std::pow(2.0, alpha), 1e-6);
  }
  for (const auto& x : random_points(200, Domain::l_shape, 3, 0.05)) {
    const Eigen::Matrix2d g = tp.velocity_gradient(x);
    EXPECT_LT(std::abs(g.trace()), 1e-8);
    const Eigen::Matrix2d fd = fd_gradient(tp.velocity, x, 1e-6);
    EXPECT_LT((g - fd).norm(), 1e-6 * std::max(1.0, g.norm()));
    EXPECT_LT(strong_residual(tp, x).norm(), 1e-6 * std::max(1.0, g.norm() / x.norm()));
  }
}

TEST(TestProblem2, PressureMeanMatchesIndependentQuadrature) {
  // Three unit squares meeting at the corner; each has the corner at one of its vertices.
  const auto tp = test_problem_2();
  const auto s = [&](double x, double y) { return tp.pressure(Point(x, y)); };
  // Polar substitution around the corner removes the r^(alpha-1) singularity.
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  double total = 0.0;
  for (int q = 0; q < 3; ++q) {
    const double t0 = 0.5 * pi * q;
    // Each square [0,1]^2 rotated by t0 is split along its diagonal.
    for (int half = 0; half < 2; ++half) {
      const double a = t0 + 0.25 * pi * half, b = a + 0.25 * pi;
      total += GK::integrate(
          [&](double t) {
            const double local = t - t0;
            const double rmax = 1.0 / std::max(std::abs(std::cos(local)), std::abs(std::sin(local)));
            return GK::integrate([&](double r) { return s(r * std::cos(t), r * std::sin(t)) * r; }, 0.0, rmax, 12,
                                 1e-13);
          },
          a, b, 12, 1e-13);
    }
  }
  EXPECT_NEAR(total / 3.0, tp.pressure_mean, 1e-9);
}

TEST(PatchProblem, IsAnExactPolynomialSolution) {
  for (int p = 2; p <= 5; ++p) {
    const auto tp = patch_problem(p, Domain::unit_square);
    for (const auto& x : random_points(20, Domain::unit_square, 4 + p)) {
      EXPECT_LT(std::abs(tp.velocity_gradient(x).trace()), 1e-12);
      EXPECT_LT(strong_residual(tp, x).norm(), 1e-5);
    }
  }
  EXPECT_THROW(patch_problem(1, Domain::unit_square), ConfigError);
}

TEST(Errors, ZeroFieldsGiveTheExactNorms) {
  const auto tp = test_problem_1();
  const double h1_sq = integrate_rect(
      [&](double x, double y) { return tp.velocity_gradient(Point(x, y)).squaredNorm(); }, 0, 1, 0, 1);
  const double l2_sq = integrate_rect(
      [&](double x, double y) { return std::pow(tp.pressure(Point(x, y)) - tp.pressure_mean, 2); }, 0, 1, 0, 1);
  const auto disc = uniform(2, Domain::unit_square, 3);
  const auto err = compute_errors(disc, zero_fields(disc), tp);
  // The error rule has exactness 2p+6, so agreement is limited by its own quadrature error.
  EXPECT_NEAR(err.h1_velocity_error, std::sqrt(h1_sq), 1e-8 * std::sqrt(h1_sq));
  EXPECT_NEAR(err.l2_pressure_error, std::sqrt(l2_sq), 1e-8 * std::sqrt(l2_sq));
  EXPECT_EQ(err.num_velocity, disc.dofs.num_velocity);
  EXPECT_EQ(err.num_pressure, disc.dofs.num_pressure);
  double sum = 0.0;
  for (double v : err.cell_h1_squared) sum += v;
  EXPECT_NEAR(sum, err.h1_velocity_error * err.h1_velocity_error, 1e-14 * h1_sq);
}

TEST(Errors, ZeroFieldsOnTheLShape) {
  // |u2|_1 and ||s2 - mean|| frozen from an independent polar quadrature.
  const auto tp = test_problem_2();
  const auto disc = uniform(2, Domain::l_shape, 2);
  const auto err = compute_errors(disc, zero_fields(disc), tp, {6, 40, 0.5});
  EXPECT_NEAR(err.h1_velocity_error, 7.031, 5e-3);
  EXPECT_NEAR(err.l2_pressure_error, 5.567, 5e-3);
}

TEST(Errors, FieldAgainstItselfIsZero) {
  const auto tp = test_problem_1();
  const auto disc = uniform(2, Domain::unit_square, 4);
  const auto sol = solve(assemble(disc, tp.force), disc);
  const auto d = compare_fields(disc, sol, sol);
  EXPECT_GE(d.h1_velocity_error, 0.0);
  EXPECT_LE(d.h1_velocity_error, 1e-12);
  EXPECT_LE(d.l2_pressure_error, 1e-12);
}

TEST(Errors, QuadratureRefinementIsStable) {
  for (int p : {2, 4}) {
    for (bool singular : {false, true}) {
      const auto tp = singular ? test_problem_2() : test_problem_1();
      const auto disc = uniform(2, singular ? Domain::l_shape : Domain::unit_square, p);
      const auto sol = solve(assemble(disc, tp.force, tp.homogeneous_dirichlet ? nullptr : &tp.velocity), disc);
      const auto a = compute_errors(disc, sol, tp, {6, 8, 0.5});
      const auto b = compute_errors(disc, sol, tp, {10, 8, 0.5});
      EXPECT_LT(std::abs(a.h1_velocity_error - b.h1_velocity_error), 1e-3 * b.h1_velocity_error);
      EXPECT_LT(std::abs(a.l2_pressure_error - b.l2_pressure_error), 1e-3 * b.l2_pressure_error);
    }
  }
}

TEST(Errors, DiscreteVelocityIsDivergenceFree) {
  const auto tp = test_problem_1();
  for (int p = 2; p <= 6; ++p) {
    const auto disc = uniform(2, Domain::unit_square, p);
    const auto sol = solve(assemble(disc, tp.force), disc);
    EXPECT_LE(divergence_norm(disc, sol.velocity), 1e-9 * projected_h1_seminorm(disc, sol.velocity)) << "p=" << p;
  }
}

TEST(InfSup, MatchesDenseEigensolver) {
  for (int p = 2; p <= 4; ++p) {
    const auto disc = uniform(2, Domain::unit_square, p);
    const auto m = infsup_matrices(disc);
    // Zero-mean pressures: orthogonal complement of M * constant.
    const Eigen::VectorXd mc = m.mass * m.constant;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mc);
    const Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd z = q.rightCols(q.cols() - 1);
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(z.transpose() * m.schur * z,
                                                                 z.transpose() * m.mass * z);
    const double dense = std::sqrt(es.eigenvalues().minCoeff());
    const auto r = estimate_infsup(disc);
    EXPECT_NEAR(r.beta, dense, 1e-6 * dense) << "p=" << p;
    EXPECT_GT(r.beta, 0.05);
  }
}

TEST(InfSup, PUniformOnFixedMesh) {
  double lo = 1e300, hi = 0.0;
  for (int p = 2; p <= 5; ++p) {
    const double b = estimate_infsup(uniform(2, Domain::unit_square, p)).beta;
    lo = std::min(lo, b);
    hi = std::max(hi, b);
  }
  EXPECT_LE(hi / lo, 1.5);
  EXPECT_GE(lo, 0.05);
}

TEST(InfSup, InvariantUnderRescaling) {
  const auto base = make_uniform_square_mesh(2, Domain::l_shape);
  const double ref = estimate_infsup(discretize(base, assign_degrees(base, UniformDegree{3}))).beta;
  for (double t : {0.01, 7.0}) {
    std::vector<Point> v;
    for (const auto& x : base.vertices()) v.push_back(t * x);
    const PolygonalMesh scaled(v, base.cells());
    const double b = estimate_infsup(discretize(scaled, assign_degrees(scaled, UniformDegree{3}))).beta;
    EXPECT_NEAR(b, ref, 1e-6 * ref) << "t=" << t;
  }
}

TEST(InfSup, EnlargedPressureSpaceCollapses) {
  const auto disc = uniform(2, Domain::unit_square, 3);
  const double good = estimate_infsup(disc).beta;
  InfSupOptions bad;
  bad.extra_pressure_degree = 1;
  const double collapsed = estimate_infsup(disc, bad).beta;
  EXPECT_LT(collapsed, 1e-6 * good);
  EXPECT_THROW(estimate_infsup(disc, {1e-8, 500, 2}), ConfigError);
}

TEST(InfSup, ReportsNonConvergence) {
  const auto disc = uniform(2, Domain::unit_square, 4);
  EXPECT_THROW(estimate_infsup(disc, {1e-16, 2, 0}), SolverError);
}
