#pragma once

#include "dfvem/element.hpp"
#include "dfvem/geometry.hpp"

#include <functional>
#include <optional>
#include <string>

namespace dfvem {

using ScalarField = std::function<double(const Point&)>;

/// Exact Stokes solution for -lap u - grad s = f, div u = 0.
struct TestProblem {
  std::string name;
  Domain domain = Domain::unit_square;
  VectorField velocity;
  TensorField velocity_gradient;
  ScalarField pressure;
  VectorField force;
  /// Mean of `pressure` over the domain; errors are measured against pressure - mean.
  double pressure_mean = 0.0;
  bool homogeneous_dirichlet = true;
  /// Point where the solution is singular (corner-refined quadrature is used there).
  std::optional<Point> singular_corner;
};

/// Smallest positive root of sin^2(l phi) = l^2 sin^2(phi); 1 for convex angles.
double singular_exponent(double phi);

/// Analytic solution on the unit square with homogeneous boundary data.
TestProblem test_problem_1();
/// Corner singular solution on the L-shape (-1,1)^2 minus [0,1)x(-1,0], f = 0.
TestProblem test_problem_2();
/// Divergence-free polynomial velocity of degree p (curl of a stream function of degree
/// p+1) with a pressure of degree p-1; the discrete method reproduces it exactly.
TestProblem patch_problem(int p, Domain domain);

/// The domain boundary as a counter-clockwise polygon.
std::vector<Point> domain_polygon(Domain domain);

}  // namespace dfvem
