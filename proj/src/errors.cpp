#include "dfvem/errors.hpp"

#include <cmath>

namespace dfvem {

namespace {

QuadratureRule error_rule(const Discretization& disc, int c, const std::optional<Point>& corner,
                          const ErrorOptions& options) {
  const auto poly = disc.mesh.cell_points(c);
  const int exactness = 2 * disc.degrees.cell_degree[c] + options.extra_exactness;
  if (corner) return corner_refined_quadrature(poly, *corner, exactness, options.corner_levels, options.corner_ratio);
  return polygon_quadrature(poly, exactness);
}

// Gradient (row per component) of the energy projection with stacked coefficients `coef`.
Eigen::Matrix2d projected_gradient(const ScaledMonomialBasis& basis, const Eigen::VectorXd& coef, const Point& x) {
  const int np = basis.size();
  const auto g = basis.gradients(x);
  Eigen::Matrix2d out;
  out.row(0) = (g * coef.head(np)).transpose();
  out.row(1) = (g * coef.tail(np)).transpose();
  return out;
}

}  // namespace

ErrorReport compute_errors(const Discretization& disc, const SolutionFields& fields, const TestProblem& problem,
                           const ErrorOptions& options) {
  ErrorReport r;
  const int nc = disc.mesh.num_cells();
  r.num_velocity = disc.dofs.num_velocity;
  r.num_pressure = disc.dofs.num_pressure;
  r.cell_h1_squared.assign(nc, 0.0);
  r.cell_l2_squared.assign(nc, 0.0);
  double h1 = 0.0, l2 = 0.0;
  for (int c = 0; c < nc; ++c) {
    const auto& space = disc.spaces[c];
    const Eigen::VectorXd coef = disc.ops[c].pinabla.star * local_velocity(disc, fields.velocity, c);
    const Eigen::VectorXd sc = local_pressure(disc, fields.pressure, c);
    const QuadratureRule q = error_rule(disc, c, problem.singular_corner, options);
    for (std::size_t i = 0; i < q.size(); ++i) {
      const Point& x = q.points[i];
      const Eigen::Matrix2d dg = problem.velocity_gradient(x) - projected_gradient(space.basis(), coef, x);
      const double ds = problem.pressure(x) - problem.pressure_mean - space.basis().evaluate(sc, x);
      r.cell_h1_squared[c] += q.weights[i] * dg.squaredNorm();
      r.cell_l2_squared[c] += q.weights[i] * ds * ds;
    }
    h1 += r.cell_h1_squared[c];
    l2 += r.cell_l2_squared[c];
  }
  r.h1_velocity_error = std::sqrt(h1);
  r.l2_pressure_error = std::sqrt(l2);
  return r;
}

ErrorReport compare_fields(const Discretization& disc, const SolutionFields& a, const SolutionFields& b) {
  ErrorReport r;
  const int nc = disc.mesh.num_cells();
  r.num_velocity = disc.dofs.num_velocity;
  r.num_pressure = disc.dofs.num_pressure;
  r.cell_h1_squared.assign(nc, 0.0);
  r.cell_l2_squared.assign(nc, 0.0);
  double h1 = 0.0, l2 = 0.0;
  for (int c = 0; c < nc; ++c) {
    const auto& space = disc.spaces[c];
    const Eigen::VectorXd dv = local_velocity(disc, a.velocity, c) - local_velocity(disc, b.velocity, c);
    const Eigen::VectorXd coef = disc.ops[c].pinabla.star * dv;
    const Eigen::VectorXd ds = local_pressure(disc, a.pressure, c) - local_pressure(disc, b.pressure, c);
    const int np = space.npoly();
    const Eigen::MatrixXd k = space.stiffness_matrix();
    r.cell_h1_squared[c] = coef.head(np).dot(k * coef.head(np)) + coef.tail(np).dot(k * coef.tail(np));
    r.cell_l2_squared[c] = ds.dot(disc.ops[c].pressure_mass * ds);
    h1 += r.cell_h1_squared[c];
    l2 += r.cell_l2_squared[c];
  }
  r.h1_velocity_error = std::sqrt(std::max(0.0, h1));
  r.l2_pressure_error = std::sqrt(std::max(0.0, l2));
  return r;
}

double divergence_norm(const Discretization& disc, const Eigen::VectorXd& velocity) {
  double sum = 0.0;
  for (int c = 0; c < disc.mesh.num_cells(); ++c) {
    const Eigen::VectorXd d = divergence_coefficients(disc.ops[c], local_velocity(disc, velocity, c));
    sum += d.dot(disc.ops[c].pressure_mass * d);
  }
  return std::sqrt(std::max(0.0, sum));
}

double projected_h1_seminorm(const Discretization& disc, const Eigen::VectorXd& velocity) {
  double sum = 0.0;
  for (int c = 0; c < disc.mesh.num_cells(); ++c) {
    const Eigen::VectorXd coef = disc.ops[c].pinabla.star * local_velocity(disc, velocity, c);
    const int np = disc.spaces[c].npoly();
    const Eigen::MatrixXd k = disc.spaces[c].stiffness_matrix();
    sum += coef.head(np).dot(k * coef.head(np)) + coef.tail(np).dot(k * coef.tail(np));
  }
  return std::sqrt(std::max(0.0, sum));
}

}  // namespace dfvem
