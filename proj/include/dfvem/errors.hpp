#pragma once

#include "dfvem/problems.hpp"
#include "dfvem/system.hpp"

#include <vector>

namespace dfvem {

struct ErrorReport {
  /// |u - Pi u_n|_{1,T} (broken seminorm with the energy projection of u_n).
  double h1_velocity_error = 0.0;
  /// ||(s - mean) - s_n||_{0,Omega}.
  double l2_pressure_error = 0.0;
  int num_velocity = 0;
  int num_pressure = 0;
  /// Squared per-cell contributions.
  std::vector<double> cell_h1_squared;
  std::vector<double> cell_l2_squared;

  int n_v() const { return num_velocity + num_pressure; }
  double total() const { return h1_velocity_error + l2_pressure_error; }
};

struct ErrorOptions {
  /// Quadrature exactness is 2 p_K + extra_exactness.
  int extra_exactness = 6;
  /// Geometric subdivision towards the singular corner.
  int corner_levels = 8;
  double corner_ratio = 0.5;
};

ErrorReport compute_errors(const Discretization& disc, const SolutionFields& fields, const TestProblem& problem,
                           const ErrorOptions& options = {});

/// Same norms between two discrete solutions on one discretization.
ErrorReport compare_fields(const Discretization& disc, const SolutionFields& a, const SolutionFields& b);

/// ||div v_n||_{0,Omega} from the exact piecewise polynomial divergence.
double divergence_norm(const Discretization& disc, const Eigen::VectorXd& velocity);
/// Broken H1 seminorm of the energy projection of v_n.
double projected_h1_seminorm(const Discretization& disc, const Eigen::VectorXd& velocity);

}  // namespace dfvem
