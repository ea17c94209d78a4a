#pragma once

#include "dfvem/system.hpp"

namespace dfvem {

struct InfSupOptions {
  double tolerance = 1e-8;
  int max_iterations = 500;
  /// 0: the method's pressure space P_{p_K - 1}. 1: pressures of degree p_K paired through the
  /// reconstructed divergence (a deliberately incompatible space, for negative controls).
  int extra_pressure_degree = 0;
};

/// Reduced generalized eigenproblem S q = lambda M q on the pressure space with
/// S = B H^{-1} B^T (H: a_n stiffness on velocity DOFs free of boundary conditions) and M the
/// pressure mass matrix. `constant` is the piecewise-constant pressure 1.
struct InfSupMatrices {
  Eigen::MatrixXd schur;
  Eigen::MatrixXd mass;
  Eigen::VectorXd constant;
};

InfSupMatrices infsup_matrices(const Discretization& disc, const InfSupOptions& options = {});

struct InfSupResult {
  /// sqrt of the smallest eigenvalue on the zero-mean pressures.
  double beta = 0.0;
  double eigenvalue = 0.0;
  int iterations = 0;
};

/// Inverse iteration with the constant mode shifted out of the way; throws SolverError when the
/// iteration does not converge.
InfSupResult estimate_infsup(const Discretization& disc, const InfSupOptions& options = {});

}  // namespace dfvem
