#pragma once

#include "dfvem/element.hpp"
#include "dfvem/geometry.hpp"

#include <Eigen/Sparse>

#include <filesystem>
#include <vector>

namespace dfvem {

/// Global numbering. Velocity: x-components of all boundary-value nodes, then y-components,
/// then the cell-private moments cell by cell. Nodes are the mesh vertices followed by the
/// interior Gauss-Lobatto nodes of each edge, ordered from its lower to its higher vertex
/// index. Pressure: one block of dim P_{p_K - 1} coefficients per cell.
struct GlobalDofMap {
  int num_nodes = 0;
  int num_velocity = 0;
  int num_pressure = 0;
  std::vector<Point> nodes;
  /// Per cell, global velocity index of each local DOF.
  std::vector<std::vector<int>> velocity;
  std::vector<int> pressure_offset;
  std::vector<int> pressure_size;
  /// Per global velocity DOF: lies on the domain boundary.
  std::vector<char> boundary;

  int total() const { return num_velocity + num_pressure; }
  int num_boundary() const;
  int node_dof(int node, int component) const { return component * num_nodes + node; }
};

GlobalDofMap build_dof_map(const PolygonalMesh& mesh, const DegreeDistribution& degrees);

struct DiscretizationOptions {
  Stabilization stabilization = Stabilization::d_recipe;
  int quadrature_boost = 0;
  /// Worker threads for the per-cell loop (results do not depend on it).
  int threads = 1;
};

/// Mesh, degrees, DOF map and the local spaces and operators of every cell.
struct Discretization {
  PolygonalMesh mesh;
  DegreeDistribution degrees;
  GlobalDofMap dofs;
  DiscretizationOptions options;
  std::vector<LocalSpace> spaces;
  std::vector<LocalOperators> ops;

  /// Largest local Gram condition number.
  double max_gram_condition() const;
  /// Cells whose Gram condition number exceeds kIllConditioned.
  int ill_conditioned_cells() const;
};

inline constexpr double kIllConditioned = 1e14;

Discretization discretize(const PolygonalMesh& mesh, const DegreeDistribution& degrees,
                          const DiscretizationOptions& options = {});

/// [[A, B^T, 0], [B, 0, m], [0, m^T, 0]] after symmetric Dirichlet elimination.
struct SaddlePointSystem {
  Eigen::SparseMatrix<double> A;  // velocity block before boundary conditions
  Eigen::SparseMatrix<double> B;  // pressure-velocity pairing
  Eigen::VectorXd load;
  /// m_q = int_Omega q for every pressure basis function.
  Eigen::VectorXd mean;
  /// Boundary values (zero on interior DOFs).
  Eigen::VectorXd dirichlet;
  Eigen::SparseMatrix<double> matrix;
  Eigen::VectorXd rhs;
  int eliminated_rows = 0;

  int num_velocity() const { return static_cast<int>(A.rows()); }
  int num_pressure() const { return static_cast<int>(B.rows()); }
};

/// Assembles with body force f and Dirichlet data g (nullptr: homogeneous).
SaddlePointSystem assemble(const Discretization& disc, const VectorField& f, const VectorField* dirichlet = nullptr);

struct SolutionFields {
  Eigen::VectorXd velocity;
  /// Per-cell scaled-monomial coefficients over P_{p_K - 1}, stacked by the DOF map.
  Eigen::VectorXd pressure;
  double multiplier = 0.0;
  /// ||K x - b|| / max(||b||, 1) before the mean correction.
  double residual = 0.0;
  /// (nnz(L) + nnz(U)) / nnz(K).
  double fill = 0.0;
  /// Constant removed from the pressure after the solve.
  double mean_correction = 0.0;
};

SolutionFields solve(const SaddlePointSystem& system, const Discretization& disc);

/// int_Omega s_n.
double pressure_integral(const SaddlePointSystem& system, const SolutionFields& fields);

/// Writes `system.matrix` in Matrix Market coordinate format.
void export_matrix_market(const std::filesystem::path& path, const Eigen::SparseMatrix<double>& m);

/// Local DOF vector of cell c.
Eigen::VectorXd local_velocity(const Discretization& disc, const Eigen::VectorXd& velocity, int c);
Eigen::VectorXd local_pressure(const Discretization& disc, const Eigen::VectorXd& pressure, int c);

}  // namespace dfvem
