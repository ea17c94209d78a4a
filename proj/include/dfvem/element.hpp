#pragma once

#include "dfvem/geometry.hpp"
#include "dfvem/polynomial.hpp"
#include "dfvem/quadrature.hpp"

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <vector>

namespace dfvem {

using VectorField = std::function<Eigen::Vector2d(const Point&)>;
/// Row i holds the gradient of component i.
using TensorField = std::function<Eigen::Matrix2d(const Point&)>;

enum class Stabilization { d_recipe, hp_explicit };

const char* to_string(Stabilization s);
Stabilization stabilization_from_string(const std::string& name);

struct CellGeometry {
  std::vector<Point> vertices;  // counter-clockwise
  Point centroid = Point::Zero();
  double diameter = 0.0;
  double area = 0.0;

  static CellGeometry from_mesh(const PolygonalMesh& mesh, int cell);
  static CellGeometry from_polygon(std::vector<Point> vertices);
  double perimeter() const;
};

/// Local degrees of freedom of the divergence-free Stokes virtual element space.
///
/// Ordering, with N_b boundary nodes (per local edge i: vertex i, then the p_e - 1
/// interior Gauss-Lobatto nodes of edge i from vertex i towards vertex i+1):
///   [0, N_b)            x-component values at the boundary nodes
///   [N_b, 2 N_b)        y-component values at the boundary nodes
///   next dim P_{p-3}    (1/|K|) int_K v . (x_perp m_gamma), |gamma| <= p-3
///   next dim P_{p-1}-1  (h_K/|K|) int_K div(v) m_beta, 1 <= |beta| <= p-1
class DofLayout {
public:
  struct EdgeNodes {
    /// Boundary node indices from vertex i to vertex i+1 (endpoints included).
    std::vector<int> nodes;
    int degree = 0;
    double length = 0.0;
    Point normal = Point::Zero();  // outward unit normal
  };

  DofLayout() = default;
  DofLayout(const CellGeometry& cell, int degree, std::span<const int> edge_degrees);

  int degree() const { return degree_; }
  int num_boundary_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_rotational_moments() const { return poly_dim(degree_ - 3); }
  int num_divergence_moments() const { return poly_dim(degree_ - 1) - 1; }
  int size() const { return 2 * num_boundary_nodes() + num_rotational_moments() + num_divergence_moments(); }

  int node_dof(int node, int component) const { return component * num_boundary_nodes() + node; }
  int rotational_dof(int gamma) const { return 2 * num_boundary_nodes() + gamma; }
  /// beta is the graded-lex index of the monomial (1 <= beta < dim P_{p-1}).
  int divergence_dof(int beta) const { return 2 * num_boundary_nodes() + num_rotational_moments() + beta - 1; }

  const std::vector<Point>& boundary_nodes() const { return nodes_; }
  const std::vector<EdgeNodes>& edges() const { return edges_; }

private:
  int degree_ = 0;
  std::vector<Point> nodes_;
  std::vector<EdgeNodes> edges_;
};

/// Geometry, DOF layout, monomial basis and quadrature of one cell, plus the matrix of
/// DOF values of the vector monomials (columns (c, alpha) -> c * dim P_p + alpha).
class LocalSpace {
public:
  LocalSpace(CellGeometry cell, int degree, std::vector<int> edge_degrees, int quadrature_boost = 0);

  const CellGeometry& cell() const { return cell_; }
  const DofLayout& layout() const { return layout_; }
  const ScaledMonomialBasis& basis() const { return basis_; }
  const QuadratureRule& quadrature() const { return quad_; }
  int degree() const { return layout_.degree(); }
  int ndofs() const { return layout_.size(); }
  int npoly() const { return poly_dim(degree()); }
  const std::vector<int>& edge_degrees() const { return edge_degrees_; }

  /// DOF values of every vector monomial of degree <= p (N_K x 2 dim P_p).
  const Eigen::MatrixXd& polynomial_dofs() const { return poly_dofs_; }
  /// Scalar mass matrix int_K m_alpha m_beta for |alpha|, |beta| <= deg (deg <= p).
  Eigen::MatrixXd mass_matrix(int deg) const;
  /// Scalar stiffness matrix int_K grad m_alpha . grad m_beta over P_p.
  Eigen::MatrixXd stiffness_matrix() const;

  /// Row r with r . v = int_K w . v_n, for w in [P_{p-2}]^2 given as stacked scaled-monomial
  /// coefficients. Exact on the virtual space.
  Eigen::RowVectorXd moment_row(const Eigen::Ref<const Eigen::VectorXd>& w) const;
  /// Row r with r . v = int_{dK} g v_n . n for a scalar polynomial g of degree <= p-1.
  Eigen::RowVectorXd flux_row(const Eigen::Ref<const Eigen::VectorXd>& g) const;

  /// DOF vector of a smooth field (boundary values, moments by quadrature).
  Eigen::VectorXd interpolate(const VectorField& u, const TensorField& grad_u) const;
  /// DOF vector of a vector polynomial in [P_p]^2 (stacked coefficients).
  Eigen::VectorXd polynomial_to_dofs(const Eigen::Ref<const Eigen::VectorXd>& q) const {
    return poly_dofs_ * q;
  }

private:
  CellGeometry cell_;
  std::vector<int> edge_degrees_;
  DofLayout layout_;
  ScaledMonomialBasis basis_;
  QuadratureRule quad_;
  Eigen::MatrixXd poly_dofs_;
};

/// DOF-to-polynomial projector: `star` maps DOFs to stacked coefficients, `dof` maps DOFs to
/// the DOFs of the projected polynomial.
struct Projector {
  Eigen::MatrixXd star;
  Eigen::MatrixXd dof;
  double gram_condition = 0.0;
};

/// Full rank check of the DOFs restricted to [P_p]^2; throws SolverError when deficient.
void check_unisolvence(const LocalSpace& space);

/// Energy projector onto [P_p]^2; constants fixed by the boundary mean.
Projector build_pinabla(const LocalSpace& space);
/// L2 projector onto [P_{p-2}]^2 (`dof` left empty).
Projector build_pi0(const LocalSpace& space);
/// Rows: int_K div(v_n) m_beta for |beta| <= p-1.
Eigen::MatrixXd build_divergence(const LocalSpace& space);
/// Stabilization matrix in DOF space (before the (Id - Pi) sandwich).
Eigen::MatrixXd build_stabilization(const LocalSpace& space, Stabilization recipe,
                                    const Projector& pinabla, const Projector& pi0);
/// Boundary mass (u, v)_{0,dK} from the Gauss-Lobatto node values.
Eigen::MatrixXd build_boundary_mass(const LocalSpace& space);
/// Consistency term plus (Id - Pi)^T S (Id - Pi).
Eigen::MatrixXd build_local_stiffness(const LocalSpace& space, const Projector& pinabla,
                                      const Eigen::MatrixXd& stab);
/// (Pi0 f, phi_j)_{0,K} for every basis function.
Eigen::VectorXd build_local_load(const LocalSpace& space, const VectorField& f, const Projector& pi0);

struct LocalOperators {
  Projector pinabla;
  Projector pi0;
  Eigen::MatrixXd divergence;
  Eigen::MatrixXd stabilization;
  Eigen::MatrixXd stiffness;
  Eigen::MatrixXd pressure_mass;  // over P_{p-1}

  double gram_condition() const { return std::max(pinabla.gram_condition, pi0.gram_condition); }
};

LocalOperators build_local_operators(const LocalSpace& space, Stabilization recipe);

/// div(v_n) as scaled-monomial coefficients over P_{p-1}.
Eigen::VectorXd divergence_coefficients(const LocalOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& dofs);

}  // namespace dfvem
