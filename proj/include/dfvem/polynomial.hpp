#pragma once

#include "dfvem/geometry.hpp"

#include <Eigen/Dense>

#include <vector>

namespace dfvem {

/// dim P_p in two variables; 0 for negative p.
constexpr int poly_dim(int p) { return p < 0 ? 0 : (p + 1) * (p + 2) / 2; }

struct Exponent {
  int a = 0;  // power of x
  int b = 0;  // power of y
};

/// Graded lexicographic position of x^a y^b: degree blocks in increasing order, and inside
/// degree k the order (k,0), (k-1,1), ..., (0,k). P_d is therefore a prefix of P_{d+1}.
constexpr int monomial_index(int a, int b) { return (a + b) * (a + b + 1) / 2 + b; }

std::vector<Exponent> exponents(int p);

/// m_alpha(x) = ((x - x_K) / h_K)^alpha, alpha ranging over graded lex exponents of degree <= p.
class ScaledMonomialBasis {
public:
  ScaledMonomialBasis(Point center, double scale, int degree);

  int degree() const { return degree_; }
  int size() const { return poly_dim(degree_); }
  const Point& center() const { return center_; }
  double scale() const { return scale_; }

  Point to_local(const Point& x) const { return (x - center_) / scale_; }
  Eigen::VectorXd values(const Point& x) const;
  /// Row 0: d/dx, row 1: d/dy, in physical coordinates.
  Eigen::Matrix<double, 2, Eigen::Dynamic> gradients(const Point& x) const;
  /// Evaluates sum_alpha coeffs[alpha] m_alpha(x); coeffs may be shorter than size().
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Point& x) const;

private:
  Point center_;
  double scale_;
  int degree_;
  std::vector<Exponent> exps_;
};

// Coefficient-space maps acting on scaled-monomial coefficient vectors (local variables).

/// d/d(x_dir) on local variables: dim P_{p-1} x dim P_p.
Eigen::MatrixXd derivative_matrix(int p, int dir);
/// Multiplication by the local variable x_dir: dim P_{p+1} x dim P_p.
Eigen::MatrixXd multiplication_matrix(int p, int dir);
/// Local Laplacian: dim P_{p-2} x dim P_p.
Eigen::MatrixXd laplacian_matrix(int p);

/// Splitting [P_d]^2 = grad P_{d+1} (+) x_perp P_{d-1}, with x_perp = (-y, x) in local
/// variables. Vector polynomials are stacked coefficient vectors [q_x; q_y] of length
/// 2 dim P_d.
class VectorPolySplit {
public:
  explicit VectorPolySplit(int degree);

  struct Parts {
    /// Coefficients over P_{d+1} of a potential r with gradient part = grad r (local
    /// gradient); the constant coefficient is always zero.
    Eigen::VectorXd potential;
    /// Coefficients over P_{d-1}: rotational part = sum_gamma c_gamma x_perp m_gamma.
    Eigen::VectorXd rotational;
  };

  int degree() const { return degree_; }
  int vector_dim() const { return 2 * poly_dim(degree_); }
  int gradient_dim() const { return poly_dim(degree_ + 1) - 1; }
  int rotational_dim() const { return poly_dim(degree_ - 1); }

  Parts decompose(const Eigen::Ref<const Eigen::VectorXd>& q) const;
  Eigen::VectorXd gradient_part(const Parts& parts) const;
  Eigen::VectorXd rotational_part(const Parts& parts) const;
  Eigen::VectorXd recompose(const Parts& parts) const { return gradient_part(parts) + rotational_part(parts); }

  /// Columns: local gradients of m_beta (1 <= |beta| <= d+1), then x_perp m_gamma.
  const Eigen::MatrixXd& basis_matrix() const { return basis_; }
  double condition_number() const;

  /// Stacked coefficients of x_perp m_gamma for every |gamma| <= d-1 (columns).
  static Eigen::MatrixXd rotational_basis(int degree);

private:
  int degree_;
  Eigen::MatrixXd basis_;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_;
};

/// Shared, lazily built split for the given degree (thread-safe).
const VectorPolySplit& vector_split(int degree);

}  // namespace dfvem
