#include "dfvem/polynomial.hpp"

#include "dfvem/exceptions.hpp"

#include <map>
#include <memory>
#include <mutex>

namespace dfvem {

std::vector<Exponent> exponents(int p) {
  std::vector<Exponent> out;
  out.reserve(poly_dim(p));
  for (int k = 0; k <= p; ++k)
    for (int b = 0; b <= k; ++b) out.push_back({k - b, b});
  return out;
}

ScaledMonomialBasis::ScaledMonomialBasis(Point center, double scale, int degree)
    : center_(std::move(center)), scale_(scale), degree_(degree), exps_(exponents(degree)) {
  if (!(scale > 0.0)) throw ConfigError("scaled monomial basis needs a positive scale");
}

Eigen::VectorXd ScaledMonomialBasis::values(const Point& x) const {
  const Point t = to_local(x);
  const int p = degree_;
  // Powers table avoids repeated pow calls.
  Eigen::VectorXd px(p + 1), py(p + 1);
  px(0) = py(0) = 1.0;
  for (int k = 1; k <= p; ++k) {
    px(k) = px(k - 1) * t.x();
    py(k) = py(k - 1) * t.y();
  }
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v(i) = px(exps_[i].a) * py(exps_[i].b);
  return v;
}

Eigen::Matrix<double, 2, Eigen::Dynamic> ScaledMonomialBasis::gradients(const Point& x) const {
  const Point t = to_local(x);
  const int p = degree_;
  Eigen::VectorXd px(p + 1), py(p + 1);
  px(0) = py(0) = 1.0;
  for (int k = 1; k <= p; ++k) {
    px(k) = px(k - 1) * t.x();
    py(k) = py(k - 1) * t.y();
  }
  Eigen::Matrix<double, 2, Eigen::Dynamic> g(2, size());
  for (int i = 0; i < size(); ++i) {
    const auto [a, b] = exps_[i];
    g(0, i) = a > 0 ? a * px(a - 1) * py(b) / scale_ : 0.0;
    g(1, i) = b > 0 ? b * px(a) * py(b - 1) / scale_ : 0.0;
  }
  return g;
}

double ScaledMonomialBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& coeffs, const Point& x) const {
  const Eigen::VectorXd v = values(x);
  const Eigen::Index n = std::min<Eigen::Index>(coeffs.size(), v.size());
  return coeffs.head(n).dot(v.head(n));
}

Eigen::MatrixXd derivative_matrix(int p, int dir) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(poly_dim(p - 1), poly_dim(p));
  for (const auto& [a, b] : exponents(p)) {
    const int col = monomial_index(a, b);
    if (dir == 0 && a > 0) d(monomial_index(a - 1, b), col) = a;
    if (dir == 1 && b > 0) d(monomial_index(a, b - 1), col) = b;
  }
  return d;
}

Eigen::MatrixXd multiplication_matrix(int p, int dir) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(poly_dim(p + 1), poly_dim(p));
  for (const auto& [a, b] : exponents(p)) {
    const int col = monomial_index(a, b);
    m(dir == 0 ? monomial_index(a + 1, b) : monomial_index(a, b + 1), col) = 1.0;
  }
  return m;
}

Eigen::MatrixXd laplacian_matrix(int p) {
  if (p < 2) return Eigen::MatrixXd::Zero(0, poly_dim(p));
  return derivative_matrix(p - 1, 0) * derivative_matrix(p, 0) + derivative_matrix(p - 1, 1) * derivative_matrix(p, 1);
}

Eigen::MatrixXd VectorPolySplit::rotational_basis(int degree) {
  const int n = poly_dim(degree);
  const int nr = poly_dim(degree - 1);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(2 * n, nr);
  if (nr == 0) return r;
  const Eigen::MatrixXd mx = multiplication_matrix(degree - 1, 0);
  const Eigen::MatrixXd my = multiplication_matrix(degree - 1, 1);
  r.topRows(n) = -my;
  r.bottomRows(n) = mx;
  return r;
}

VectorPolySplit::VectorPolySplit(int degree) : degree_(degree) {
  if (degree < 0) throw ConfigError("vector polynomial split needs a nonnegative degree");
  const int n = poly_dim(degree);
  basis_ = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  const Eigen::MatrixXd dx = derivative_matrix(degree + 1, 0);
  const Eigen::MatrixXd dy = derivative_matrix(degree + 1, 1);
  // Skip the constant potential (column 0): its gradient vanishes.
  basis_.block(0, 0, n, gradient_dim()) = dx.rightCols(gradient_dim());
  basis_.block(n, 0, n, gradient_dim()) = dy.rightCols(gradient_dim());
  basis_.rightCols(rotational_dim()) = rotational_basis(degree);
  lu_.compute(basis_);
  if (!lu_.isInvertible())
    throw SolverError("vector polynomial split of degree " + std::to_string(degree) + " is singular");
}

VectorPolySplit::Parts VectorPolySplit::decompose(const Eigen::Ref<const Eigen::VectorXd>& q) const {
  if (q.size() != vector_dim()) throw ConfigError("vector polynomial has the wrong size for this split");
  const Eigen::VectorXd c = lu_.solve(q);
  Parts parts;
  parts.potential = Eigen::VectorXd::Zero(poly_dim(degree_ + 1));
  parts.potential.tail(gradient_dim()) = c.head(gradient_dim());
  parts.rotational = c.tail(rotational_dim());
  return parts;
}

Eigen::VectorXd VectorPolySplit::gradient_part(const Parts& parts) const {
  return basis_.leftCols(gradient_dim()) * parts.potential.tail(gradient_dim());
}

Eigen::VectorXd VectorPolySplit::rotational_part(const Parts& parts) const {
  return basis_.rightCols(rotational_dim()) * parts.rotational;
}

double VectorPolySplit::condition_number() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(basis_);
  const auto& s = svd.singularValues();
  return s(0) / s(s.size() - 1);
}

const VectorPolySplit& vector_split(int degree) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<VectorPolySplit>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[degree];
  if (!slot) slot = std::make_unique<VectorPolySplit>(degree);
  return *slot;
}

}  // namespace dfvem
