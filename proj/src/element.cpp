#include "dfvem/element.hpp"

#include "dfvem/exceptions.hpp"

#include <cmath>
#include <sstream>

namespace dfvem {

namespace {

double condition_number(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd block_diag2(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * m.rows(), 2 * m.cols());
  out.topLeftCorner(m.rows(), m.cols()) = m;
  out.bottomRightCorner(m.rows(), m.cols()) = m;
  return out;
}

// Node quadrature of edge e: Gauss-Lobatto weights scaled to the edge length.
std::vector<double> node_weights(const DofLayout::EdgeNodes& e) {
  const auto& rule = gauss_lobatto(e.degree + 1);
  std::vector<double> w(rule.weights.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 0.5 * e.length * rule.weights[i];
  return w;
}

}  // namespace

const char* to_string(Stabilization s) { return s == Stabilization::d_recipe ? "d_recipe" : "hp_explicit"; }

Stabilization stabilization_from_string(const std::string& name) {
  if (name == "d_recipe") return Stabilization::d_recipe;
  if (name == "hp_explicit") return Stabilization::hp_explicit;
  throw ConfigError("unknown stabilization '" + name + "' (expected d_recipe or hp_explicit)");
}

CellGeometry CellGeometry::from_mesh(const PolygonalMesh& mesh, int cell) {
  CellGeometry g;
  g.vertices = mesh.cell_points(cell);
  g.centroid = mesh.centroid(cell);
  g.diameter = mesh.diameter(cell);
  g.area = mesh.area(cell);
  return g;
}

CellGeometry CellGeometry::from_polygon(std::vector<Point> vertices) {
  CellGeometry g;
  g.area = signed_area(vertices);
  if (!(g.area > 0.0)) throw MeshError("cell polygon must be counter-clockwise with positive area");
  g.centroid = polygon_centroid(vertices);
  g.diameter = polygon_diameter(vertices);
  g.vertices = std::move(vertices);
  return g;
}

double CellGeometry::perimeter() const {
  double s = 0.0;
  for (std::size_t i = 0; i < vertices.size(); ++i) s += (vertices[(i + 1) % vertices.size()] - vertices[i]).norm();
  return s;
}

DofLayout::DofLayout(const CellGeometry& cell, int degree, std::span<const int> edge_degrees) : degree_(degree) {
  if (degree < kMinDegree) throw ConfigError("element degree must be at least 2; got " + std::to_string(degree));
  const int n = static_cast<int>(cell.vertices.size());
  if (static_cast<int>(edge_degrees.size()) != n) throw ConfigError("one edge degree per cell edge is required");
  std::vector<int> offset(n + 1, 0);
  for (int i = 0; i < n; ++i) {
    if (edge_degrees[i] < degree)
      throw ConfigError("edge degree " + std::to_string(edge_degrees[i]) + " is below the cell degree " +
                        std::to_string(degree));
    offset[i + 1] = offset[i] + edge_degrees[i];
  }
  nodes_.reserve(offset[n]);
  edges_.resize(n);
  for (int i = 0; i < n; ++i) {
    const Point& a = cell.vertices[i];
    const Point& b = cell.vertices[(i + 1) % n];
    const auto gl = gauss_lobatto_nodes(edge_degrees[i], a, b);
    nodes_.push_back(a);
    for (int k = 1; k < edge_degrees[i]; ++k) nodes_.push_back(gl[k]);
    auto& e = edges_[i];
    e.degree = edge_degrees[i];
    for (int k = 0; k < edge_degrees[i]; ++k) e.nodes.push_back(offset[i] + k);
    e.nodes.push_back(offset[i + 1] % offset[n]);
    const Point d = b - a;
    e.length = d.norm();
    e.normal = Point(d.y(), -d.x()) / e.length;
  }
}

LocalSpace::LocalSpace(CellGeometry cell, int degree, std::vector<int> edge_degrees, int quadrature_boost)
    : cell_(std::move(cell)),
      edge_degrees_(std::move(edge_degrees)),
      layout_(cell_, degree, edge_degrees_),
      basis_(cell_.centroid, cell_.diameter, degree),
      quad_(polygon_quadrature(cell_.vertices, 2 * degree + 2 + quadrature_boost)) {
  const int p = degree;
  const int np = npoly();
  const int nb = layout_.num_boundary_nodes();
  poly_dofs_ = Eigen::MatrixXd::Zero(layout_.size(), 2 * np);
  for (int node = 0; node < nb; ++node) {
    const Eigen::VectorXd v = basis_.values(layout_.boundary_nodes()[node]);
    poly_dofs_.block(layout_.node_dof(node, 0), 0, 1, np) = v.transpose();
    poly_dofs_.block(layout_.node_dof(node, 1), np, 1, np) = v.transpose();
  }
  const int nh = layout_.num_rotational_moments();
  const int nd = poly_dim(p - 1);
  const double inv_area = 1.0 / cell_.area;
  const double div_scale = cell_.diameter / cell_.area;
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const Point& x = quad_.points[q];
    const double w = quad_.weights[q];
    const Eigen::VectorXd m = basis_.values(x);
    const auto g = basis_.gradients(x);
    const Point t = basis_.to_local(x);
    for (int gam = 0; gam < nh; ++gam) {
      const int row = layout_.rotational_dof(gam);
      const double hx = -t.y() * m(gam);
      const double hy = t.x() * m(gam);
      poly_dofs_.block(row, 0, 1, np) += (w * inv_area * hx) * m.transpose();
      poly_dofs_.block(row, np, 1, np) += (w * inv_area * hy) * m.transpose();
    }
    for (int beta = 1; beta < nd; ++beta) {
      const int row = layout_.divergence_dof(beta);
      poly_dofs_.block(row, 0, 1, np) += (w * div_scale * m(beta)) * g.row(0);
      poly_dofs_.block(row, np, 1, np) += (w * div_scale * m(beta)) * g.row(1);
    }
  }
}

Eigen::MatrixXd LocalSpace::mass_matrix(int deg) const {
  const int n = poly_dim(deg);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const Eigen::VectorXd v = basis_.values(quad_.points[q]).head(n);
    m.noalias() += quad_.weights[q] * v * v.transpose();
  }
  return m;
}

Eigen::MatrixXd LocalSpace::stiffness_matrix() const {
  const int n = npoly();
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const auto g = basis_.gradients(quad_.points[q]);
    k.noalias() += quad_.weights[q] * g.transpose() * g;
  }
  return k;
}

Eigen::RowVectorXd LocalSpace::flux_row(const Eigen::Ref<const Eigen::VectorXd>& g) const {
  Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(layout_.size());
  for (const auto& e : layout_.edges()) {
    const auto w = node_weights(e);
    for (std::size_t i = 0; i < e.nodes.size(); ++i) {
      const int node = e.nodes[i];
      const double gv = basis_.evaluate(g, layout_.boundary_nodes()[node]);
      row(layout_.node_dof(node, 0)) += w[i] * gv * e.normal.x();
      row(layout_.node_dof(node, 1)) += w[i] * gv * e.normal.y();
    }
  }
  return row;
}

Eigen::RowVectorXd LocalSpace::moment_row(const Eigen::Ref<const Eigen::VectorXd>& w) const {
  // w = grad_local r + sum c_gamma x_perp m_gamma = h grad r + ...; integrate the gradient part
  // by parts: int grad r . v = -int r div v + int_dK r v.n.
  const int p = degree();
  const auto& split = vector_split(p - 2);
  const auto parts = split.decompose(w);
  const double h = cell_.diameter;
  const double area = cell_.area;
  Eigen::RowVectorXd row = h * flux_row(parts.potential);
  for (int beta = 1; beta < parts.potential.size(); ++beta) row(layout_.divergence_dof(beta)) -= area * parts.potential(beta);
  for (int gam = 0; gam < parts.rotational.size(); ++gam) row(layout_.rotational_dof(gam)) += area * parts.rotational(gam);
  return row;
}

Eigen::VectorXd LocalSpace::interpolate(const VectorField& u, const TensorField& grad_u) const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(layout_.size());
  const int nb = layout_.num_boundary_nodes();
  for (int node = 0; node < nb; ++node) {
    const Eigen::Vector2d v = u(layout_.boundary_nodes()[node]);
    d(layout_.node_dof(node, 0)) = v.x();
    d(layout_.node_dof(node, 1)) = v.y();
  }
  const int nh = layout_.num_rotational_moments();
  const int nd = poly_dim(degree() - 1);
  for (std::size_t q = 0; q < quad_.size(); ++q) {
    const Point& x = quad_.points[q];
    const double w = quad_.weights[q];
    const Eigen::VectorXd m = basis_.values(x);
    const Point t = basis_.to_local(x);
    const Eigen::Vector2d v = u(x);
    const double div = grad_u(x).trace();
    for (int gam = 0; gam < nh; ++gam)
      d(layout_.rotational_dof(gam)) += w * (-t.y() * v.x() + t.x() * v.y()) * m(gam) / cell_.area;
    for (int beta = 1; beta < nd; ++beta)
      d(layout_.divergence_dof(beta)) += w * div * m(beta) * cell_.diameter / cell_.area;
  }
  return d;
}

void check_unisolvence(const LocalSpace& space) {
  // Unit columns remove the scaling of high-degree monomials from the rank decision.
  const auto& raw = space.polynomial_dofs();
  const Eigen::MatrixXd d = raw * raw.colwise().norm().cwiseInverse().asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d);
  qr.setThreshold(1e-12);
  if (qr.rank() < d.cols()) {
    std::ostringstream msg;
    msg << "DOF functionals are not unisolvent on [P_" << space.degree() << "]^2: rank " << qr.rank() << " < "
        << d.cols() << " (cell with " << space.cell().vertices.size() << " vertices, centroid ("
        << space.cell().centroid.x() << ", " << space.cell().centroid.y() << "), h=" << space.cell().diameter << ")";
    throw SolverError(msg.str());
  }
}

Projector build_pinabla(const LocalSpace& space) {
  const int p = space.degree();
  const int np = space.npoly();
  const int n2 = poly_dim(p - 2);
  const int ndofs = space.ndofs();
  const auto& layout = space.layout();
  const auto& basis = space.basis();
  const double h = space.cell().diameter;
  const double perimeter = space.cell().perimeter();

  const Eigen::MatrixXd gt = block_diag2(space.stiffness_matrix());
  Eigen::MatrixXd g = gt;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2 * np, ndofs);
  const Eigen::MatrixXd lap = laplacian_matrix(p) / (h * h);

  for (int c = 0; c < 2; ++c) {
    // Constants: boundary mean of v - Pi v vanishes.
    g.row(c * np).setZero();
    for (const auto& e : layout.edges()) {
      const auto w = node_weights(e);
      for (std::size_t i = 0; i < e.nodes.size(); ++i) {
        const int node = e.nodes[i];
        const Eigen::VectorXd m = basis.values(layout.boundary_nodes()[node]);
        g.block(c * np, c * np, 1, np) += (w[i] / perimeter) * m.transpose();
        b(c * np, layout.node_dof(node, c)) += w[i] / perimeter;
      }
    }
    for (int alpha = 1; alpha < np; ++alpha) {
      Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * n2);
      if (n2 > 0) w.segment(c * n2, n2) = lap.col(alpha);
      Eigen::RowVectorXd row = -space.moment_row(w);
      for (const auto& e : layout.edges()) {
        const auto wt = node_weights(e);
        for (std::size_t i = 0; i < e.nodes.size(); ++i) {
          const int node = e.nodes[i];
          const auto grad = basis.gradients(layout.boundary_nodes()[node]);
          row(layout.node_dof(node, c)) += wt[i] * (grad(0, alpha) * e.normal.x() + grad(1, alpha) * e.normal.y());
        }
      }
      b.row(c * np + alpha) = row;
    }
  }

  Projector out;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(g);
  // Large condition numbers are expected at high degree; only an exact rank loss is fatal.
  lu.setThreshold(1e-300);
  if (!lu.isInvertible())
    throw SolverError("singular energy-projector Gram matrix (degree " + std::to_string(p) + ", h=" +
                      std::to_string(h) + ", condition " + std::to_string(condition_number(g)) + ")");
  out.star = lu.solve(b);
  out.dof = space.polynomial_dofs() * out.star;
  out.gram_condition = condition_number(g);
  return out;
}

Projector build_pi0(const LocalSpace& space) {
  const int p = space.degree();
  const int n2 = poly_dim(p - 2);
  const Eigen::MatrixXd m = space.mass_matrix(p - 2);
  Eigen::MatrixXd c0(2 * n2, space.ndofs());
  for (int k = 0; k < 2 * n2; ++k) c0.row(k) = space.moment_row(Eigen::VectorXd::Unit(2 * n2, k));
  Eigen::LDLT<Eigen::MatrixXd> ldlt(block_diag2(m));
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0))
    throw SolverError("singular L2-projector Gram matrix (degree " + std::to_string(p) + ")");
  Projector out;
  out.star = ldlt.solve(c0);
  out.gram_condition = condition_number(m);
  return out;
}

Eigen::MatrixXd build_divergence(const LocalSpace& space) {
  const int nq = poly_dim(space.degree() - 1);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(nq, space.ndofs());
  d.row(0) = space.flux_row(Eigen::VectorXd::Unit(1, 0));
  const double scale = space.cell().area / space.cell().diameter;
  for (int beta = 1; beta < nq; ++beta) d(beta, space.layout().divergence_dof(beta)) = scale;
  return d;
}

Eigen::MatrixXd build_boundary_mass(const LocalSpace& space) {
  const auto& layout = space.layout();
  const int n = space.ndofs();
  Eigen::MatrixXd mb = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : layout.edges()) {
    const auto& gl = gauss_lobatto(e.degree + 1).points;
    const auto& gauss = gauss_legendre(e.degree + 1);
    const int k = static_cast<int>(gl.size());
    // Lagrange basis through the Gauss-Lobatto nodes, evaluated at the Gauss points.
    Eigen::MatrixXd lag(gauss.points.size(), k);
    for (std::size_t i = 0; i < gauss.points.size(); ++i)
      for (int j = 0; j < k; ++j) {
        double l = 1.0;
        for (int m = 0; m < k; ++m)
          if (m != j) l *= (gauss.points[i] - gl[m]) / (gl[j] - gl[m]);
        lag(i, j) = l;
      }
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(gauss.weights.data(), gauss.weights.size()) * (0.5 * e.length);
    const Eigen::MatrixXd local = lag.transpose() * w.asDiagonal() * lag;
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          mb(layout.node_dof(e.nodes[i], c), layout.node_dof(e.nodes[j], c)) += local(i, j);
  }
  return mb;
}

Eigen::MatrixXd build_stabilization(const LocalSpace& space, Stabilization recipe, const Projector& pinabla,
                                   const Projector& pi0) {
  const int n = space.ndofs();
  if (recipe == Stabilization::d_recipe) {
    const Eigen::MatrixXd gt = block_diag2(space.stiffness_matrix());
    Eigen::VectorXd diag(n);
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd c = pinabla.star.col(j);
      diag(j) = std::max(1.0, std::sqrt(std::max(0.0, c.dot(gt * c))));
    }
    return diag.asDiagonal();
  }
  const double p = space.degree();
  const double h = space.cell().diameter;
  const Eigen::MatrixXd h0 = block_diag2(space.mass_matrix(space.degree() - 2));
  return (p / h) * build_boundary_mass(space) + (p * p / (h * h)) * pi0.star.transpose() * h0 * pi0.star;
}

Eigen::MatrixXd build_local_stiffness(const LocalSpace& space, const Projector& pinabla, const Eigen::MatrixXd& stab) {
  const int n = space.ndofs();
  const Eigen::MatrixXd gt = block_diag2(space.stiffness_matrix());
  const Eigen::MatrixXd rest = Eigen::MatrixXd::Identity(n, n) - pinabla.dof;
  Eigen::MatrixXd k = pinabla.star.transpose() * gt * pinabla.star + rest.transpose() * stab * rest;
  return 0.5 * (k + k.transpose());
}

Eigen::VectorXd build_local_load(const LocalSpace& space, const VectorField& f, const Projector& pi0) {
  const int n2 = poly_dim(space.degree() - 2);
  // f is not polynomial in general, so the load gets the error-norm exactness 2p+6.
  const QuadratureRule quad =
      polygon_quadrature(space.cell().vertices, space.quadrature().exactness + 4);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(2 * n2);
  for (std::size_t q = 0; q < quad.size(); ++q) {
    const Eigen::VectorXd m = space.basis().values(quad.points[q]).head(n2);
    const Eigen::Vector2d fv = f(quad.points[q]);
    b.head(n2) += quad.weights[q] * fv.x() * m;
    b.tail(n2) += quad.weights[q] * fv.y() * m;
  }
  return pi0.star.transpose() * b;
}

LocalOperators build_local_operators(const LocalSpace& space, Stabilization recipe) {
  LocalOperators ops;
  ops.pinabla = build_pinabla(space);
  ops.pi0 = build_pi0(space);
  ops.divergence = build_divergence(space);
  ops.stabilization = build_stabilization(space, recipe, ops.pinabla, ops.pi0);
  ops.stiffness = build_local_stiffness(space, ops.pinabla, ops.stabilization);
  ops.pressure_mass = space.mass_matrix(space.degree() - 1);
  return ops;
}

Eigen::VectorXd divergence_coefficients(const LocalOperators& ops, const Eigen::Ref<const Eigen::VectorXd>& dofs) {
  return ops.pressure_mass.ldlt().solve(ops.divergence * dofs);
}

}  // namespace dfvem
