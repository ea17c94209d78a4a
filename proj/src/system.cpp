#include "dfvem/system.hpp"

#include "dfvem/exceptions.hpp"

#include <Eigen/SparseLU>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <optional>
#include <thread>

namespace dfvem {

double Discretization::max_gram_condition() const {
  double m = 0.0;
  for (const auto& o : ops) m = std::max(m, o.gram_condition());
  return m;
}

int Discretization::ill_conditioned_cells() const {
  return static_cast<int>(
      std::count_if(ops.begin(), ops.end(), [](const LocalOperators& o) { return o.gram_condition() > kIllConditioned; }));
}

Discretization discretize(const PolygonalMesh& mesh, const DegreeDistribution& degrees,
                          const DiscretizationOptions& options) {
  Discretization disc{mesh, degrees, build_dof_map(mesh, degrees), options, {}, {}};
  const int nc = mesh.num_cells();
  std::vector<std::optional<LocalSpace>> spaces(nc);
  std::vector<LocalOperators> ops(nc);
  std::vector<std::exception_ptr> errors(nc);

  auto work = [&](int c) {
    try {
      std::vector<int> edge_degrees;
      for (int e : mesh.cell_edges(c)) edge_degrees.push_back(degrees.edge_degree[e]);
      spaces[c].emplace(CellGeometry::from_mesh(mesh, c), degrees.cell_degree[c], std::move(edge_degrees),
                        options.quadrature_boost);
      check_unisolvence(*spaces[c]);
      ops[c] = build_local_operators(*spaces[c], options.stabilization);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };

  const int threads = std::clamp(options.threads, 1, std::max(1, nc));
  if (threads == 1) {
    for (int c = 0; c < nc; ++c) work(c);
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (int c = t; c < nc; c += threads) work(c);
      });
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  disc.spaces.reserve(nc);
  for (auto& s : spaces) disc.spaces.push_back(std::move(*s));
  disc.ops = std::move(ops);
  return disc;
}

SaddlePointSystem assemble(const Discretization& disc, const VectorField& f, const VectorField* dirichlet) {
  const auto& map = disc.dofs;
  const int nu = map.num_velocity;
  const int np = map.num_pressure;
  const int n = nu + np + 1;

  SaddlePointSystem sys;
  sys.load = Eigen::VectorXd::Zero(nu);
  sys.mean = Eigen::VectorXd::Zero(np);
  std::vector<Eigen::Triplet<double>> ta, tb;
  for (int c = 0; c < disc.mesh.num_cells(); ++c) {
    const auto& ops = disc.ops[c];
    const auto& g = map.velocity[c];
    const int nl = static_cast<int>(g.size());
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        if (ops.stiffness(i, j) != 0.0) ta.emplace_back(g[i], g[j], ops.stiffness(i, j));
    const int off = map.pressure_offset[c];
    for (int k = 0; k < map.pressure_size[c]; ++k) {
      for (int j = 0; j < nl; ++j)
        if (ops.divergence(k, j) != 0.0) tb.emplace_back(off + k, g[j], ops.divergence(k, j));
      sys.mean(off + k) = ops.pressure_mass(0, k);
    }
    const Eigen::VectorXd load = build_local_load(disc.spaces[c], f, ops.pi0);
    for (int i = 0; i < nl; ++i) sys.load(g[i]) += load(i);
  }
  sys.A.resize(nu, nu);
  sys.A.setFromTriplets(ta.begin(), ta.end());
  sys.B.resize(np, nu);
  sys.B.setFromTriplets(tb.begin(), tb.end());

  sys.dirichlet = Eigen::VectorXd::Zero(nu);
  if (dirichlet) {
    for (int node = 0; node < map.num_nodes; ++node) {
      if (!map.boundary[map.node_dof(node, 0)]) continue;
      const Eigen::Vector2d v = (*dirichlet)(map.nodes[node]);
      if (!v.allFinite())
        throw ConfigError("Dirichlet data is not finite at boundary node (" + std::to_string(map.nodes[node].x()) +
                          ", " + std::to_string(map.nodes[node].y()) + ")");
      sys.dirichlet(map.node_dof(node, 0)) = v.x();
      sys.dirichlet(map.node_dof(node, 1)) = v.y();
    }
  }

  sys.rhs = Eigen::VectorXd::Zero(n);
  sys.rhs.head(nu) = sys.load;
  std::vector<Eigen::Triplet<double>> tk;
  tk.reserve(sys.A.nonZeros() + 2 * sys.B.nonZeros() + 2 * np + nu);
  const auto& fixed = map.boundary;
  for (int j = 0; j < nu; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.A, j); it; ++it) {
      const int i = static_cast<int>(it.row());
      if (fixed[i]) continue;
      if (fixed[j])
        sys.rhs(i) -= it.value() * sys.dirichlet(j);
      else
        tk.emplace_back(i, j, it.value());
    }
  for (int j = 0; j < nu; ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(sys.B, j); it; ++it) {
      const int r = nu + static_cast<int>(it.row());
      if (fixed[j]) {
        sys.rhs(r) -= it.value() * sys.dirichlet(j);
      } else {
        tk.emplace_back(r, j, it.value());
        tk.emplace_back(j, r, it.value());
      }
    }
  for (int k = 0; k < np; ++k) {
    tk.emplace_back(nu + np, nu + k, sys.mean(k));
    tk.emplace_back(nu + k, nu + np, sys.mean(k));
  }
  for (int i = 0; i < nu; ++i)
    if (fixed[i]) {
      tk.emplace_back(i, i, 1.0);
      sys.rhs(i) = sys.dirichlet(i);
      ++sys.eliminated_rows;
    }
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(tk.begin(), tk.end());
  return sys;
}

SolutionFields solve(const SaddlePointSystem& system, const Discretization& disc) {
  const int nu = system.num_velocity();
  const int np = system.num_pressure();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(system.matrix);
  lu.factorize(system.matrix);
  if (lu.info() != Eigen::Success)
    throw SolverError("saddle-point factorization failed (" + lu.lastErrorMessage() +
                      "); the velocity/pressure pairing may violate the inf-sup condition");
  const Eigen::VectorXd x = lu.solve(system.rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw SolverError("saddle-point solve failed");

  SolutionFields out;
  out.velocity = x.head(nu);
  out.pressure = x.segment(nu, np);
  out.multiplier = x(nu + np);
  out.residual = (system.matrix * x - system.rhs).norm() / std::max(system.rhs.norm(), 1.0);
  out.fill = static_cast<double>(lu.nnzL() + lu.nnzU()) / static_cast<double>(system.matrix.nonZeros());

  double area = 0.0;
  for (int c = 0; c < disc.mesh.num_cells(); ++c) area += system.mean(disc.dofs.pressure_offset[c]);
  out.mean_correction = system.mean.dot(out.pressure) / area;
  for (int c = 0; c < disc.mesh.num_cells(); ++c) out.pressure(disc.dofs.pressure_offset[c]) -= out.mean_correction;
  return out;
}

double pressure_integral(const SaddlePointSystem& system, const SolutionFields& fields) {
  return system.mean.dot(fields.pressure);
}

void export_matrix_market(const std::filesystem::path& path, const Eigen::SparseMatrix<double>& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  out << std::setprecision(17);
  for (int j = 0; j < m.outerSize(); ++j)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, j); it; ++it)
      out << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

Eigen::VectorXd local_velocity(const Discretization& disc, const Eigen::VectorXd& velocity, int c) {
  const auto& g = disc.dofs.velocity[c];
  Eigen::VectorXd v(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) v(i) = velocity(g[i]);
  return v;
}

Eigen::VectorXd local_pressure(const Discretization& disc, const Eigen::VectorXd& pressure, int c) {
  return pressure.segment(disc.dofs.pressure_offset[c], disc.dofs.pressure_size[c]);
}

}  // namespace dfvem
