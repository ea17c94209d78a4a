#include "dfvem/infsup.hpp"

#include "dfvem/exceptions.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>

namespace dfvem {

InfSupMatrices infsup_matrices(const Discretization& disc, const InfSupOptions& options) {
  if (options.extra_pressure_degree < 0 || options.extra_pressure_degree > 1)
    throw ConfigError("extra pressure degree must be 0 or 1");
  const auto& map = disc.dofs;
  const int nc = disc.mesh.num_cells();

  std::vector<int> offset(nc + 1, 0);
  for (int c = 0; c < nc; ++c)
    offset[c + 1] = offset[c] + poly_dim(disc.degrees.cell_degree[c] - 1 + options.extra_pressure_degree);
  const int np = offset[nc];

  std::vector<int> free_index(map.num_velocity, -1);
  int nf = 0;
  for (int i = 0; i < map.num_velocity; ++i)
    if (!map.boundary[i]) free_index[i] = nf++;
  if (nf == 0) throw ConfigError("inf-sup estimate needs interior velocity DOFs");

  std::vector<Eigen::Triplet<double>> ta, tb;
  InfSupMatrices out;
  out.mass = Eigen::MatrixXd::Zero(np, np);
  out.constant = Eigen::VectorXd::Zero(np);
  for (int c = 0; c < nc; ++c) {
    const auto& ops = disc.ops[c];
    const auto& g = map.velocity[c];
    const int nl = static_cast<int>(g.size());
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nl; ++j)
        if (free_index[g[i]] >= 0 && free_index[g[j]] >= 0 && ops.stiffness(i, j) != 0.0)
          ta.emplace_back(free_index[g[i]], free_index[g[j]], ops.stiffness(i, j));

    const int p = disc.degrees.cell_degree[c];
    const int nq = offset[c + 1] - offset[c];
    Eigen::MatrixXd div = ops.divergence;
    Eigen::MatrixXd mass = ops.pressure_mass;
    if (options.extra_pressure_degree == 1) {
      const Eigen::MatrixXd full = disc.spaces[c].mass_matrix(p);
      const int n1 = static_cast<int>(ops.pressure_mass.rows());
      const Eigen::MatrixXd recon = ops.pressure_mass.ldlt().solve(ops.divergence);
      div.resize(nq, nl);
      div.topRows(n1) = ops.divergence;
      div.bottomRows(nq - n1) = full.block(n1, 0, nq - n1, n1) * recon;
      mass = full;
    }
    for (int k = 0; k < nq; ++k)
      for (int j = 0; j < nl; ++j)
        if (free_index[g[j]] >= 0 && div(k, j) != 0.0) tb.emplace_back(offset[c] + k, free_index[g[j]], div(k, j));
    out.mass.block(offset[c], offset[c], nq, nq) = mass;
    out.constant(offset[c]) = 1.0;
  }
  Eigen::SparseMatrix<double> a(nf, nf), b(np, nf);
  a.setFromTriplets(ta.begin(), ta.end());
  b.setFromTriplets(tb.begin(), tb.end());

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw SolverError("velocity stiffness with boundary conditions is singular");
  const Eigen::MatrixXd bt = Eigen::MatrixXd(b.transpose());
  const Eigen::MatrixXd x = ldlt.solve(bt);
  out.schur = b * x;
  out.schur = 0.5 * (out.schur + out.schur.transpose()).eval();
  return out;
}

InfSupResult estimate_infsup(const Discretization& disc, const InfSupOptions& options) {
  const auto m = infsup_matrices(disc, options);
  const Eigen::VectorXd mc = m.mass * m.constant;
  const double cmc = m.constant.dot(mc);

  Eigen::LLT<Eigen::MatrixXd> mass_llt(m.mass);
  if (mass_llt.info() != Eigen::Success) throw SolverError("pressure mass matrix is not positive definite");
  // trace(M^{-1} S) bounds the largest eigenvalue; the constant mode is lifted above it.
  const double tau = 2.0 * mass_llt.solve(m.schur).trace() + 1.0;
  const Eigen::MatrixXd shifted = m.schur + (tau / cmc) * mc * mc.transpose();
  // Shift by -1e-10 tau so the factorization stays regular when the pairing has a kernel.
  Eigen::LLT<Eigen::MatrixXd> llt(shifted + 1e-10 * tau * m.mass);
  if (llt.info() != Eigen::Success) throw SolverError("inf-sup Schur complement factorization failed");

  // Block inverse iteration with Rayleigh-Ritz: convergence depends on the gap to the
  // (block+1)-th eigenvalue, which keeps nearly repeated smallest eigenvalues cheap.
  const Eigen::Index n = m.schur.rows();
  const Eigen::Index block = std::min<Eigen::Index>(n, 8);
  Eigen::MatrixXd x(n, block);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < block; ++j) x(i, j) = std::sin(1.0 + i * (j + 1.3) + 0.7 * j);
  InfSupResult r;
  double lambda = 0.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    x = llt.solve(m.mass * x);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(x);
    x = qr.householderQ() * Eigen::MatrixXd::Identity(n, block);
    const Eigen::MatrixXd ks = x.transpose() * shifted * x;
    const Eigen::MatrixXd km = x.transpose() * m.mass * x;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ritz(0.5 * (ks + ks.transpose()), 0.5 * (km + km.transpose()));
    if (ritz.info() != Eigen::Success) throw SolverError("Rayleigh-Ritz step failed in the inf-sup estimate");
    x = x * ritz.eigenvectors();
    const double next = ritz.eigenvalues()(0);
    r.iterations = it;
    if (std::abs(next) < 1e-14 * tau || (it > 1 && std::abs(next - lambda) <= options.tolerance * std::abs(next))) {
      r.eigenvalue = std::abs(next) < 1e-14 * tau ? 0.0 : std::max(0.0, next);
      r.beta = std::sqrt(r.eigenvalue);
      return r;
    }
    lambda = next;
  }
  throw SolverError("inf-sup inverse iteration did not converge in " + std::to_string(options.max_iterations) +
                    " iterations (last eigenvalue " + std::to_string(lambda) + ")");
}

}  // namespace dfvem
