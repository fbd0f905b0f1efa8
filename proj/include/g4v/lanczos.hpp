#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <random>
#include <stdexcept>

namespace g4v::lanczos {

struct Options {
  int n_eigen = 2;        // lowest eigenpairs wanted
  int block = 2;          // block size; >=2 resolves exact degeneracies
  int max_basis = 600;    // cap on Krylov basis size
  double tol = 1e-11;     // residual tolerance relative to spectral scale
  unsigned seed = 0x9e3779b9u;
};

struct Result {
  Eigen::VectorXd eigenvalues;   // ascending, size n_eigen
  Eigen::MatrixXd eigenvectors;  // columns match eigenvalues
  bool converged = false;
  double max_residual = 0.0;
  int basis_size = 0;
};

/// Lowest eigenpairs of a sparse real symmetric matrix by block Lanczos with
/// full reorthogonalization. Sizes here are modest (<= ~1e4), so keeping the
/// whole basis and reorthogonalizing every step is affordable and removes the
/// classical ghost-eigenvalue failure mode.
inline Result lowest_eigenpairs(const Eigen::SparseMatrix<double>& H, Options opt = {}) {
  const int n = static_cast<int>(H.rows());
  if (H.cols() != n) throw std::invalid_argument("lanczos: matrix not square");
  if (opt.n_eigen < 1 || opt.n_eigen > n) throw std::invalid_argument("lanczos: bad n_eigen");

  const int b = std::max(1, std::min(opt.block, n));
  const int m_max = std::min(opt.max_basis, n);

  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd basis(n, m_max);  // orthonormal Lanczos vectors, filled left to right
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m_max, m_max);

  auto fill_random = [&](Eigen::Ref<Eigen::MatrixXd> block_cols) {
    for (int j = 0; j < block_cols.cols(); ++j)
      for (int i = 0; i < n; ++i) block_cols(i, j) = gauss(rng);
  };

  // orthonormalize `W` against basis[:, 0:m) and itself; returns accepted rank
  auto orthonormalize = [&](Eigen::MatrixXd& W, int m) {
    for (int pass = 0; pass < 2; ++pass) {
      if (m > 0) W -= basis.leftCols(m) * (basis.leftCols(m).transpose() * W);
    }
    int rank = 0;
    for (int j = 0; j < W.cols(); ++j) {
      for (int r = 0; r < rank; ++r) W.col(j) -= W.col(r).dot(W.col(j)) * W.col(r);
      double nrm = W.col(j).norm();
      if (nrm < 1e-8) {
        // deflated direction: replace with fresh random vector
        Eigen::MatrixXd fresh(n, 1);
        fill_random(fresh);
        if (m > 0) fresh -= basis.leftCols(m) * (basis.leftCols(m).transpose() * fresh);
        for (int r = 0; r < rank; ++r) fresh.col(0) -= W.col(r).dot(fresh.col(0)) * W.col(r);
        W.col(j) = fresh.col(0);
        nrm = W.col(j).norm();
        if (nrm < 1e-12) continue;  // space exhausted
      }
      W.col(j) /= nrm;
      if (rank != j) W.col(rank) = W.col(j);
      ++rank;
    }
    return rank;
  };

  Eigen::MatrixXd V(n, b);
  fill_random(V);
  int rank = orthonormalize(V, 0);
  V.conservativeResize(n, rank);

  int m = 0;
  Result out;
  while (m < m_max && V.cols() > 0) {
    const int bj = static_cast<int>(V.cols());
    if (m + bj > m_max) break;
    basis.middleCols(m, bj) = V;

    Eigen::MatrixXd W = H * V;
    // T block column: projections on existing basis (block tridiagonal in exact
    // arithmetic; we store the computed projections as-is)
    Eigen::MatrixXd proj = basis.leftCols(m + bj).transpose() * W;
    T.block(0, m, m + bj, bj) = proj;
    T.block(m, 0, bj, m + bj) = proj.transpose();
    W -= basis.leftCols(m + bj) * proj;
    m += bj;

    int next_rank = orthonormalize(W, m);
    V = W.leftCols(next_rank);

    const bool basis_full = (m >= m_max) || next_rank == 0 || m >= n;
    if (m >= std::max(2 * opt.n_eigen, b) && (basis_full || (m / bj) % 4 == 0)) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
      const int k = std::min(opt.n_eigen, m);
      Eigen::MatrixXd ritz = basis.leftCols(m) * es.eigenvectors().leftCols(k);
      Eigen::VectorXd vals = es.eigenvalues().head(k);
      double scale = std::max(es.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        double res = (H * ritz.col(i) - vals(i) * ritz.col(i)).norm();
        worst = std::max(worst, res);
      }
      if ((worst <= opt.tol * scale && k == opt.n_eigen) || basis_full) {
        out.eigenvalues = vals;
        out.eigenvectors = ritz;
        out.max_residual = worst;
        out.converged = worst <= opt.tol * scale && k == opt.n_eigen;
        out.basis_size = m;
        if (out.converged || basis_full) return out;
      }
    }
    if (m >= n) break;
  }
  if (out.eigenvalues.size() == 0)
    throw std::runtime_error("lanczos: failed to build Krylov basis");
  return out;
}

/// Shift-invert variant: Lanczos on (H - sigma I)^{-1} with sigma below the
/// spectrum (Gershgorin bound), factorized once by sparse LDLT. Interior gaps
/// get strongly amplified, so deep vibronic problems converge in a few dozen
/// iterations where the direct iteration would stagnate.
inline Result lowest_eigenpairs_shift_invert(const Eigen::SparseMatrix<double>& H,
                                             Options opt = {}) {
  const int n = static_cast<int>(H.rows());
  if (H.cols() != n) throw std::invalid_argument("lanczos: matrix not square");
  if (opt.n_eigen < 1 || opt.n_eigen > n) throw std::invalid_argument("lanczos: bad n_eigen");

  // Gershgorin lower bound keeps H - sigma I positive definite
  Eigen::VectorXd diag = H.diagonal();
  Eigen::VectorXd radius = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < H.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(H, k); it; ++it)
      if (it.row() != it.col()) radius(it.row()) += std::abs(it.value());
  const double lower = (diag - radius).minCoeff();
  const double upper = (diag + radius).maxCoeff();
  const double sigma = lower - std::max(1.0, 1e-3 * (upper - lower));

  Eigen::SparseMatrix<double> shifted = H;
  for (int k = 0; k < n; ++k) shifted.coeffRef(k, k) -= sigma;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(shifted);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("lanczos: LDLT factorization failed");

  const int b = std::max(1, std::min(opt.block, n));
  const int m_max = std::min(opt.max_basis, n);
  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd basis(n, m_max);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m_max, m_max);

  auto fill_random = [&](Eigen::Ref<Eigen::MatrixXd> cols) {
    for (int j = 0; j < cols.cols(); ++j)
      for (int i = 0; i < n; ++i) cols(i, j) = gauss(rng);
  };
  auto orthonormalize = [&](Eigen::MatrixXd& W, int m) {
    for (int pass = 0; pass < 2; ++pass)
      if (m > 0) W -= basis.leftCols(m) * (basis.leftCols(m).transpose() * W);
    int rank = 0;
    for (int j = 0; j < W.cols(); ++j) {
      for (int r = 0; r < rank; ++r) W.col(j) -= W.col(r).dot(W.col(j)) * W.col(r);
      double nrm = W.col(j).norm();
      if (nrm < 1e-8) {
        Eigen::MatrixXd fresh(n, 1);
        fill_random(fresh);
        if (m > 0) fresh -= basis.leftCols(m) * (basis.leftCols(m).transpose() * fresh);
        for (int r = 0; r < rank; ++r) fresh.col(0) -= W.col(r).dot(fresh.col(0)) * W.col(r);
        W.col(j) = fresh.col(0);
        nrm = W.col(j).norm();
        if (nrm < 1e-12) continue;
      }
      W.col(j) /= nrm;
      if (rank != j) W.col(rank) = W.col(j);
      ++rank;
    }
    return rank;
  };

  Eigen::MatrixXd V(n, b);
  fill_random(V);
  V.conservativeResize(n, orthonormalize(V, 0));

  int m = 0;
  Result out;
  const double h_scale = std::max(std::abs(lower), std::abs(upper));
  while (m < m_max && V.cols() > 0) {
    const int bj = static_cast<int>(V.cols());
    if (m + bj > m_max) break;
    basis.middleCols(m, bj) = V;

    Eigen::MatrixXd W = solver.solve(V);
    Eigen::MatrixXd proj = basis.leftCols(m + bj).transpose() * W;
    T.block(0, m, m + bj, bj) = proj;
    T.block(m, 0, bj, m + bj) = proj.transpose();
    W -= basis.leftCols(m + bj) * proj;
    m += bj;
    V = W.leftCols(orthonormalize(W, m));

    const bool basis_full = (m >= m_max) || V.cols() == 0 || m >= n;
    if (m >= std::max(2 * opt.n_eigen, b) && (basis_full || (m / bj) % 2 == 0)) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T.topLeftCorner(m, m));
      const int k = std::min(opt.n_eigen, m);
      // largest of the transformed operator = lowest of H
      Eigen::MatrixXd ritz = basis.leftCols(m) * es.eigenvectors().rightCols(k).rowwise().reverse();
      Eigen::VectorXd vals(k);
      for (int i = 0; i < k; ++i) vals(i) = sigma + 1.0 / es.eigenvalues()(m - 1 - i);
      // ascending order of H eigenvalues
      double worst = 0.0;
      for (int i = 0; i < k; ++i)
        worst = std::max(worst, (H * ritz.col(i) - vals(i) * ritz.col(i)).norm());
      if ((worst <= opt.tol * h_scale && k == opt.n_eigen) || basis_full) {
        out.eigenvalues = vals;
        out.eigenvectors = ritz;
        out.max_residual = worst;
        out.converged = worst <= opt.tol * h_scale && k == opt.n_eigen;
        out.basis_size = m;
        if (out.converged || basis_full) return out;
      }
    }
    if (m >= n) break;
  }
  if (out.eigenvalues.size() == 0)
    throw std::runtime_error("lanczos: failed to build Krylov basis");
  return out;
}

}  // namespace g4v::lanczos
