#include "cemwave/linsolve.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "cemwave/error.hpp"

namespace cemwave {

namespace {

double sparse_norm_inf(const SparseOperator& a) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(a.rows());
  for (Index k = 0; k < a.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(a, k); it; ++it) row_sums(it.row()) += std::abs(it.value());
  return a.rows() ? row_sums.maxCoeff() : 0.0;
}

}  // namespace

SpdSolver::SpdSolver(const SparseOperator& a)
    : a_(a), llt_(std::make_shared<Eigen::SimplicialLLT<SparseOperator>>()) {
  if (a.rows() != a.cols()) throw ConfigError("solve_spd: matrix is not square");
  llt_->compute(a_);
  if (llt_->info() != Eigen::Success)
    throw SolverError("solve_spd: Cholesky factorization failed (matrix not SPD?)");
  norm_inf_ = sparse_norm_inf(a_);
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& b) const {
  if (b.size() != a_.rows()) throw ConfigError("solve_spd: right-hand side has wrong size");
  if (a_.rows() == 0) return b;
  Eigen::VectorXd x = llt_->solve(b);
  Eigen::VectorXd r = b - a_ * x;
  const double bnorm = b.norm();
  if (r.norm() > 1e-10 * bnorm) {
    x += llt_->solve(r);
    r = b - a_ * x;
  }
  const double res = r.norm();
  const double backward = r.lpNorm<Eigen::Infinity>() /
                          (norm_inf_ * x.lpNorm<Eigen::Infinity>() + b.lpNorm<Eigen::Infinity>());
  if (!(res <= 1e-10 * bnorm) &&
      !(backward <= 1e3 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream msg;
    msg << "solve_spd: no convergence, residual " << res << " for |b| = " << bnorm;
    throw SolverError(msg.str());
  }
  return x;
}

Eigen::MatrixXd SpdSolver::solve(const Eigen::MatrixXd& b) const {
  Eigen::MatrixXd x(b.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) x.col(j) = solve(Eigen::VectorXd(b.col(j)));
  return x;
}

Eigen::VectorXd solve_spd(const SparseOperator& a, const Eigen::VectorXd& b) {
  return SpdSolver(a).solve(b);
}

SaddleSystem::SaddleSystem(const SparseOperator& a, Eigen::MatrixXd c,
                           std::vector<std::string> row_labels)
    : a_(a), c_(std::move(c)) {
  if (c_.cols() != a.rows()) throw ConfigError("solve_saddle: constraint width mismatch");
  if (c_.rows() == 0) return;
  a_inv_ct_ = a_.solve(Eigen::MatrixXd(c_.transpose()));
  Eigen::MatrixXd schur = c_ * a_inv_ct_;
  schur = 0.5 * (schur + schur.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(schur);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0) || eig.eigenvalues().minCoeff() <= 1e-12 * top) {
    Index row = 0;
    eig.eigenvectors().col(0).cwiseAbs().maxCoeff(&row);
    std::ostringstream msg;
    msg << "solve_saddle: constraints are rank deficient; null direction concentrated on row "
        << row;
    if (static_cast<std::size_t>(row) < row_labels.size()) msg << " (" << row_labels[row] << ")";
    throw SolverError(msg.str());
  }
  schur_.compute(schur);
}

SaddleSolution SaddleSystem::solve(const Eigen::VectorXd& b, const Eigen::VectorXd& c) const {
  if (c.size() != c_.rows()) throw ConfigError("solve_saddle: constraint values have wrong size");
  SaddleSolution out;
  const Eigen::VectorXd a_inv_b = a_.solve(b);
  if (c_.rows() == 0) {
    out.x = a_inv_b;
    out.multipliers.resize(0);
    return out;
  }
  // C A^-1 (b - C' mu) = c  =>  S mu = C A^-1 b - c
  out.multipliers = schur_.solve(c_ * a_inv_b - c);
  out.x = a_inv_b - a_inv_ct_ * out.multipliers;
  return out;
}

Eigen::MatrixXd SaddleSystem::solve_homogeneous(const Eigen::MatrixXd& targets) const {
  if (targets.rows() != c_.rows()) throw ConfigError("solve_saddle: target rows mismatch");
  // b = 0: mu = -S^-1 c, x = -A^-1 C' mu
  return a_inv_ct_ * schur_.solve(targets);
}

SaddleSolution solve_saddle(const SparseOperator& a, const Eigen::MatrixXd& c,
                            const Eigen::VectorXd& b, const Eigen::VectorXd& rhs) {
  return SaddleSystem(a, c).solve(b, rhs);
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& c) {
  const Index n = c.cols();
  if (c.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(c.transpose());
  qr.setThreshold(1e-12);
  const Index rank = qr.rank();
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - rank);
}

EigenPairs smallest_eigenpairs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Index k) {
  const Index n = a.rows();
  if (k < 0 || k > n)
    throw ConfigError("smallest_eigenpairs: requested " + std::to_string(k) +
                      " pairs from a space of dimension " + std::to_string(n));
  EigenPairs out;
  if (k == 0) {
    out.values.resize(0);
    out.vectors.resize(n, 0);
    return out;
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, b, Eigen::ComputeEigenvectors |
                                                                          Eigen::Ax_lBx);
  if (eig.info() != Eigen::Success) throw SolverError("smallest_eigenpairs: eigensolver failed");
  out.values = eig.eigenvalues().head(k);
  out.vectors = eig.eigenvectors().leftCols(k);
  // Backward error relative to the operator norms; a plain |Av| scale fails
  // for the zero eigenvalue of a Neumann problem.
  const double a_norm = a.norm(), b_norm = b.norm();
  for (Index j = 0; j < k; ++j) {
    const Eigen::VectorXd v = out.vectors.col(j);
    const Eigen::VectorXd av = a * v;
    const Eigen::VectorXd bv = b * v;
    const double scale = (a_norm + std::abs(out.values(j)) * b_norm) * v.norm();
    if ((av - out.values(j) * bv).norm() > 1e-8 * std::max(scale, 1e-300))
      throw SolverError("smallest_eigenpairs: residual above tolerance for pair " +
                        std::to_string(j));
  }
  return out;
}

EigenPairs smallest_eigenpairs(const SparseOperator& a, const SparseOperator& b, Index k) {
  return smallest_eigenpairs(Eigen::MatrixXd(a), Eigen::MatrixXd(b), k);
}

EigenPairs constrained_smallest_eigenpairs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                           const Eigen::MatrixXd& c, Index k) {
  const Eigen::MatrixXd z = null_space(c);
  if (k > z.cols())
    throw ConfigError("constrained eigenproblem: requested " + std::to_string(k) +
                      " pairs but the constrained space has dimension " +
                      std::to_string(z.cols()));
  const Eigen::MatrixXd az = z.transpose() * a * z;
  const Eigen::MatrixXd bz = z.transpose() * b * z;
  EigenPairs reduced = smallest_eigenpairs(Eigen::MatrixXd(0.5 * (az + az.transpose())),
                                           Eigen::MatrixXd(0.5 * (bz + bz.transpose())), k);
  reduced.vectors = z * reduced.vectors;
  return reduced;
}

Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() == 0) return Eigen::VectorXd();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, b, Eigen::EigenvaluesOnly |
                                                                          Eigen::Ax_lBx);
  if (eig.info() != Eigen::Success) throw SolverError("generalized eigensolver failed");
  return eig.eigenvalues();
}

double largest_eigenvalue(const SparseOperator& a, const SparseOperator& b, double rel_tol,
                          Index max_iter, unsigned long long seed) {
  const Index n = a.rows();
  if (n == 0) return 0.0;
  SpdSolver b_solver(b);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::VectorXd r(n);
  for (Index i = 0; i < n; ++i) r(i) = dist(rng);

  const Index m_max = std::min(max_iter, n);
  Eigen::MatrixXd q(n, m_max);
  Eigen::MatrixXd bq(n, m_max);
  std::vector<double> alpha, beta;
  auto b_norm = [&](const Eigen::VectorXd& v) { return std::sqrt(v.dot(b * v)); };

  q.col(0) = r / b_norm(r);
  bq.col(0) = b * q.col(0);
  double theta = 0.0, bound = 0.0;
  for (Index j = 0; j < m_max; ++j) {
    const Eigen::VectorXd aq = a * q.col(j);
    alpha.push_back(q.col(j).dot(aq));
    Eigen::VectorXd w = b_solver.solve(aq);
    for (int pass = 0; pass < 2; ++pass)
      for (Index i = 0; i <= j; ++i) w -= bq.col(i).dot(w) * q.col(i);
    const double bj = b_norm(w);

    const Index m = j + 1;
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (Index i = 0; i < m; ++i) {
      t(i, i) = alpha[static_cast<std::size_t>(i)];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(t);
    theta = eig.eigenvalues()(m - 1);
    bound = bj * std::abs(eig.eigenvectors()(m - 1, m - 1));
    const double gap = m > 1 ? theta - eig.eigenvalues()(m - 2) : 0.0;
    const double err = gap > 0.0 ? std::min(bound, bound * bound / gap) : bound;
    if (err <= rel_tol * std::abs(theta) || bj <= 1e-14 * std::abs(theta) || m == n) return theta;
    if (j + 1 < m_max) {
      beta.push_back(bj);
      q.col(j + 1) = w / bj;
      bq.col(j + 1) = b * q.col(j + 1);
    }
  }
  if (!std::isfinite(theta + bound))
    throw SolverError("largest_eigenvalue: Lanczos produced a non-finite estimate");
  return theta + bound;
}

}  // namespace cemwave
