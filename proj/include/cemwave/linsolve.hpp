#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>
#include <string>
#include <vector>

#include "cemwave/assembly.hpp"

namespace cemwave {

/// Generalized eigenpairs, values ascending, vectors B-orthonormal columns.
struct EigenPairs {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

/// Sparse Cholesky factorization of an SPD operator, reusable across
/// right-hand sides. Every solve is checked for ||Ax - b|| <= 1e-10 ||b||
/// (with one round of iterative refinement), or, for badly conditioned
/// operators, for a normwise backward error at the level of machine precision.
class SpdSolver {
 public:
  SpdSolver() = default;
  explicit SpdSolver(const SparseOperator& a);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;
  Index size() const { return a_.rows(); }

 private:
  SparseOperator a_;
  std::shared_ptr<Eigen::SimplicialLLT<SparseOperator>> llt_;
  double norm_inf_ = 0.0;
};

Eigen::VectorXd solve_spd(const SparseOperator& a, const Eigen::VectorXd& b);

struct SaddleSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
};

/// Minimizes 1/2 x'Ax - b'x subject to Cx = c through the KKT system
///   A x + C' mu = b,  C x = c,
/// with A SPD and C dense (rows = constraints). Factors once; solve() can be
/// called for any number of right-hand sides. A rank-deficient C raises a
/// SolverError naming the constraint row that carries the null direction.
class SaddleSystem {
 public:
  SaddleSystem(const SparseOperator& a, Eigen::MatrixXd c,
               std::vector<std::string> row_labels = {});

  SaddleSolution solve(const Eigen::VectorXd& b, const Eigen::VectorXd& c) const;
  /// Solves with b = 0 for each column of `targets` (one constraint vector per column).
  Eigen::MatrixXd solve_homogeneous(const Eigen::MatrixXd& targets) const;

  const Eigen::MatrixXd& constraints() const { return c_; }

 private:
  SpdSolver a_;
  Eigen::MatrixXd c_;
  Eigen::MatrixXd a_inv_ct_;
  Eigen::LLT<Eigen::MatrixXd> schur_;
};

SaddleSolution solve_saddle(const SparseOperator& a, const Eigen::MatrixXd& c,
                            const Eigen::VectorXd& b, const Eigen::VectorXd& rhs);

/// Orthonormal basis of {x : Cx = 0}.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& c);

/// k smallest eigenpairs of A v = lambda B v (dense; B SPD).
EigenPairs smallest_eigenpairs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Index k);
EigenPairs smallest_eigenpairs(const SparseOperator& a, const SparseOperator& b, Index k);

/// Same pencil restricted to {v : Cv = 0}; vectors are returned in the
/// original coordinates and stay B-orthonormal.
EigenPairs constrained_smallest_eigenpairs(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                           const Eigen::MatrixXd& c, Index k);

/// All eigenvalues of the dense pencil, ascending.
Eigen::VectorXd generalized_eigenvalues(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Largest eigenvalue of A v = lambda B v via Lanczos in the B inner product
/// (full reorthogonalization). Deterministic start vector from `seed`.
/// Stops once the Ritz value's error estimate min(r, r^2 / gap) drops below
/// rel_tol. When max_iter runs out first (tightly clustered top of the
/// spectrum) it returns the Ritz value plus its residual bound r, which errs
/// on the large side.
double largest_eigenvalue(const SparseOperator& a, const SparseOperator& b,
                          double rel_tol = 1e-10, Index max_iter = 400,
                          unsigned long long seed = 12345);

}  // namespace cemwave
