#include <doctest.h>

#include <random>

#include "cemwave/error.hpp"
#include "cemwave/linsolve.hpp"
#include "helpers.hpp"

using namespace cemwave;
using testing::random_matrix;
using testing::random_spd;
using testing::random_vector;
using testing::rel_diff;
using testing::sparse;

namespace {

// Generalized eigenvalues through an explicit Cholesky reduction.
Eigen::VectorXd reduced_eigenvalues(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd l = b.llt().matrixL();
  const Eigen::MatrixXd li = l.inverse();
  const Eigen::MatrixXd c = li * a * li.transpose();
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (c + c.transpose())).eigenvalues();
}

Eigen::MatrixXd svd_null_space(const Eigen::MatrixXd& c) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(c, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  Index rank = 0;
  for (Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-10 * s(0);
  return svd.matrixV().rightCols(c.cols() - rank);
}

}  // namespace

TEST_CASE("SPD solves match dense Cholesky") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 3 + trial % 30;
    const Eigen::MatrixXd a = random_spd(rng, n);
    const Eigen::VectorXd b = random_vector(rng, n);
    const Eigen::VectorXd x = solve_spd(sparse(a), b);
    CHECK(rel_diff(x, a.llt().solve(b)) < 1e-10);
  }
}

TEST_CASE("SPD solver rejects indefinite matrices and wrong sizes") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  a(2, 2) = -1.0;
  CHECK_THROWS_AS(SpdSolver(sparse(a)), SolverError);
  const SpdSolver s(sparse(Eigen::MatrixXd::Identity(3, 3)));
  CHECK_THROWS_AS(s.solve(Eigen::VectorXd(Eigen::VectorXd::Ones(4))), ConfigError);
}

TEST_CASE("saddle solves match the dense KKT system") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 6 + trial % 25;
    const Index m = 1 + trial % 5;
    const Eigen::MatrixXd a = random_spd(rng, n);
    const Eigen::MatrixXd c = random_matrix(rng, m, n);
    const Eigen::VectorXd b = random_vector(rng, n);
    const Eigen::VectorXd r = random_vector(rng, m);
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = a;
    kkt.topRightCorner(n, m) = c.transpose();
    kkt.bottomLeftCorner(m, n) = c;
    Eigen::VectorXd rhs(n + m);
    rhs << b, r;
    const Eigen::VectorXd ref = kkt.fullPivLu().solve(rhs);
    const SaddleSolution s = solve_saddle(sparse(a), c, b, r);
    CHECK(rel_diff(s.x, ref.head(n)) < 1e-9);
    CHECK(rel_diff(s.multipliers, ref.tail(m)) < 1e-9);
    CHECK((c * s.x - r).norm() < 1e-10 * (1 + r.norm()));

    const SaddleSystem sys(sparse(a), c);
    const Eigen::MatrixXd targets = random_matrix(rng, m, 2);
    const Eigen::MatrixXd xs = sys.solve_homogeneous(targets);
    for (Index j = 0; j < 2; ++j)
      CHECK(rel_diff(xs.col(j), sys.solve(Eigen::VectorXd::Zero(n), targets.col(j)).x) < 1e-12);
  }
}

TEST_CASE("degenerate constraints are reported with the row label") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = random_spd(rng, 8);
  Eigen::MatrixXd c = random_matrix(rng, 3, 8);
  c.row(2) = c.row(0) * 2.0;
  try {
    SaddleSystem(sparse(a), c, {"first", "second", "third"});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    const std::string what = e.what();
    CHECK((what.find("first") != std::string::npos || what.find("third") != std::string::npos));
  }
}

TEST_CASE("null space is orthonormal and annihilated by C") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 10, m = 1 + trial % 6;
    Eigen::MatrixXd c = random_matrix(rng, m, n);
    if (m > 2) c.row(m - 1) = c.row(0) - c.row(1);  // rank m - 1
    const Eigen::MatrixXd z = null_space(c);
    const Index rank = m > 2 ? m - 1 : m;
    CHECK(z.cols() == n - rank);
    CHECK((c * z).norm() < 1e-12);
    CHECK((z.transpose() * z - Eigen::MatrixXd::Identity(z.cols(), z.cols())).norm() < 1e-12);
  }
  CHECK(null_space(Eigen::MatrixXd(0, 4)).cols() == 4);
}

TEST_CASE("smallest eigenpairs match a Cholesky-reduced dense oracle") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 4 + trial % 20;
    const Eigen::MatrixXd a = random_spd(rng, n, 0.1);
    const Eigen::MatrixXd b = random_spd(rng, n, 1.0);
    const Index k = 1 + trial % 3;
    const EigenPairs p = smallest_eigenpairs(a, b, k);
    const Eigen::VectorXd ref = reduced_eigenvalues(a, b);
    CHECK(rel_diff(p.values, ref.head(k)) < 1e-9);
    CHECK((p.vectors.transpose() * b * p.vectors - Eigen::MatrixXd::Identity(k, k)).norm() < 1e-9);
  }
  CHECK_THROWS_AS(smallest_eigenpairs(Eigen::MatrixXd::Identity(2, 2),
                                      Eigen::MatrixXd::Identity(2, 2), 3),
                  ConfigError);
}

TEST_CASE("constrained eigenpairs match an SVD-based oracle") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 12, m = 1 + trial % 4;
    const Eigen::MatrixXd a = random_spd(rng, n, 0.1);
    const Eigen::MatrixXd b = random_spd(rng, n, 1.0);
    const Eigen::MatrixXd c = random_matrix(rng, m, n);
    const EigenPairs p = constrained_smallest_eigenpairs(a, b, c, 3);
    const Eigen::MatrixXd z = svd_null_space(c);
    const Eigen::VectorXd ref =
        reduced_eigenvalues(z.transpose() * a * z, z.transpose() * b * z);
    CHECK(rel_diff(p.values, ref.head(3)) < 1e-9);
    CHECK((c * p.vectors).norm() < 1e-10);
    // Galerkin condition on the constrained space.
    for (Index j = 0; j < 3; ++j)
      CHECK((z.transpose() * (a * p.vectors.col(j) - p.values(j) * b * p.vectors.col(j))).norm() <
            1e-8 * (1 + p.values(j)));
  }
}

TEST_CASE("Lanczos largest eigenvalue matches the dense pencil") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n = 60 + 20 * trial;
    // Banded SPD pencil with a wide spectrum.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n), b = Eigen::MatrixXd::Zero(n, n);
    std::uniform_real_distribution<double> d(1.0, 1e4);
    for (Index i = 0; i < n; ++i) {
      a(i, i) = d(rng);
      b(i, i) = 4.0;
      if (i + 1 < n) {
        a(i, i + 1) = a(i + 1, i) = -0.3 * std::min(a(i, i), 1.0);
        b(i, i + 1) = b(i + 1, i) = 1.0;
      }
    }
    const double ref = generalized_eigenvalues(a, b).maxCoeff();
    CHECK(largest_eigenvalue(sparse(a), sparse(b)) == doctest::Approx(ref).epsilon(1e-8));
  }
}
