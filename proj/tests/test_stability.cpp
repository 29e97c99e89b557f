#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cemwave/error.hpp"
#include "cemwave/stability.hpp"
#include "helpers.hpp"

using namespace cemwave;

namespace {

double dense_alpha(const Eigen::MatrixXd& a, const Eigen::MatrixXd& m) {
  const Eigen::LLT<Eigen::MatrixXd> l(m);
  const Eigen::MatrixXd li = l.matrixL().solve(Eigen::MatrixXd::Identity(m.rows(), m.rows()));
  const Eigen::MatrixXd c = li * a * li.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (c + c.transpose()));
  return std::sqrt(eig.eigenvalues().maxCoeff());
}

// Block system from explicit column bases with Euclidean mass and stiffness K.
BlockSystem from_bases(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2,
                       const Eigen::MatrixXd& k) {
  Eigen::MatrixXd phi(b1.rows(), b1.cols() + b2.cols());
  phi << b1, b2;
  BlockSystem s;
  s.mass = testing::sparse(phi.transpose() * phi);
  s.stiffness = testing::sparse(phi.transpose() * k * phi);
  s.dim1 = b1.cols();
  return s;
}

// Cosine of the smallest principal angle between the column spans.
double principal_cosine(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2) {
  const Eigen::MatrixXd q1 = b1.householderQr().householderQ() *
                             Eigen::MatrixXd::Identity(b1.rows(), b1.cols());
  const Eigen::MatrixXd q2 = b2.householderQr().householderQ() *
                             Eigen::MatrixXd::Identity(b2.rows(), b2.cols());
  return Eigen::JacobiSVD<Eigen::MatrixXd>(q1.transpose() * q2).singularValues()(0);
}

}  // namespace

TEST_CASE("alpha matches the Cholesky-reduced eigenvalue oracle") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const Index n = 5 + k;
    const Eigen::MatrixXd m = testing::random_spd(rng, n);
    const Eigen::MatrixXd a = testing::random_spd(rng, n, 0.0);
    const double expect = dense_alpha(a, m);
    CHECK(compute_alpha(testing::sparse(a), testing::sparse(m), AlphaMethod::dense) ==
          doctest::Approx(expect).epsilon(1e-10));
    CHECK(compute_alpha(testing::sparse(a), testing::sparse(m), AlphaMethod::lanczos) ==
          doctest::Approx(expect).epsilon(1e-8));
  }
  // 1D Laplacian with lumped unit mass: lambda_max = 4 sin^2(n pi / (2(n+1))).
  const Index n = 2000;
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0);
    if (i + 1 < n) {
      t.emplace_back(i, i + 1, -1.0);
      t.emplace_back(i + 1, i, -1.0);
    }
  }
  SparseOperator a(n, n), m(n, n);
  a.setFromTriplets(t.begin(), t.end());
  m.setIdentity();
  const double s = std::sin(M_PI * n / (2.0 * (n + 1)));
  // Tightly clustered top of the spectrum: the estimate may stop short of
  // full accuracy but stays close and on the large side.
  const double est = compute_alpha(a, m);
  CHECK(est == doctest::Approx(2.0 * s).epsilon(1e-4));
  CHECK(est >= 2.0 * s * (1 - 1e-12));
  CHECK(compute_alpha(SparseOperator(0, 0), SparseOperator(0, 0)) == 0.0);
  CHECK_THROWS_AS(compute_alpha(a, SparseOperator(3, 3)), ConfigError);
}

TEST_CASE("gamma is the cosine of the principal angle between the spaces") {
  std::mt19937_64 rng(22);
  const Eigen::MatrixXd k = testing::random_spd(rng, 9);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd b1 = testing::random_matrix(rng, 9, 3);
    const Eigen::MatrixXd b2 = testing::random_matrix(rng, 9, 4);
    const Gammas g = compute_gammas(from_bases(b1, b2, k));
    CHECK(g.gamma == doctest::Approx(principal_cosine(b1, b2)).epsilon(1e-10));
    // The a-cosine is the same quantity in the K inner product.
    const Eigen::LLT<Eigen::MatrixXd> kl(k);
    const Eigen::MatrixXd lt = kl.matrixU();
    CHECK(g.gamma_a == doctest::Approx(principal_cosine(lt * b1, lt * b2)).epsilon(1e-10));
    CHECK(g.gamma < 1.0);
  }
  // Two planes in R^3: brute-force maximum over unit vectors of each plane.
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::MatrixXd b1 = testing::random_matrix(rng, 3, 2);
    const Eigen::MatrixXd b2 = testing::random_matrix(rng, 3, 1);
    const Gammas g = compute_gammas(from_bases(b1, b2, Eigen::MatrixXd::Identity(3, 3)));
    const Eigen::MatrixXd q1 = b1.householderQr().householderQ() * Eigen::MatrixXd::Identity(3, 2);
    const Eigen::Vector3d y = b2.col(0).normalized();
    double best = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double phi = M_PI * i / 20000.0;
      const Eigen::Vector3d x = std::cos(phi) * q1.col(0) + std::sin(phi) * q1.col(1);
      best = std::max(best, std::abs(x.dot(y)));
    }
    CHECK(g.gamma == doctest::Approx(best).epsilon(1e-6));
  }
}

TEST_CASE("gamma vanishes for orthogonal spaces and for an empty space") {
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Identity(5, 5).leftCols(2);
  Eigen::MatrixXd b2 = Eigen::MatrixXd::Identity(5, 5).rightCols(3);
  const Gammas g = compute_gammas(from_bases(b1, b2, Eigen::MatrixXd::Identity(5, 5)));
  CHECK(g.gamma == 0.0);
  CHECK(g.gamma_a == 0.0);
  const Gammas e = compute_gammas(from_bases(b1, Eigen::MatrixXd(5, 0), Eigen::MatrixXd::Identity(5, 5)));
  CHECK(e.gamma == 0.0);
}

TEST_CASE("certify: time step bounds") {
  StabilityInputs in;
  in.alpha = 10.0;
  in.alpha_full = 20.0;
  in.gamma = 0.6;
  const StabilityReport r = certify(0.1, in, CertifyMode::nonortho);
  CHECK(r.tau_max_explicit == doctest::Approx(0.1));
  CHECK(r.tau_max_split_ortho == doctest::Approx(std::sqrt(2.0) / 10));
  CHECK(r.tau_max_split_nonortho == doctest::Approx(std::sqrt(2.0 * 0.64) / 10));
  CHECK(r.tau_max_split_nonortho_linear == doctest::Approx(std::sqrt(0.8) / 10));
  CHECK(r.tau_max() == r.tau_max_split_nonortho);
  CHECK(r.pass);
  CHECK_FALSE(certify(0.12, in, CertifyMode::nonortho).pass);
  CHECK(certify(0.12, in, CertifyMode::ortho).pass);
  CHECK(certify(0.1, in, CertifyMode::cfl_full).pass);
  CHECK_FALSE(certify(0.1000001, in, CertifyMode::cfl_full).pass);

  in.gamma = 1.0;
  CHECK(certify(1e-9, in, CertifyMode::nonortho).tau_max_split_nonortho == 0.0);
  in.gamma = 0.0;
  in.alpha = 0.0;
  const StabilityReport inf = certify(1e3, in, CertifyMode::ortho);
  CHECK(std::isinf(inf.tau_max_split_ortho));
  CHECK(inf.pass);
  CHECK(to_json(inf)["tau_max_split_ortho"] == "inf");
  CHECK(to_json(inf)["mode"] == "ortho");

  CHECK_THROWS_AS(certify(0.0, in, CertifyMode::ortho), ConfigError);
  in.gamma = -0.1;
  CHECK_THROWS_AS(certify(0.1, in, CertifyMode::ortho), ConfigError);
  for (CertifyMode m : {CertifyMode::cfl_full, CertifyMode::ortho, CertifyMode::nonortho})
    CHECK(certify_mode_from_string(to_string(m)) == m);
  CHECK_THROWS_AS(certify_mode_from_string("loose"), ConfigError);
}

TEST_CASE("stability inputs of a block system and the report file") {
  std::mt19937_64 rng(23);
  const Eigen::MatrixXd k = testing::random_spd(rng, 8);
  const Eigen::MatrixXd b1 = testing::random_matrix(rng, 8, 3), b2 = testing::random_matrix(rng, 8, 3);
  const BlockSystem s = from_bases(b1, b2, k);
  const StabilityInputs in = stability_inputs(s);
  CHECK(in.alpha == doctest::Approx(dense_alpha(Eigen::MatrixXd(s.a22()), Eigen::MatrixXd(s.m22()))));
  CHECK(in.alpha_full == doctest::Approx(dense_alpha(Eigen::MatrixXd(s.stiffness), Eigen::MatrixXd(s.mass))));
  CHECK(in.alpha_full >= in.alpha);
  const auto path = std::filesystem::temp_directory_path() / "cemwave_stability.json";
  write_report(certify(0.01, in, CertifyMode::nonortho), path);
  std::ifstream f(path);
  const auto j = nlohmann::json::parse(f);
  CHECK(j["alpha"].get<double>() == doctest::Approx(in.alpha));
  CHECK(j.contains("pass"));
  std::filesystem::remove(path);
}
