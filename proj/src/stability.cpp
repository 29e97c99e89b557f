#include "cemwave/stability.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "cemwave/error.hpp"
#include "cemwave/linsolve.hpp"

namespace cemwave {

namespace {

constexpr Index kDenseLimit = 1500;

double largest_singular_cosine(const Eigen::MatrixXd& x11, const Eigen::MatrixXd& x12,
                               const Eigen::MatrixXd& x22, const char* what) {
  if (x11.rows() == 0 || x22.rows() == 0) return 0.0;
  Eigen::LLT<Eigen::MatrixXd> l1(x11), l2(x22);
  if (l1.info() != Eigen::Success || l2.info() != Eigen::Success)
    throw SolverError(std::string("compute_gammas: diagonal ") + what + " block is not SPD");
  // L1^{-1} X12 L2^{-T}
  Eigen::MatrixXd y = l1.matrixL().solve(x12);
  y = l2.matrixL().solve(y.transpose()).transpose();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(y);
  return svd.singularValues()(0);
}

double bound(double numerator, double alpha) {
  if (numerator <= 0.0) return 0.0;
  if (alpha <= 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(numerator) / alpha;
}

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? nlohmann::json("inf") : nlohmann::json(nullptr);
}

}  // namespace

double compute_alpha(const SparseOperator& a, const SparseOperator& m, AlphaMethod method) {
  if (a.rows() != m.rows() || a.rows() != a.cols())
    throw ConfigError("compute_alpha: operator sizes differ");
  if (a.rows() == 0) return 0.0;
  if (method == AlphaMethod::automatic)
    method = a.rows() <= kDenseLimit ? AlphaMethod::dense : AlphaMethod::lanczos;
  double lambda = 0.0;
  if (method == AlphaMethod::dense) {
    lambda = generalized_eigenvalues(Eigen::MatrixXd(a), Eigen::MatrixXd(m)).maxCoeff();
  } else {
    lambda = largest_eigenvalue(a, m);
  }
  return std::sqrt(std::max(lambda, 0.0));
}

Gammas compute_gammas(const BlockSystem& s) {
  Gammas g;
  if (s.dim1 == 0 || s.dim2() == 0) return g;
  g.gamma = largest_singular_cosine(Eigen::MatrixXd(s.m11()), Eigen::MatrixXd(s.m12()),
                                    Eigen::MatrixXd(s.m22()), "mass");
  g.gamma_a = largest_singular_cosine(Eigen::MatrixXd(s.a11()), Eigen::MatrixXd(s.a12()),
                                      Eigen::MatrixXd(s.a22()), "stiffness");
  return g;
}

std::string to_string(CertifyMode mode) {
  switch (mode) {
    case CertifyMode::cfl_full: return "cfl_full";
    case CertifyMode::ortho: return "ortho";
    case CertifyMode::nonortho: return "nonortho";
  }
  return "unknown";
}

CertifyMode certify_mode_from_string(const std::string& name) {
  for (CertifyMode m : {CertifyMode::cfl_full, CertifyMode::ortho, CertifyMode::nonortho})
    if (to_string(m) == name) return m;
  throw ConfigError("unknown certification mode '" + name + "'");
}

double StabilityReport::tau_max() const {
  switch (mode) {
    case CertifyMode::cfl_full: return tau_max_explicit;
    case CertifyMode::ortho: return tau_max_split_ortho;
    case CertifyMode::nonortho: return tau_max_split_nonortho;
  }
  return 0.0;
}

StabilityReport certify(double tau, const StabilityInputs& in, CertifyMode mode) {
  if (!(tau > 0.0)) throw ConfigError("certify: tau must be positive");
  if (in.alpha < 0.0 || in.alpha_full < 0.0 || in.gamma < 0.0 || in.gamma_a < 0.0)
    throw ConfigError("certify: stability constants must be nonnegative");
  StabilityReport r;
  r.inputs = in;
  r.tau = tau;
  r.mode = mode;
  const double g = std::min(in.gamma, 1.0);
  r.tau_max_explicit = bound(4.0, in.alpha_full);
  r.tau_max_split_ortho = bound(2.0, in.alpha);
  r.tau_max_split_nonortho = bound(2.0 * (1.0 - g * g), in.alpha);
  r.tau_max_split_nonortho_linear = bound(2.0 * (1.0 - g), in.alpha);
  r.pass = tau <= r.tau_max();
  return r;
}

StabilityInputs stability_inputs(const BlockSystem& s, AlphaMethod method) {
  StabilityInputs in;
  in.alpha = compute_alpha(s.a22(), s.m22(), method);
  in.alpha_full = compute_alpha(s.stiffness, s.mass, method);
  const Gammas g = compute_gammas(s);
  in.gamma = g.gamma;
  in.gamma_a = g.gamma_a;
  return in;
}

nlohmann::json to_json(const StabilityReport& r) {
  return {
      {"alpha", number(r.inputs.alpha)},
      {"alpha_full", number(r.inputs.alpha_full)},
      {"gamma", number(r.inputs.gamma)},
      {"gamma_a", number(r.inputs.gamma_a)},
      {"tau", number(r.tau)},
      {"mode", to_string(r.mode)},
      {"tau_max_explicit", number(r.tau_max_explicit)},
      {"tau_max_split_ortho", number(r.tau_max_split_ortho)},
      {"tau_max_split_nonortho", number(r.tau_max_split_nonortho)},
      {"tau_max_split_nonortho_linear", number(r.tau_max_split_nonortho_linear)},
      {"pass", r.pass},
  };
}

void write_report(const StabilityReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(report).dump(2) << '\n';
}

}  // namespace cemwave
