#pragma once

#include <Eigen/Dense>
#include <random>

#include "cemwave/assembly.hpp"
#include "cemwave/media.hpp"

namespace testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  return random_matrix(rng, n, 1);
}

/// Well-conditioned random SPD matrix.
inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n, double shift = 1.0) {
  const Eigen::MatrixXd g = random_matrix(rng, n, n);
  return g * g.transpose() + shift * Eigen::MatrixXd::Identity(n, n);
}

inline cemwave::SparseOperator sparse(const Eigen::MatrixXd& m) { return m.sparseView(); }

/// Channel medium: one horizontal and one vertical strip of value `contrast`
/// on a unit background.
inline cemwave::CoefficientField channel_medium(cemwave::Index n, double contrast) {
  cemwave::GeometrySpec g;
  g.contrast = contrast;
  cemwave::Feature a;
  a.kind = cemwave::Feature::Kind::horizontal_strip;
  a.y0 = 0.40;
  a.y1 = 0.47;
  cemwave::Feature b;
  b.kind = cemwave::Feature::Kind::vertical_strip;
  b.x0 = 0.65;
  b.x1 = 0.72;
  g.features = {a, b};
  return cemwave::synth_channels(g, n);
}

inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double s = std::max(a.norm(), b.norm());
  return s > 0 ? (a - b).norm() / s : 0.0;
}

}  // namespace testing
