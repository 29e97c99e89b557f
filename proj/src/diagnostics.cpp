#include "cemwave/diagnostics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "cemwave/error.hpp"

namespace cemwave {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write failed for " + path.string());
}

double norm_in(const SparseOperator& x, const Eigen::VectorXd& v) {
  return std::sqrt(std::max(v.dot(x * v), 0.0));
}

}  // namespace

Trajectory prolongate(const SparseOperator& basis, const Trajectory& coarse) {
  Trajectory out;
  out.times = coarse.times;
  out.states.reserve(coarse.states.size());
  for (const auto& c : coarse.states) {
    if (c.size() != basis.cols()) throw ConfigError("prolongate: coefficient vector has wrong size");
    out.states.push_back(basis * c);
  }
  return out;
}

ErrorSeries compare(const Trajectory& solution, const Trajectory& reference,
                    const SparseOperator& mass, const SparseOperator& stiffness) {
  if (solution.times.size() != reference.times.size())
    throw ConfigError("compare: " + std::to_string(solution.times.size()) + " snapshots against " +
                      std::to_string(reference.times.size()) + " reference snapshots");
  ErrorSeries s;
  for (std::size_t k = 0; k < solution.times.size(); ++k) {
    const double t = solution.times[k];
    const double tr = reference.times[k];
    if (std::abs(t - tr) > 1e-9 * std::max({std::abs(t), std::abs(tr), 1e-300}))
      throw ConfigError("compare: snapshot time " + std::to_string(t) +
                        " does not match reference time " + std::to_string(tr));
    const Eigen::VectorXd diff = solution.states[k] - reference.states[k];
    const double rm = norm_in(mass, reference.states[k]);
    const double ra = norm_in(stiffness, reference.states[k]);
    const double dm = norm_in(mass, diff);
    const double da = norm_in(stiffness, diff);
    s.times.push_back(t);
    s.l2.push_back(rm > 0.0 ? dm / rm : dm);
    s.energy.push_back(ra > 0.0 ? da / ra : da);
  }
  return s;
}

ErrorSeries window(const ErrorSeries& series, double t0, double t1) {
  ErrorSeries out;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const double t = series.times[k];
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    out.times.push_back(t);
    out.l2.push_back(series.l2[k]);
    out.energy.push_back(series.energy[k]);
  }
  return out;
}

double relative_drift(const EnergyTrace& trace) {
  if (trace.values.size() < 2) return 0.0;
  const double e0 = trace.values.front();
  double worst = 0.0;
  for (double e : trace.values) worst = std::max(worst, std::abs(e - e0));
  return e0 != 0.0 ? worst / std::abs(e0) : worst;
}

Eigen::MatrixXd nodal_grid(const TwoLevelMesh& mesh, const Eigen::VectorXd& dofs) {
  if (dofs.size() != mesh.num_dofs()) throw ConfigError("nodal_grid: vector is not a fine dof vector");
  const Index n = mesh.nx_fine();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n + 1, n + 1);
  for (Index iy = 1; iy < n; ++iy)
    for (Index ix = 1; ix < n; ++ix) g(iy, ix) = dofs(mesh.dof_of_node(ix, iy));
  return g;
}

void export_csv(const ErrorSeries& series, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "time,l2_relative,energy_relative\n";
  for (std::size_t k = 0; k < series.size(); ++k)
    out << series.times[k] << ',' << series.l2[k] << ',' << series.energy[k] << '\n';
  finish(out, path);
}

void export_csv(const EnergyTrace& trace, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  out << "step,energy\n";
  for (std::size_t k = 0; k < trace.values.size(); ++k) out << k + 1 << ',' << trace.values[k] << '\n';
  finish(out, path);
}

void export_csv(const Eigen::MatrixXd& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  for (Index r = 0; r < grid.rows(); ++r) {
    for (Index c = 0; c < grid.cols(); ++c) {
      if (c) out << ',';
      out << grid(r, c);
    }
    out << '\n';
  }
  finish(out, path);
}

void write_pgm(const Eigen::MatrixXd& grid, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  const double lo = grid.size() ? grid.minCoeff() : 0.0;
  const double hi = grid.size() ? grid.maxCoeff() : 0.0;
  const double span = hi > lo ? hi - lo : 1.0;
  out << "P2\n" << grid.cols() << ' ' << grid.rows() << "\n255\n";
  for (Index r = grid.rows() - 1; r >= 0; --r) {
    for (Index c = 0; c < grid.cols(); ++c) {
      if (c) out << ' ';
      out << static_cast<int>(std::lround(255.0 * (grid(r, c) - lo) / span));
    }
    out << '\n';
  }
  finish(out, path);
}

}  // namespace cemwave
