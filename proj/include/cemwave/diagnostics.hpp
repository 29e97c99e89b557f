#pragma once

#include <filesystem>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/integrators.hpp"

namespace cemwave {

struct ErrorSeries {
  std::vector<double> times;
  std::vector<double> l2;      // |u - u_ref|_M / |u_ref|_M
  std::vector<double> energy;  // |u - u_ref|_A / |u_ref|_A

  std::size_t size() const { return times.size(); }
};

/// Fine-grid values of coarse coefficient vectors: basis * c for every state.
Trajectory prolongate(const SparseOperator& basis, const Trajectory& coarse);

/// Relative errors per snapshot. Both trajectories must list the same times
/// (to 1e-9 relative). Where the reference norm vanishes the absolute norm
/// of the difference is reported instead.
ErrorSeries compare(const Trajectory& solution, const Trajectory& reference,
                    const SparseOperator& mass, const SparseOperator& stiffness);

/// Entries with t0 <= t <= t1 (1e-12 slack on both ends).
ErrorSeries window(const ErrorSeries& series, double t0, double t1);

/// max_k |E_k - E_0| / |E_0| (0 for traces shorter than two entries).
double relative_drift(const EnergyTrace& trace);

/// Nodal values on the (n+1) x (n+1) fine node grid, boundary zeros included;
/// row iy, column ix.
Eigen::MatrixXd nodal_grid(const TwoLevelMesh& mesh, const Eigen::VectorXd& dofs);

/// CSV writers, 17 significant digits. Header lines:
///   errors:   time,l2_relative,energy_relative
///   energy:   step,energy          (step n holds E^{n+1/2})
///   snapshot: no header, one line per node row iy = 0..n
void export_csv(const ErrorSeries& series, const std::filesystem::path& path);
void export_csv(const EnergyTrace& trace, const std::filesystem::path& path);
void export_csv(const Eigen::MatrixXd& grid, const std::filesystem::path& path);

/// Plain PGM (P2) of a nodal grid, linear gray scale from min (0) to max
/// (255), top row at y = 1.
void write_pgm(const Eigen::MatrixXd& grid, const std::filesystem::path& path);

}  // namespace cemwave
