#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <span>
#include <vector>

#include "cemwave/grid.hpp"
#include "cemwave/media.hpp"
#include "cemwave/parallel.hpp"

namespace cemwave {

/// Symmetric sparse matrix over the local numbering of some region.
using SparseOperator = Eigen::SparseMatrix<double>;

/// How the weight kappa-tilde of the auxiliary inner product s is built.
enum class KappaTilde {
  h_scaled,            ///< kappa * H^-2
  partition_of_unity,  ///< kappa * sum_i |grad chi_i|^2, chi_i bilinear coarse hats
};

/// Q1 element matrices on a square cell, integrated with 2x2 Gauss points.
/// Local node order: (0,0), (1,0), (1,1), (0,1).
const Eigen::Matrix4d& q1_stiffness_unit();
Eigen::Matrix4d q1_mass(double h);

/// Per-cell values of kappa-tilde.
std::vector<double> kappa_tilde(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                                KappaTilde kind);

/// a(u, v) = int kappa grad u . grad v restricted to `region`'s cells and nodes.
SparseOperator assemble_stiffness(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                                  const LocalRegion& region, Exec exec = Exec::serial);

/// int w u v over the region with piecewise-constant weight w (one entry per
/// fine cell of the whole mesh). An empty span means w = 1.
SparseOperator assemble_mass(const TwoLevelMesh& mesh, std::span<const double> cell_weight,
                             const LocalRegion& region, Exec exec = Exec::serial);

inline SparseOperator assemble_mass(const TwoLevelMesh& mesh, const LocalRegion& region,
                                    Exec exec = Exec::serial) {
  return assemble_mass(mesh, {}, region, exec);
}

/// Temporal factor ((2 - 2/f0) / (4 h^2)) exp(-pi^2 f0^2 (t - 2/f0)^2).
double source_time_factor(double t, double f0, double h);

/// int f_x phi_j over interior dofs, f_x the indicator of `footprint`.
Eigen::VectorXd source_load(const TwoLevelMesh& mesh, const CellBox& footprint);

/// Load vector of f(t, .) for the source of the given frequency.
Eigen::VectorXd assemble_source(const TwoLevelMesh& mesh, const CellBox& footprint, double t,
                                double f0);

/// Integrals of each basis function of `region` over a set of fine cells:
/// row vector r with r . v = int_{cells} v.
Eigen::RowVectorXd cell_set_integral(const TwoLevelMesh& mesh, const LocalRegion& region,
                                     const std::vector<Index>& cells);

}  // namespace cemwave
