#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/grid.hpp"
#include "cemwave/media.hpp"
#include "cemwave/parallel.hpp"

namespace cemwave {

/// Element-wise (possibly discontinuous) fine-grid field: one vector of
/// closed-node values per coarse element. This is where the auxiliary
/// functions and Pi v live.
struct BrokenField {
  std::vector<Eigen::VectorXd> pieces;
};

/// Auxiliary functions of one coarse element: the L_i lowest modes of
/// a_i(psi, v) = lambda s_i(psi, v) on all nodes of K_i (natural boundary
/// conditions), s_i-orthonormal.
struct AuxElement {
  LocalRegion region;       // closed node set of K_i
  Eigen::MatrixXd s_local;  // s_i over region
  Eigen::MatrixXd psi;      // region.size() x L_i
  Eigen::VectorXd eigenvalues;
  Index offset = 0;         // global index of psi.col(0)
};

class AuxSpace {
 public:
  AuxSpace(const TwoLevelMesh& mesh, std::vector<AuxElement> elements);

  const TwoLevelMesh& mesh() const { return mesh_; }
  Index num_elements() const { return static_cast<Index>(elements_.size()); }
  const AuxElement& element(Index e) const { return elements_[static_cast<std::size_t>(e)]; }
  Index count(Index e) const { return element(e).psi.cols(); }
  Index offset(Index e) const { return element(e).offset; }
  Index size() const { return size_; }

  /// Rows s(., psi_j^(e)) acting on the unknowns of `region` (count(e) x region.size()).
  Eigen::MatrixXd s_rows(Index e, const LocalRegion& region) const;

  /// s(v, psi_j^(i)) for every auxiliary function, global dof vector v.
  Eigen::VectorXd coefficients(const Eigen::VectorXd& v) const;

  BrokenField restrict(const Eigen::VectorXd& v) const;
  /// s-orthogonal projection Pi onto V_aux.
  BrokenField project(const BrokenField& v) const;
  BrokenField project(const Eigen::VectorXd& v) const { return project(restrict(v)); }
  double s_inner(const BrokenField& u, const BrokenField& v) const;
  double s_norm(const BrokenField& v) const { return std::sqrt(s_inner(v, v)); }
  /// Auxiliary function number `global_index` as a broken field.
  BrokenField basis_function(Index global_index) const;

 private:
  TwoLevelMesh mesh_;
  std::vector<AuxElement> elements_;
  Index size_ = 0;
};

/// Number of leading eigenvalues to keep when asking for `count`: extends the
/// selection over values equal to the count-th within 1e-10 relative.
Index count_with_ties(const Eigen::VectorXd& ascending, Index count);

AuxSpace build_aux_space(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                         Index per_element_count, KappaTilde weight = KappaTilde::h_scaled,
                         Exec exec = Exec::serial);

/// CEM basis functions phi_j^(i): energy minimizers on K_i^+ with
/// s(phi, nu) = s(psi_j^(i), nu) for all nu in V_aux(K_i^+).
/// Columns ordered by (element, j); n_dofs x aux.size().
SparseOperator build_cem_basis(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                               const AuxSpace& aux, Index layers, Exec exec = Exec::serial);

struct V2Basis {
  SparseOperator basis;                    // n_dofs x columns
  std::vector<Index> counts;               // per neighborhood (choice 1) or element (choice 2)
  std::vector<Eigen::VectorXd> eigenvalues;
  /// Choice 2 only: the auxiliary eigenfunctions xi_j^(i), n_dofs x columns.
  SparseOperator aux2;
};

/// Choice 1: per coarse neighborhood omega_i, the J lowest eigenfunctions of
/// a(xi, v) = (gamma / H^2)(xi, v) on V_0(omega_i) intersected with ker Pi.
V2Basis build_v2_choice1(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                         const AuxSpace& aux, Index per_neighborhood_count,
                         Exec exec = Exec::serial);

/// Choice 2: per K_i the J lowest eigenfunctions of a(xi, v) = gamma (xi, v)
/// on V(K_i) intersected with ker Pi, then the oversampled minimizers zeta with
/// s(zeta, V_aux,1) = 0 and (zeta, xi_k) = (xi_j^(i), xi_k).
V2Basis build_v2_choice2(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                         const AuxSpace& aux, Index per_element_count, Index layers,
                         Exec exec = Exec::serial);

enum class BasisKind { cem, v2_choice1, v2_choice2, lumped_v1, lumped_v2, orthogonalized };

std::string to_string(BasisKind kind);

/// Bases of V_{H,1} and V_{H,2} as sparse n_dofs x dim matrices.
struct SpacePair {
  SparseOperator basis1;
  SparseOperator basis2;
  BasisKind kind1 = BasisKind::cem;
  BasisKind kind2 = BasisKind::v2_choice2;
  std::vector<Index> counts1;
  std::vector<Index> counts2;
  Index layers = 0;

  /// Lumped pair only: (pi u, pi v) in the (basis1, basis2) coordinates,
  /// and the auxiliary functions as rows (u, a_k) used to test the source.
  std::optional<SparseOperator> surrogate_mass;
  std::optional<SparseOperator> aux_rows;
  /// Lumped pair only: fine cells and 1/sqrt(|cells|) of each indicator, and
  /// the second auxiliary set xi as n_dofs x columns.
  std::vector<std::vector<Index>> indicator_cells;
  std::vector<double> indicator_scale;
  SparseOperator xi;
  Index dropped_indicators = 0;

  Index dim1() const { return basis1.cols(); }
  Index dim2() const { return basis2.cols(); }
  /// [basis1 basis2]
  SparseOperator combined() const;
};

struct SpaceParams {
  Index aux_count = 3;
  Index layers = 2;
  int v2_choice = 2;  // 0 = no additional space, 1 or 2
  Index v2_count = 3;
  KappaTilde weight = KappaTilde::h_scaled;
};

SpacePair build_space_pair(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                           const SpaceParams& params, Exec exec = Exec::serial);

/// Mass-lumping pair: indicator auxiliary functions of {kappa <= threshold}
/// and {kappa > threshold} per element, L2-constrained eigenfunctions as the
/// second auxiliary set, and biorthogonal oversampled basis functions.
SpacePair build_lumped_pair(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                            double threshold, Index per_element_count, Index layers,
                            Exec exec = Exec::serial);

/// Lumped pair only: (f_x, psi_k) then (f_x, xi_k) for the indicator f_x of
/// `footprint`; the right-hand side of the lumped system up to the time factor.
Eigen::VectorXd lumped_source_load(const TwoLevelMesh& mesh, const SpacePair& pair,
                                   const CellBox& footprint);

/// Replaces basis2 by its M-orthogonal complement against span(basis1).
SpacePair orthogonalize(const SpacePair& pair, const SparseOperator& mass);

/// Condition number of the Gram matrix of basis1 and basis2 together.
double gram_condition(const SpacePair& pair, const SparseOperator& mass);

/// Dense CSV dump (one row per fine dof, one column per basis function).
void export_basis_csv(const SparseOperator& basis, const std::filesystem::path& path);

}  // namespace cemwave
