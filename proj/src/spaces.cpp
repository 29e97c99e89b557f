#include "cemwave/spaces.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <string>

#include "cemwave/error.hpp"
#include "cemwave/linsolve.hpp"

namespace cemwave {

namespace {

using Triplet = Eigen::Triplet<double>;

// Re-expresses a field given on `from`'s unknowns in `to`'s unknowns
// (nodes of `from` missing from `to` are dropped).
Eigen::MatrixXd transfer(const LocalRegion& from, const Eigen::MatrixXd& values,
                         const LocalRegion& to) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(to.size(), values.cols());
  for (Index k = 0; k < from.size(); ++k) {
    const Index l = to.local_of_dof(from.global_dof(k));
    if (l >= 0) out.row(l) = values.row(k);
  }
  return out;
}

// Appends region-local columns to a global n_dofs x m triplet list.
void append_columns(std::vector<Triplet>& triplets, const LocalRegion& region,
                    const Eigen::MatrixXd& columns, Index first_col) {
  for (Index j = 0; j < columns.cols(); ++j)
    for (Index k = 0; k < columns.rows(); ++k)
      if (columns(k, j) != 0.0)
        triplets.emplace_back(region.global_dof(k), first_col + j, columns(k, j));
}

struct LocalColumns {
  LocalRegion region;
  Eigen::MatrixXd columns;
};

SparseOperator gather(const TwoLevelMesh& mesh, const std::vector<LocalColumns>& parts) {
  std::vector<Triplet> triplets;
  Index col = 0;
  for (const auto& p : parts) {
    append_columns(triplets, p.region, p.columns, col);
    col += p.columns.cols();
  }
  SparseOperator basis(mesh.num_dofs(), col);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  return basis;
}

std::string aux_label(Index element, Index j) {
  return "psi_" + std::to_string(j) + "^(" + std::to_string(element) + ")";
}

// L2-constrained local eigenfunctions on V(K_i): lowest modes of
// a(xi, v) = gamma (xi, v) subject to `constraints` xi = 0.
struct LocalModes {
  LocalRegion region;
  Eigen::MatrixXd xi;
  Eigen::VectorXd values;
};

LocalModes constrained_local_modes(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                                   const LocalRegion& region, const Eigen::MatrixXd& constraints,
                                   Index count, double mass_scale, const std::string& where) {
  const Eigen::MatrixXd a = Eigen::MatrixXd(assemble_stiffness(mesh, kappa, region));
  const Eigen::MatrixXd m = mass_scale * Eigen::MatrixXd(assemble_mass(mesh, region));
  const Eigen::MatrixXd z = null_space(constraints);
  if (count > z.cols())
    throw ConfigError(where + ": requested " + std::to_string(count) +
                      " eigenfunctions but the constrained local space has dimension " +
                      std::to_string(z.cols()));
  LocalModes out{region, Eigen::MatrixXd(region.size(), 0), Eigen::VectorXd()};
  if (count == 0) return out;
  EigenPairs all = constrained_smallest_eigenpairs(a, m, constraints, z.cols());
  const Index keep = count_with_ties(all.values, count);
  out.values = all.values.head(keep);
  out.xi = all.vectors.leftCols(keep);
  return out;
}

}  // namespace

AuxSpace::AuxSpace(const TwoLevelMesh& mesh, std::vector<AuxElement> elements)
    : mesh_(mesh), elements_(std::move(elements)) {
  Index offset = 0;
  for (auto& e : elements_) {
    e.offset = offset;
    offset += e.psi.cols();
  }
  size_ = offset;
}

Eigen::MatrixXd AuxSpace::s_rows(Index e, const LocalRegion& region) const {
  const AuxElement& el = element(e);
  const Eigen::MatrixXd local = el.psi.transpose() * el.s_local;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(local.rows(), region.size());
  const Index stride = mesh_.nx_fine() + 1;
  for (Index k = 0; k < el.region.size(); ++k) {
    const Index node = el.region.global_node(k);
    const Index l = region.local_of_node(node % stride, node / stride);
    if (l >= 0 && (region.node_set() == NodeSet::closed || el.region.global_dof(k) >= 0))
      out.col(l) += local.col(k);
  }
  return out;
}

BrokenField AuxSpace::restrict(const Eigen::VectorXd& v) const {
  if (v.size() != mesh_.num_dofs()) throw ConfigError("aux: vector is not a fine dof vector");
  BrokenField out;
  out.pieces.reserve(elements_.size());
  for (const auto& el : elements_) {
    Eigen::VectorXd piece(el.region.size());
    for (Index k = 0; k < el.region.size(); ++k) {
      const Index g = el.region.global_dof(k);
      piece(k) = g >= 0 ? v(g) : 0.0;
    }
    out.pieces.push_back(std::move(piece));
  }
  return out;
}

Eigen::VectorXd AuxSpace::coefficients(const Eigen::VectorXd& v) const {
  const BrokenField r = restrict(v);
  Eigen::VectorXd c(size_);
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    c.segment(el.offset, el.psi.cols()) = el.psi.transpose() * (el.s_local * r.pieces[e]);
  }
  return c;
}

BrokenField AuxSpace::project(const BrokenField& v) const {
  BrokenField out;
  out.pieces.reserve(elements_.size());
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const auto& el = elements_[e];
    out.pieces.push_back(el.psi * (el.psi.transpose() * (el.s_local * v.pieces[e])));
  }
  return out;
}

double AuxSpace::s_inner(const BrokenField& u, const BrokenField& v) const {
  double sum = 0.0;
  for (std::size_t e = 0; e < elements_.size(); ++e)
    sum += u.pieces[e].dot(elements_[e].s_local * v.pieces[e]);
  return sum;
}

BrokenField AuxSpace::basis_function(Index global_index) const {
  BrokenField out;
  for (const auto& el : elements_) {
    Eigen::VectorXd piece = Eigen::VectorXd::Zero(el.region.size());
    const Index j = global_index - el.offset;
    if (j >= 0 && j < el.psi.cols()) piece = el.psi.col(j);
    out.pieces.push_back(std::move(piece));
  }
  return out;
}

Index count_with_ties(const Eigen::VectorXd& ascending, Index count) {
  const Index n = ascending.size();
  if (count <= 0) return 0;
  if (count >= n) return n;
  const double last = ascending(count - 1);
  const double scale =
      std::max(std::abs(last), 1e-12 * ascending.cwiseAbs().maxCoeff());
  Index keep = count;
  while (keep < n && std::abs(ascending(keep) - last) <= 1e-10 * scale) ++keep;
  return keep;
}

AuxSpace build_aux_space(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                         Index per_element_count, KappaTilde weight, Exec exec) {
  if (per_element_count < 1) throw ConfigError("aux: per-element count must be >= 1");
  const std::vector<double> kt = kappa_tilde(mesh, kappa, weight);
  std::vector<AuxElement> elements(static_cast<std::size_t>(mesh.num_coarse_elements()));
  for_each_index(exec, mesh.num_coarse_elements(), [&](Index e) {
    AuxElement el;
    el.region = mesh.coarse_element(e, NodeSet::closed);
    const Eigen::MatrixXd a = Eigen::MatrixXd(assemble_stiffness(mesh, kappa, el.region));
    el.s_local = Eigen::MatrixXd(assemble_mass(mesh, kt, el.region));
    if (per_element_count > el.region.size())
      throw ConfigError("aux: element " + std::to_string(e) + " has only " +
                        std::to_string(el.region.size()) + " local functions");
    EigenPairs pairs;
    try {
      pairs = smallest_eigenpairs(a, el.s_local, el.region.size());
    } catch (const SolverError& err) {
      throw SolverError("aux: element " + std::to_string(e) + ": " + err.what());
    }
    const Index keep = count_with_ties(pairs.values, per_element_count);
    el.eigenvalues = pairs.values.head(keep);
    el.psi = pairs.vectors.leftCols(keep);
    elements[static_cast<std::size_t>(e)] = std::move(el);
  });
  return AuxSpace(mesh, std::move(elements));
}

SparseOperator build_cem_basis(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                               const AuxSpace& aux, Index layers, Exec exec) {
  std::vector<LocalColumns> parts(static_cast<std::size_t>(aux.num_elements()));
  for_each_index(exec, aux.num_elements(), [&](Index i) {
    const LocalRegion region = mesh.oversample(mesh.coarse_element(i), layers);
    const std::vector<Index> elems = mesh.elements_in(region);
    Index rows = 0;
    for (Index e : elems) rows += aux.count(e);
    Eigen::MatrixXd c(rows, region.size());
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(rows, aux.count(i));
    std::vector<std::string> labels;
    Index r = 0;
    for (Index e : elems) {
      c.middleRows(r, aux.count(e)) = aux.s_rows(e, region);
      for (Index j = 0; j < aux.count(e); ++j) {
        labels.push_back(aux_label(e, j));
        if (e == i) targets(r + j, j) = 1.0;
      }
      r += aux.count(e);
    }
    try {
      SaddleSystem kkt(assemble_stiffness(mesh, kappa, region), std::move(c), std::move(labels));
      parts[static_cast<std::size_t>(i)] = {region, kkt.solve_homogeneous(targets)};
    } catch (const SolverError& err) {
      throw SolverError("cem basis: element " + std::to_string(i) + ": " + err.what());
    }
  });
  return gather(mesh, parts);
}

V2Basis build_v2_choice1(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                         const AuxSpace& aux, Index per_neighborhood_count, Exec exec) {
  if (per_neighborhood_count < 0) throw ConfigError("v2 choice 1: count must be >= 0");
  const Index nodes = mesh.num_coarse_nodes();
  std::vector<LocalModes> modes(static_cast<std::size_t>(nodes));
  const double inv_h2 = 1.0 / (mesh.H() * mesh.H());
  for_each_index(exec, nodes, [&](Index node) {
    const LocalRegion omega = mesh.neighborhood(node);
    const std::vector<Index> elems = mesh.elements_in(omega);
    Index rows = 0;
    for (Index e : elems) rows += aux.count(e);
    Eigen::MatrixXd c(rows, omega.size());
    Index r = 0;
    for (Index e : elems) {
      c.middleRows(r, aux.count(e)) = aux.s_rows(e, omega);
      r += aux.count(e);
    }
    LocalModes m = constrained_local_modes(mesh, kappa, omega, c, per_neighborhood_count, inv_h2,
                                           "v2 choice 1, neighborhood " + std::to_string(node));
    // gamma = H^2 lambda for the pencil (A, M / H^2) is already what we solved.
    modes[static_cast<std::size_t>(node)] = std::move(m);
  });

  V2Basis out;
  std::vector<LocalColumns> parts;
  for (auto& m : modes) {
    out.counts.push_back(m.xi.cols());
    out.eigenvalues.push_back(m.values);
    parts.push_back({m.region, m.xi});
  }
  out.basis = gather(mesh, parts);
  return out;
}

V2Basis build_v2_choice2(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                         const AuxSpace& aux, Index per_element_count, Index layers,
                         Exec exec) {
  if (per_element_count < 0) throw ConfigError("v2 choice 2: count must be >= 0");
  const Index ne = mesh.num_coarse_elements();
  std::vector<LocalModes> modes(static_cast<std::size_t>(ne));
  for_each_index(exec, ne, [&](Index i) {
    const LocalRegion k = mesh.coarse_element(i);
    modes[static_cast<std::size_t>(i)] =
        constrained_local_modes(mesh, kappa, k, aux.s_rows(i, k), per_element_count, 1.0,
                                "v2 choice 2, element " + std::to_string(i));
  });

  std::vector<LocalColumns> parts(static_cast<std::size_t>(ne));
  for_each_index(exec, ne, [&](Index i) {
    const LocalRegion region = mesh.oversample(mesh.coarse_element(i), layers);
    const std::vector<Index> elems = mesh.elements_in(region);
    const SparseOperator m_region = assemble_mass(mesh, region);
    Index rows = 0;
    for (Index e : elems) rows += aux.count(e) + modes[static_cast<std::size_t>(e)].xi.cols();
    const Index own = modes[static_cast<std::size_t>(i)].xi.cols();
    Eigen::MatrixXd c(rows, region.size());
    Eigen::MatrixXd targets = Eigen::MatrixXd::Zero(rows, own);
    std::vector<std::string> labels;
    const Eigen::MatrixXd xi_own =
        transfer(modes[static_cast<std::size_t>(i)].region, modes[static_cast<std::size_t>(i)].xi,
                 region);
    Index r = 0;
    for (Index e : elems) {
      c.middleRows(r, aux.count(e)) = aux.s_rows(e, region);
      for (Index j = 0; j < aux.count(e); ++j) labels.push_back(aux_label(e, j));
      r += aux.count(e);
    }
    for (Index e : elems) {
      const LocalModes& me = modes[static_cast<std::size_t>(e)];
      const Eigen::MatrixXd xi_e = transfer(me.region, me.xi, region);
      const Eigen::MatrixXd l2_rows = (m_region * xi_e).transpose();
      c.middleRows(r, xi_e.cols()) = l2_rows;
      targets.middleRows(r, xi_e.cols()) = l2_rows * xi_own;
      for (Index j = 0; j < xi_e.cols(); ++j)
        labels.push_back("xi_" + std::to_string(j) + "^(" + std::to_string(e) + ")");
      r += xi_e.cols();
    }
    try {
      SaddleSystem kkt(assemble_stiffness(mesh, kappa, region), std::move(c), std::move(labels));
      parts[static_cast<std::size_t>(i)] = {region, kkt.solve_homogeneous(targets)};
    } catch (const SolverError& err) {
      throw SolverError("v2 choice 2: element " + std::to_string(i) + ": " + err.what());
    }
  });

  V2Basis out;
  std::vector<LocalColumns> aux_parts;
  for (auto& m : modes) {
    out.counts.push_back(m.xi.cols());
    out.eigenvalues.push_back(m.values);
    aux_parts.push_back({m.region, m.xi});
  }
  out.basis = gather(mesh, parts);
  out.aux2 = gather(mesh, aux_parts);
  return out;
}

std::string to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::cem: return "cem";
    case BasisKind::v2_choice1: return "v2_choice1";
    case BasisKind::v2_choice2: return "v2_choice2";
    case BasisKind::lumped_v1: return "lumped_v1";
    case BasisKind::lumped_v2: return "lumped_v2";
    case BasisKind::orthogonalized: return "orthogonalized";
  }
  return "unknown";
}

SparseOperator SpacePair::combined() const {
  SparseOperator out(basis1.rows(), basis1.cols() + basis2.cols());
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(basis1.nonZeros() + basis2.nonZeros()));
  for (Index k = 0; k < basis1.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(basis1, k); it; ++it)
      t.emplace_back(it.row(), it.col(), it.value());
  for (Index k = 0; k < basis2.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(basis2, k); it; ++it)
      t.emplace_back(it.row(), basis1.cols() + it.col(), it.value());
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

SpacePair build_space_pair(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                           const SpaceParams& params, Exec exec) {
  const AuxSpace aux = build_aux_space(mesh, kappa, params.aux_count, params.weight, exec);
  SpacePair pair;
  pair.basis1 = build_cem_basis(mesh, kappa, aux, params.layers, exec);
  pair.kind1 = BasisKind::cem;
  pair.layers = params.layers;
  for (Index e = 0; e < aux.num_elements(); ++e) pair.counts1.push_back(aux.count(e));
  if (params.v2_choice == 1) {
    V2Basis v2 = build_v2_choice1(mesh, kappa, aux, params.v2_count, exec);
    pair.basis2 = std::move(v2.basis);
    pair.counts2 = std::move(v2.counts);
    pair.kind2 = BasisKind::v2_choice1;
  } else if (params.v2_choice == 2) {
    V2Basis v2 = build_v2_choice2(mesh, kappa, aux, params.v2_count, params.layers, exec);
    pair.basis2 = std::move(v2.basis);
    pair.counts2 = std::move(v2.counts);
    pair.kind2 = BasisKind::v2_choice2;
  } else if (params.v2_choice == 0) {
    pair.basis2 = SparseOperator(mesh.num_dofs(), 0);
  } else {
    throw ConfigError("v2_choice must be 0, 1 or 2");
  }
  return pair;
}

SpacePair build_lumped_pair(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                            double threshold, Index per_element_count, Index layers, Exec exec) {
  const Index ne = mesh.num_coarse_elements();
  const Index n = mesh.nx_fine();
  const double cell_area = mesh.h() * mesh.h();

  // Indicator auxiliary functions, L2-normalized: per element the cells with
  // kappa <= threshold, then the cells with kappa > threshold.
  struct Indicator {
    std::vector<Index> cells;
    double inv_sqrt_area = 0.0;
  };
  std::vector<std::vector<Indicator>> indicators(static_cast<std::size_t>(ne));
  Index dropped = 0;
  for (Index i = 0; i < ne; ++i) {
    const CellBox box = mesh.coarse_element(i).fine_cells();
    Indicator low, high;
    for (Index cy = box.y0; cy < box.y1; ++cy)
      for (Index cx = box.x0; cx < box.x1; ++cx)
        (kappa(cx, cy) <= threshold ? low : high).cells.push_back(cy * n + cx);
    for (Indicator* ind : {&low, &high}) {
      if (ind->cells.empty()) {
        ++dropped;
        continue;
      }
      ind->inv_sqrt_area = 1.0 / std::sqrt(static_cast<double>(ind->cells.size()) * cell_area);
      indicators[static_cast<std::size_t>(i)].push_back(std::move(*ind));
    }
  }
  auto indicator_rows = [&](Index e, const LocalRegion& region) {
    const auto& inds = indicators[static_cast<std::size_t>(e)];
    Eigen::MatrixXd rows(static_cast<Index>(inds.size()), region.size());
    for (std::size_t k = 0; k < inds.size(); ++k)
      rows.row(static_cast<Index>(k)) =
          inds[k].inv_sqrt_area * cell_set_integral(mesh, region, inds[k].cells);
    return rows;
  };

  std::vector<LocalModes> modes(static_cast<std::size_t>(ne));
  for_each_index(exec, ne, [&](Index i) {
    const LocalRegion k = mesh.coarse_element(i);
    modes[static_cast<std::size_t>(i)] =
        constrained_local_modes(mesh, kappa, k, indicator_rows(i, k), per_element_count, 1.0,
                                "lumped pair, element " + std::to_string(i));
  });

  std::vector<LocalColumns> parts1(static_cast<std::size_t>(ne)), parts2(static_cast<std::size_t>(ne));
  for_each_index(exec, ne, [&](Index i) {
    const LocalRegion region = mesh.oversample(mesh.coarse_element(i), layers);
    const std::vector<Index> elems = mesh.elements_in(region);
    const SparseOperator m_region = assemble_mass(mesh, region);
    Index rows = 0;
    for (Index e : elems)
      rows += static_cast<Index>(indicators[static_cast<std::size_t>(e)].size()) +
              modes[static_cast<std::size_t>(e)].xi.cols();
    const Index own1 = static_cast<Index>(indicators[static_cast<std::size_t>(i)].size());
    const Index own2 = modes[static_cast<std::size_t>(i)].xi.cols();
    Eigen::MatrixXd c(rows, region.size());
    Eigen::MatrixXd t1 = Eigen::MatrixXd::Zero(rows, own1);
    Eigen::MatrixXd t2 = Eigen::MatrixXd::Zero(rows, own2);
    std::vector<std::string> labels;
    Index r = 0;
    for (Index e : elems) {
      const Eigen::MatrixXd ind = indicator_rows(e, region);
      c.middleRows(r, ind.rows()) = ind;
      for (Index j = 0; j < ind.rows(); ++j) {
        labels.push_back("indicator_" + std::to_string(j) + "^(" + std::to_string(e) + ")");
        if (e == i) t1(r + j, j) = 1.0;
      }
      r += ind.rows();
    }
    for (Index e : elems) {
      const LocalModes& me = modes[static_cast<std::size_t>(e)];
      const Eigen::MatrixXd xi_e = transfer(me.region, me.xi, region);
      c.middleRows(r, xi_e.cols()) = (m_region * xi_e).transpose();
      for (Index j = 0; j < xi_e.cols(); ++j) {
        labels.push_back("xi_" + std::to_string(j) + "^(" + std::to_string(e) + ")");
        if (e == i) t2(r + j, j) = 1.0;
      }
      r += xi_e.cols();
    }
    try {
      SaddleSystem kkt(assemble_stiffness(mesh, kappa, region), std::move(c), std::move(labels));
      parts1[static_cast<std::size_t>(i)] = {region, kkt.solve_homogeneous(t1)};
      parts2[static_cast<std::size_t>(i)] = {region, kkt.solve_homogeneous(t2)};
    } catch (const SolverError& err) {
      throw SolverError("lumped pair: element " + std::to_string(i) + ": " + err.what());
    }
  });

  SpacePair pair;
  pair.basis1 = gather(mesh, parts1);
  pair.basis2 = gather(mesh, parts2);
  pair.kind1 = BasisKind::lumped_v1;
  pair.kind2 = BasisKind::lumped_v2;
  pair.layers = layers;
  pair.dropped_indicators = dropped;
  for (const auto& per_element : indicators)
    for (const auto& ind : per_element) {
      pair.indicator_cells.push_back(ind.cells);
      pair.indicator_scale.push_back(ind.inv_sqrt_area);
    }
  for (Index i = 0; i < ne; ++i) {
    pair.counts1.push_back(static_cast<Index>(indicators[static_cast<std::size_t>(i)].size()));
    pair.counts2.push_back(modes[static_cast<std::size_t>(i)].xi.cols());
  }

  // Global auxiliary rows (u, a_k): indicators first, then xi.
  const LocalRegion global = mesh.global_region();
  const SparseOperator mass = assemble_mass(mesh, global, exec);
  std::vector<LocalColumns> xi_parts;
  for (auto& m : modes) xi_parts.push_back({m.region, m.xi});
  const SparseOperator xi_global = gather(mesh, xi_parts);
  const Index n_ind = pair.dim1();
  const Index n_aux = n_ind + xi_global.cols();
  std::vector<Triplet> rows;
  Index k = 0;
  for (Index i = 0; i < ne; ++i) {
    for (const auto& ind : indicators[static_cast<std::size_t>(i)]) {
      const Eigen::RowVectorXd row = ind.inv_sqrt_area * cell_set_integral(mesh, global, ind.cells);
      for (Index j = 0; j < row.size(); ++j)
        if (row(j) != 0.0) rows.emplace_back(k, j, row(j));
      ++k;
    }
  }
  const SparseOperator xi_rows = SparseOperator(xi_global.transpose()) * mass;
  for (Index kk = 0; kk < xi_rows.outerSize(); ++kk)
    for (SparseOperator::InnerIterator it(xi_rows, kk); it; ++it)
      rows.emplace_back(n_ind + it.row(), it.col(), it.value());
  SparseOperator aux_rows(n_aux, mesh.num_dofs());
  aux_rows.setFromTriplets(rows.begin(), rows.end());

  // Gram of the auxiliary functions: indicators are disjoint and normalized,
  // xi are M-orthonormal and L2-orthogonal to the indicators of their element.
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(n_aux, n_aux);
  const Eigen::MatrixXd xi_dense = Eigen::MatrixXd(xi_global);
  const Eigen::MatrixXd aux_xi = Eigen::MatrixXd(aux_rows) * xi_dense;
  gram.rightCols(xi_global.cols()) = aux_xi;
  gram.bottomRows(xi_global.cols()) = aux_xi.transpose();
  const Eigen::MatrixXd coupling = Eigen::MatrixXd(aux_rows * pair.combined());
  const Eigen::MatrixXd surrogate = coupling.transpose() * gram.llt().solve(coupling);
  pair.surrogate_mass = surrogate.sparseView();
  pair.aux_rows = std::move(aux_rows);
  pair.xi = xi_global;
  return pair;
}

Eigen::VectorXd lumped_source_load(const TwoLevelMesh& mesh, const SpacePair& pair,
                                   const CellBox& footprint) {
  if (!pair.aux_rows) throw ConfigError("lumped source: space pair is not a lumped pair");
  const Index n_ind = static_cast<Index>(pair.indicator_cells.size());
  Eigen::VectorXd out(n_ind + pair.xi.cols());
  const Index n = mesh.nx_fine();
  const double cell_area = mesh.h() * mesh.h();
  for (Index k = 0; k < n_ind; ++k) {
    Index hits = 0;
    for (Index c : pair.indicator_cells[static_cast<std::size_t>(k)])
      if (footprint.contains_cell(c % n, c / n)) ++hits;
    out(k) = pair.indicator_scale[static_cast<std::size_t>(k)] * cell_area *
             static_cast<double>(hits);
  }
  out.tail(pair.xi.cols()) = SparseOperator(pair.xi.transpose()) * source_load(mesh, footprint);
  return out;
}

SpacePair orthogonalize(const SpacePair& pair, const SparseOperator& mass) {
  SpacePair out = pair;
  if (pair.dim1() == 0 || pair.dim2() == 0) return out;
  const SparseOperator m11 = SparseOperator(pair.basis1.transpose()) * mass * pair.basis1;
  const Eigen::MatrixXd m12 =
      Eigen::MatrixXd(SparseOperator(pair.basis1.transpose()) * mass * pair.basis2);
  const Eigen::MatrixXd coef = SpdSolver(m11).solve(m12);
  const Eigen::MatrixXd b2 = Eigen::MatrixXd(pair.basis2) - pair.basis1 * coef;
  out.basis2 = b2.sparseView();
  out.kind2 = BasisKind::orthogonalized;
  out.surrogate_mass.reset();
  out.aux_rows.reset();
  return out;
}

double gram_condition(const SpacePair& pair, const SparseOperator& mass) {
  const SparseOperator all = pair.combined();
  const Eigen::MatrixXd g = Eigen::MatrixXd(SparseOperator(all.transpose()) * mass * all);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return eig.eigenvalues().maxCoeff() / lo;
}

void export_basis_csv(const SparseOperator& basis, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  const Eigen::MatrixXd dense(basis);
  out << std::setprecision(17);
  for (Index r = 0; r < dense.rows(); ++r) {
    for (Index c = 0; c < dense.cols(); ++c) {
      if (c) out << ',';
      out << dense(r, c);
    }
    out << '\n';
  }
}

}  // namespace cemwave
