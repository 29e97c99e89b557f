#pragma once

#include <cstddef>
#include <vector>

namespace cemwave {

using Index = std::ptrdiff_t;

/// Half-open block of fine cells [x0, x1) x [y0, y1).
struct CellBox {
  Index x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  Index width() const { return x1 - x0; }
  Index height() const { return y1 - y0; }
  Index cell_count() const { return width() * height(); }
  bool contains_cell(Index cx, Index cy) const {
    return cx >= x0 && cx < x1 && cy >= y0 && cy < y1;
  }
  bool contains(const CellBox& other) const {
    return other.x0 >= x0 && other.x1 <= x1 && other.y0 >= y0 && other.y1 <= y1;
  }
  bool operator==(const CellBox&) const = default;
};

enum class RegionKind { global, coarse_element, neighborhood, oversampled };

/// Which fine nodes of a cell box carry unknowns: `interior` is H^1_0 of the
/// box (nodes strictly inside it, hence never on the domain boundary),
/// `closed` takes every node of the box including its boundary.
enum class NodeSet { interior, closed };

/// A union of coarse cells together with the numbering of its fine nodes.
///
/// Local node k maps to a global node id (row-major over all
/// (n+1)^2 fine nodes) and to a global interior degree of freedom, which is
/// -1 for nodes on the domain boundary.
class LocalRegion {
 public:
  LocalRegion() = default;
  LocalRegion(RegionKind kind, Index anchor, CellBox coarse_box, Index ratio,
              Index n_fine, NodeSet nodes);

  RegionKind kind() const { return kind_; }
  /// Coarse element id for elements / oversampled regions, coarse node id for
  /// neighborhoods.
  Index anchor() const { return anchor_; }
  NodeSet node_set() const { return nodes_; }
  const CellBox& coarse_cells() const { return coarse_; }
  const CellBox& fine_cells() const { return fine_; }

  Index size() const { return static_cast<Index>(dofs_.size()); }
  Index global_node(Index local) const;
  Index global_dof(Index local) const { return dofs_[static_cast<std::size_t>(local)]; }
  const std::vector<Index>& global_dofs() const { return dofs_; }
  /// Inverse of global_dof; -1 when the dof is not part of the region.
  Index local_of_dof(Index dof) const;
  /// Local index of the node at fine coordinates (ix, iy), or -1.
  Index local_of_node(Index ix, Index iy) const;

 private:
  RegionKind kind_ = RegionKind::global;
  Index anchor_ = 0;
  CellBox coarse_;
  CellBox fine_;
  Index n_fine_ = 0;
  NodeSet nodes_ = NodeSet::interior;
  Index lo_x_ = 0, lo_y_ = 0, nodes_x_ = 0, nodes_y_ = 0;
  std::vector<Index> dofs_;
};

/// Uniform two-level quadrilateral mesh of the unit square: n_fine^2 fine
/// cells grouped into n_coarse^2 coarse cells, homogeneous Dirichlet data on
/// the boundary.
class TwoLevelMesh {
 public:
  TwoLevelMesh(Index n_fine, Index n_coarse);

  Index nx_fine() const { return n_fine_; }
  Index ny_fine() const { return n_fine_; }
  Index nx_coarse() const { return n_coarse_; }
  Index ny_coarse() const { return n_coarse_; }
  /// Fine cells per coarse cell along one axis.
  Index ratio() const { return n_fine_ / n_coarse_; }
  double h() const { return 1.0 / static_cast<double>(n_fine_); }
  double H() const { return 1.0 / static_cast<double>(n_coarse_); }

  Index num_cells() const { return n_fine_ * n_fine_; }
  Index num_nodes() const { return (n_fine_ + 1) * (n_fine_ + 1); }
  Index num_dofs() const { return (n_fine_ - 1) * (n_fine_ - 1); }
  Index num_coarse_elements() const { return n_coarse_ * n_coarse_; }
  Index num_coarse_nodes() const { return (n_coarse_ + 1) * (n_coarse_ + 1); }

  Index node_id(Index ix, Index iy) const { return iy * (n_fine_ + 1) + ix; }
  Index cell_id(Index cx, Index cy) const { return cy * n_fine_ + cx; }
  /// Interior dof numbering, -1 for boundary nodes.
  Index dof_of_node(Index ix, Index iy) const;
  /// Coarse element containing fine cell (cx, cy).
  Index element_of_cell(Index cx, Index cy) const;

  LocalRegion global_region() const;
  LocalRegion coarse_element(Index element, NodeSet nodes = NodeSet::interior) const;
  /// omega_i: union of the coarse elements sharing coarse node `coarse_node`.
  LocalRegion neighborhood(Index coarse_node) const;
  /// K_i^+: `region` grown by `layers` coarse cells per side, clipped to the
  /// domain. Always numbered with NodeSet::interior.
  LocalRegion oversample(const LocalRegion& region, Index layers) const;

  /// Coarse elements fully contained in the region's coarse box, ascending.
  std::vector<Index> elements_in(const LocalRegion& region) const;

 private:
  LocalRegion make_region(RegionKind kind, Index anchor, CellBox coarse,
                          NodeSet nodes) const;

  Index n_fine_;
  Index n_coarse_;
};

inline TwoLevelMesh build_mesh(Index n_fine, Index n_coarse) {
  return TwoLevelMesh(n_fine, n_coarse);
}

}  // namespace cemwave
