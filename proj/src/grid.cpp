#include "cemwave/grid.hpp"

#include <algorithm>
#include <string>

#include "cemwave/error.hpp"

namespace cemwave {

LocalRegion::LocalRegion(RegionKind kind, Index anchor, CellBox coarse_box,
                         Index ratio, Index n_fine, NodeSet nodes)
    : kind_(kind),
      anchor_(anchor),
      coarse_(coarse_box),
      fine_{coarse_box.x0 * ratio, coarse_box.y0 * ratio, coarse_box.x1 * ratio,
            coarse_box.y1 * ratio},
      n_fine_(n_fine),
      nodes_(nodes) {
  const Index shrink = nodes == NodeSet::interior ? 1 : 0;
  lo_x_ = fine_.x0 + shrink;
  lo_y_ = fine_.y0 + shrink;
  nodes_x_ = std::max<Index>(0, fine_.width() + 1 - 2 * shrink);
  nodes_y_ = std::max<Index>(0, fine_.height() + 1 - 2 * shrink);
  dofs_.reserve(static_cast<std::size_t>(nodes_x_ * nodes_y_));
  for (Index iy = lo_y_; iy < lo_y_ + nodes_y_; ++iy) {
    for (Index ix = lo_x_; ix < lo_x_ + nodes_x_; ++ix) {
      const bool boundary = ix == 0 || iy == 0 || ix == n_fine_ || iy == n_fine_;
      dofs_.push_back(boundary ? -1 : (iy - 1) * (n_fine_ - 1) + (ix - 1));
    }
  }
}

Index LocalRegion::global_node(Index local) const {
  const Index ix = lo_x_ + local % nodes_x_;
  const Index iy = lo_y_ + local / nodes_x_;
  return iy * (n_fine_ + 1) + ix;
}

Index LocalRegion::local_of_node(Index ix, Index iy) const {
  if (ix < lo_x_ || iy < lo_y_ || ix >= lo_x_ + nodes_x_ || iy >= lo_y_ + nodes_y_)
    return -1;
  return (iy - lo_y_) * nodes_x_ + (ix - lo_x_);
}

Index LocalRegion::local_of_dof(Index dof) const {
  if (dof < 0 || n_fine_ < 2) return -1;
  const Index ix = dof % (n_fine_ - 1) + 1;
  const Index iy = dof / (n_fine_ - 1) + 1;
  return local_of_node(ix, iy);
}

TwoLevelMesh::TwoLevelMesh(Index n_fine, Index n_coarse)
    : n_fine_(n_fine), n_coarse_(n_coarse) {
  if (n_fine < 2 || n_coarse < 1)
    throw ConfigError("mesh: need n_fine >= 2 and n_coarse >= 1, got " +
                      std::to_string(n_fine) + ", " + std::to_string(n_coarse));
  if (n_fine % n_coarse != 0)
    throw ConfigError("mesh: fine count " + std::to_string(n_fine) +
                      " is not divisible by coarse count " + std::to_string(n_coarse));
}

Index TwoLevelMesh::dof_of_node(Index ix, Index iy) const {
  if (ix <= 0 || iy <= 0 || ix >= n_fine_ || iy >= n_fine_) return -1;
  return (iy - 1) * (n_fine_ - 1) + (ix - 1);
}

Index TwoLevelMesh::element_of_cell(Index cx, Index cy) const {
  return (cy / ratio()) * n_coarse_ + cx / ratio();
}

LocalRegion TwoLevelMesh::make_region(RegionKind kind, Index anchor, CellBox coarse,
                                      NodeSet nodes) const {
  return LocalRegion(kind, anchor, coarse, ratio(), n_fine_, nodes);
}

LocalRegion TwoLevelMesh::global_region() const {
  return make_region(RegionKind::global, 0, {0, 0, n_coarse_, n_coarse_},
                     NodeSet::interior);
}

LocalRegion TwoLevelMesh::coarse_element(Index element, NodeSet nodes) const {
  if (element < 0 || element >= num_coarse_elements())
    throw ConfigError("coarse element id out of range: " + std::to_string(element));
  const Index cx = element % n_coarse_;
  const Index cy = element / n_coarse_;
  return make_region(RegionKind::coarse_element, element, {cx, cy, cx + 1, cy + 1},
                     nodes);
}

LocalRegion TwoLevelMesh::neighborhood(Index coarse_node) const {
  if (coarse_node < 0 || coarse_node >= num_coarse_nodes())
    throw ConfigError("coarse node id out of range: " + std::to_string(coarse_node));
  const Index nx = coarse_node % (n_coarse_ + 1);
  const Index ny = coarse_node / (n_coarse_ + 1);
  const CellBox box{std::max<Index>(nx - 1, 0), std::max<Index>(ny - 1, 0),
                    std::min(nx + 1, n_coarse_), std::min(ny + 1, n_coarse_)};
  return make_region(RegionKind::neighborhood, coarse_node, box, NodeSet::interior);
}

LocalRegion TwoLevelMesh::oversample(const LocalRegion& region, Index layers) const {
  if (layers < 0) throw ConfigError("oversampling layers must be >= 0");
  const CellBox& c = region.coarse_cells();
  const CellBox box{std::max<Index>(c.x0 - layers, 0), std::max<Index>(c.y0 - layers, 0),
                    std::min(c.x1 + layers, n_coarse_), std::min(c.y1 + layers, n_coarse_)};
  return make_region(RegionKind::oversampled, region.anchor(), box, NodeSet::interior);
}

std::vector<Index> TwoLevelMesh::elements_in(const LocalRegion& region) const {
  std::vector<Index> out;
  const CellBox& c = region.coarse_cells();
  for (Index cy = c.y0; cy < c.y1; ++cy)
    for (Index cx = c.x0; cx < c.x1; ++cx) out.push_back(cy * n_coarse_ + cx);
  return out;
}

}  // namespace cemwave
