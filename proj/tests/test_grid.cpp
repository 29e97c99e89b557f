#include <doctest.h>

#include <set>

#include "cemwave/error.hpp"
#include "cemwave/grid.hpp"

using namespace cemwave;

TEST_CASE("mesh rejects invalid sizes") {
  CHECK_THROWS_AS(TwoLevelMesh(10, 3), ConfigError);
  CHECK_THROWS_AS(TwoLevelMesh(1, 1), ConfigError);
  CHECK_THROWS_AS(TwoLevelMesh(8, 0), ConfigError);
  CHECK_NOTHROW(TwoLevelMesh(8, 2));
}

TEST_CASE("interior dof numbering is row-major over interior nodes") {
  const TwoLevelMesh mesh(6, 3);
  CHECK(mesh.num_dofs() == 25);
  CHECK(mesh.ratio() == 2);
  CHECK(mesh.dof_of_node(0, 3) == -1);
  CHECK(mesh.dof_of_node(6, 3) == -1);
  CHECK(mesh.dof_of_node(3, 0) == -1);
  for (Index iy = 1; iy < 6; ++iy)
    for (Index ix = 1; ix < 6; ++ix) CHECK(mesh.dof_of_node(ix, iy) == (iy - 1) * 5 + (ix - 1));
}

TEST_CASE("global region covers every dof once") {
  const TwoLevelMesh mesh(8, 4);
  const LocalRegion g = mesh.global_region();
  CHECK(g.size() == mesh.num_dofs());
  std::set<Index> seen(g.global_dofs().begin(), g.global_dofs().end());
  CHECK(static_cast<Index>(seen.size()) == mesh.num_dofs());
  for (Index k = 0; k < g.size(); ++k) CHECK(g.local_of_dof(g.global_dof(k)) == k);
}

TEST_CASE("coarse element node sets") {
  const TwoLevelMesh mesh(12, 3);  // ratio 4
  const LocalRegion inner = mesh.coarse_element(4);
  const LocalRegion closed = mesh.coarse_element(4, NodeSet::closed);
  CHECK(inner.size() == 9);
  CHECK(closed.size() == 25);
  CHECK(inner.fine_cells() == CellBox{4, 4, 8, 8});
  // A corner element keeps its domain-boundary nodes in the closed set, with dof -1.
  const LocalRegion corner = mesh.coarse_element(0, NodeSet::closed);
  CHECK(corner.size() == 25);
  Index boundary = 0;
  for (Index k = 0; k < corner.size(); ++k) boundary += corner.global_dof(k) < 0;
  CHECK(boundary == 9);
  CHECK(corner.local_of_node(0, 0) == 0);
  CHECK(corner.local_of_node(5, 0) == -1);
}

TEST_CASE("neighborhoods are clipped to the domain") {
  const TwoLevelMesh mesh(8, 4);
  CHECK(mesh.neighborhood(0).coarse_cells() == CellBox{0, 0, 1, 1});
  const Index center = 2 * 5 + 2;
  CHECK(mesh.neighborhood(center).coarse_cells() == CellBox{1, 1, 3, 3});
  CHECK(mesh.neighborhood(center).size() == 9);
  CHECK(mesh.elements_in(mesh.neighborhood(center)).size() == 4);
}

TEST_CASE("oversampling grows by whole coarse cells and saturates at the domain") {
  const TwoLevelMesh mesh(20, 5);
  const LocalRegion e = mesh.coarse_element(12);  // center
  CHECK(mesh.oversample(e, 0).coarse_cells() == CellBox{2, 2, 3, 3});
  CHECK(mesh.oversample(e, 1).coarse_cells() == CellBox{1, 1, 4, 4});
  CHECK(mesh.elements_in(mesh.oversample(e, 1)).size() == 9);
  const LocalRegion all = mesh.oversample(e, 10);
  CHECK(all.size() == mesh.num_dofs());
  CHECK(mesh.elements_in(all).size() == 25);
  CHECK_THROWS_AS(mesh.oversample(e, -1), ConfigError);
  // Every oversampled node is a genuine interior dof.
  for (Index k = 0; k < all.size(); ++k) CHECK(all.global_dof(k) >= 0);
}

TEST_CASE("element_of_cell") {
  const TwoLevelMesh mesh(9, 3);
  CHECK(mesh.element_of_cell(0, 0) == 0);
  CHECK(mesh.element_of_cell(8, 0) == 2);
  CHECK(mesh.element_of_cell(3, 4) == 4);
  CHECK(mesh.element_of_cell(8, 8) == 8);
}
