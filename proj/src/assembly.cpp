#include "cemwave/assembly.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "cemwave/error.hpp"

namespace cemwave {

namespace {

using Triplet = Eigen::Triplet<double>;

// Reference square [0,1]^2, node order (0,0), (1,0), (1,1), (0,1).
constexpr std::array<std::array<double, 2>, 4> kCorner{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};

double shape(int a, double x, double y) {
  const double sx = kCorner[a][0] > 0 ? x : 1.0 - x;
  const double sy = kCorner[a][1] > 0 ? y : 1.0 - y;
  return sx * sy;
}

std::array<double, 2> shape_grad(int a, double x, double y) {
  const double sx = kCorner[a][0] > 0 ? x : 1.0 - x;
  const double sy = kCorner[a][1] > 0 ? y : 1.0 - y;
  const double dx = kCorner[a][0] > 0 ? 1.0 : -1.0;
  const double dy = kCorner[a][1] > 0 ? 1.0 : -1.0;
  return {dx * sy, sx * dy};
}

template <typename Integrand>
Eigen::Matrix4d gauss_2x2(Integrand f) {
  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> pts{0.5 - g, 0.5 + g};
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  for (double x : pts)
    for (double y : pts)
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) m(a, b) += 0.25 * f(a, b, x, y);
  return m;
}

const Eigen::Matrix4d& q1_mass_unit() {
  static const Eigen::Matrix4d m =
      gauss_2x2([](int a, int b, double x, double y) { return shape(a, x, y) * shape(b, x, y); });
  return m;
}

// Fills 16 triplets per cell into a slot array indexed by cell, then builds
// the matrix. Slot order is the serial order, so the result is independent
// of `exec`.
SparseOperator assemble_cells(const TwoLevelMesh& mesh, const LocalRegion& region,
                              const Eigen::Matrix4d& element, std::span<const double> cell_weight,
                              const CoefficientField* kappa, Exec exec) {
  const CellBox& box = region.fine_cells();
  const Index width = box.width();
  const Index cells = box.cell_count();
  std::vector<Triplet> slots(static_cast<std::size_t>(cells * 16));
  std::vector<char> used(slots.size(), 0);

  for_each_index(exec, cells, [&](Index k) {
    const Index cx = box.x0 + k % width;
    const Index cy = box.y0 + k / width;
    double w = 1.0;
    if (kappa != nullptr) {
      w = (*kappa)(cx, cy);
    } else if (!cell_weight.empty()) {
      w = cell_weight[static_cast<std::size_t>(mesh.cell_id(cx, cy))];
    }
    if (!(w > 0.0))
      throw DataError("assembly: nonpositive coefficient at cell (" + std::to_string(cx) + ", " +
                      std::to_string(cy) + ")");
    std::array<Index, 4> local{};
    for (int a = 0; a < 4; ++a)
      local[a] = region.local_of_node(cx + static_cast<Index>(kCorner[a][0]),
                                      cy + static_cast<Index>(kCorner[a][1]));
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) {
        const std::size_t s = static_cast<std::size_t>(k * 16 + a * 4 + b);
        if (local[a] < 0 || local[b] < 0) continue;
        slots[s] = Triplet(local[a], local[b], w * element(a, b));
        used[s] = 1;
      }
    }
  });

  std::vector<Triplet> triplets;
  triplets.reserve(slots.size());
  for (std::size_t s = 0; s < slots.size(); ++s)
    if (used[s]) triplets.push_back(slots[s]);
  SparseOperator m(region.size(), region.size());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

const Eigen::Matrix4d& q1_stiffness_unit() {
  static const Eigen::Matrix4d k = gauss_2x2([](int a, int b, double x, double y) {
    const auto ga = shape_grad(a, x, y);
    const auto gb = shape_grad(b, x, y);
    return ga[0] * gb[0] + ga[1] * gb[1];
  });
  return k;
}

Eigen::Matrix4d q1_mass(double h) { return h * h * q1_mass_unit(); }

std::vector<double> kappa_tilde(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                                KappaTilde kind) {
  const Index n = mesh.nx_fine();
  if (kappa.nx() != n || kappa.ny() != n)
    throw ConfigError("kappa field size does not match the mesh");
  std::vector<double> w(static_cast<std::size_t>(n * n));
  const double H = mesh.H();
  const Index r = mesh.ratio();
  for (Index cy = 0; cy < n; ++cy) {
    for (Index cx = 0; cx < n; ++cx) {
      double factor = 1.0 / (H * H);
      if (kind == KappaTilde::partition_of_unity) {
        // Sum of squared gradients of the four bilinear coarse hats on the
        // enclosing coarse cell, evaluated at the fine cell center.
        const double xi = (static_cast<double>(cx % r) + 0.5) / static_cast<double>(r);
        const double eta = (static_cast<double>(cy % r) + 0.5) / static_cast<double>(r);
        factor = 2.0 * ((1 - xi) * (1 - xi) + xi * xi + (1 - eta) * (1 - eta) + eta * eta) /
                 (H * H);
      }
      w[static_cast<std::size_t>(mesh.cell_id(cx, cy))] = kappa(cx, cy) * factor;
    }
  }
  return w;
}

SparseOperator assemble_stiffness(const TwoLevelMesh& mesh, const CoefficientField& kappa,
                                  const LocalRegion& region, Exec exec) {
  if (kappa.nx() != mesh.nx_fine() || kappa.ny() != mesh.ny_fine())
    throw ConfigError("kappa field size does not match the mesh");
  return assemble_cells(mesh, region, q1_stiffness_unit(), {}, &kappa, exec);
}

SparseOperator assemble_mass(const TwoLevelMesh& mesh, std::span<const double> cell_weight,
                             const LocalRegion& region, Exec exec) {
  if (!cell_weight.empty() && static_cast<Index>(cell_weight.size()) != mesh.num_cells())
    throw ConfigError("mass weight must have one value per fine cell");
  return assemble_cells(mesh, region, q1_mass(mesh.h()), cell_weight, nullptr, exec);
}

double source_time_factor(double t, double f0, double h) {
  if (!(f0 > 0.0)) throw ConfigError("source frequency f0 must be positive");
  const double pi = std::numbers::pi;
  const double shift = t - 2.0 / f0;
  return (2.0 - 2.0 / f0) / (4.0 * h * h) * std::exp(-pi * pi * f0 * f0 * shift * shift);
}

Eigen::RowVectorXd cell_set_integral(const TwoLevelMesh& mesh, const LocalRegion& region,
                                     const std::vector<Index>& cells) {
  Eigen::RowVectorXd r = Eigen::RowVectorXd::Zero(region.size());
  const double quarter = 0.25 * mesh.h() * mesh.h();
  const Index n = mesh.nx_fine();
  for (Index c : cells) {
    const Index cx = c % n;
    const Index cy = c / n;
    for (int a = 0; a < 4; ++a) {
      const Index l = region.local_of_node(cx + static_cast<Index>(kCorner[a][0]),
                                           cy + static_cast<Index>(kCorner[a][1]));
      if (l >= 0) r(l) += quarter;
    }
  }
  return r;
}

Eigen::VectorXd source_load(const TwoLevelMesh& mesh, const CellBox& footprint) {
  std::vector<Index> cells;
  for (Index cy = footprint.y0; cy < footprint.y1; ++cy)
    for (Index cx = footprint.x0; cx < footprint.x1; ++cx) cells.push_back(mesh.cell_id(cx, cy));
  return cell_set_integral(mesh, mesh.global_region(), cells).transpose();
}

Eigen::VectorXd assemble_source(const TwoLevelMesh& mesh, const CellBox& footprint, double t,
                                double f0) {
  return source_time_factor(t, f0, mesh.h()) * source_load(mesh, footprint);
}

}  // namespace cemwave
