#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cemwave/grid.hpp"

namespace cemwave {

/// Piecewise-constant coefficient kappa, one positive value per fine cell,
/// stored row-major (cell (cx, cy) at cy * nx + cx, cy = 0 at y = 0).
class CoefficientField {
 public:
  CoefficientField() = default;
  CoefficientField(Index nx, Index ny, std::vector<double> values);

  static CoefficientField constant(Index n, double value);

  Index nx() const { return nx_; }
  Index ny() const { return ny_; }
  double operator()(Index cx, Index cy) const {
    return values_[static_cast<std::size_t>(cy * nx_ + cx)];
  }
  const std::vector<double>& values() const { return values_; }

  double min() const { return min_; }
  double max() const { return max_; }
  double contrast() const { return max_ / min_; }

  CoefficientField scaled(double factor) const;

 private:
  Index nx_ = 0, ny_ = 0;
  std::vector<double> values_;
  double min_ = 1.0, max_ = 1.0;
};

/// Axis-aligned rectangle in [0,1]^2 filled with background * contrast * scale.
/// Horizontal strips default to the full width, vertical strips to the full
/// height.
struct Feature {
  enum class Kind { horizontal_strip, vertical_strip, block };
  Kind kind = Kind::block;
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
  double scale = 1.0;
};

struct GeometrySpec {
  double background = 1.0;
  double contrast = 1.0e4;
  std::vector<Feature> features;
};

GeometrySpec parse_geometry_json(const std::string& text);
GeometrySpec load_geometry(const std::filesystem::path& path);

/// Rasterizes features onto an n x n cell grid. A cell takes a feature's
/// value when its center lies inside the rectangle; later features win.
CoefficientField synth_channels(const GeometrySpec& spec, Index n);
CoefficientField synth_channels(const GeometrySpec& spec, double background,
                                double contrast, Index n);

/// CSV grid: ny lines of nx comma-separated values, line j holding row cy = j.
CoefficientField load_field(const std::filesystem::path& path);
void save_field(const CoefficientField& field, const std::filesystem::path& path);

/// Cells with kappa > threshold (the high-speed part used by mass lumping).
std::vector<bool> above_threshold(const CoefficientField& field, double threshold);

/// Temporal/spatial source data. The spatial profile is the indicator of a
/// 2x2 block of fine cells around the fine node nearest to `center`.
struct SourceConfig {
  double f0 = 0.5;
  double center_x = 0.5;
  double center_y = 0.5;
};

/// Fine cells covered by the source footprint on `mesh`.
CellBox source_footprint(const SourceConfig& source, const TwoLevelMesh& mesh);

}  // namespace cemwave
