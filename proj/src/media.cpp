#include "cemwave/media.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cemwave/error.hpp"

namespace cemwave {

CoefficientField::CoefficientField(Index nx, Index ny, std::vector<double> values)
    : nx_(nx), ny_(ny), values_(std::move(values)) {
  if (nx <= 0 || ny <= 0 || static_cast<Index>(values_.size()) != nx * ny)
    throw DataError("coefficient field: expected " + std::to_string(nx * ny) +
                    " values, got " + std::to_string(values_.size()));
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(values_[k] > 0.0) || !std::isfinite(values_[k]))
      throw DataError("coefficient field: nonpositive value at cell (" +
                      std::to_string(static_cast<Index>(k) % nx) + ", " +
                      std::to_string(static_cast<Index>(k) / nx) + ")");
  }
  const auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
  min_ = *lo;
  max_ = *hi;
}

CoefficientField CoefficientField::constant(Index n, double value) {
  return CoefficientField(n, n, std::vector<double>(static_cast<std::size_t>(n * n), value));
}

CoefficientField CoefficientField::scaled(double factor) const {
  std::vector<double> v = values_;
  for (double& x : v) x *= factor;
  return CoefficientField(nx_, ny_, std::move(v));
}

namespace {

Feature parse_feature(const nlohmann::json& j, std::size_t idx) {
  Feature f;
  const std::string type = j.value("type", "block");
  if (type == "horizontal_strip") {
    f.kind = Feature::Kind::horizontal_strip;
  } else if (type == "vertical_strip") {
    f.kind = Feature::Kind::vertical_strip;
  } else if (type == "block") {
    f.kind = Feature::Kind::block;
  } else {
    throw DataError("geometry: feature " + std::to_string(idx) + " has unknown type '" +
                    type + "'");
  }
  f.x0 = j.value("x0", 0.0);
  f.x1 = j.value("x1", 1.0);
  f.y0 = j.value("y0", 0.0);
  f.y1 = j.value("y1", 1.0);
  f.scale = j.value("scale", 1.0);
  for (double c : {f.x0, f.x1, f.y0, f.y1}) {
    if (c < 0.0 || c > 1.0)
      throw DataError("geometry: feature " + std::to_string(idx) +
                      " extends outside the unit square");
  }
  if (f.x1 <= f.x0 || f.y1 <= f.y0)
    throw DataError("geometry: feature " + std::to_string(idx) + " is empty");
  if (!(f.scale > 0.0)) throw DataError("geometry: feature scale must be positive");
  return f;
}

}  // namespace

GeometrySpec parse_geometry_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("geometry: ") + e.what());
  }
  GeometrySpec spec;
  spec.background = j.value("background", 1.0);
  spec.contrast = j.value("contrast", 1.0e4);
  if (!(spec.background > 0.0) || !(spec.contrast > 0.0))
    throw DataError("geometry: background and contrast must be positive");
  if (j.contains("features")) {
    std::size_t idx = 0;
    for (const auto& f : j.at("features")) spec.features.push_back(parse_feature(f, idx++));
  }
  return spec;
}

GeometrySpec load_geometry(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("geometry: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_geometry_json(ss.str());
}

CoefficientField synth_channels(const GeometrySpec& spec, Index n) {
  std::vector<double> v(static_cast<std::size_t>(n * n), spec.background);
  const double h = 1.0 / static_cast<double>(n);
  for (const Feature& f : spec.features) {
    const double value = spec.background * spec.contrast * f.scale;
    for (Index cy = 0; cy < n; ++cy) {
      const double yc = (static_cast<double>(cy) + 0.5) * h;
      for (Index cx = 0; cx < n; ++cx) {
        const double xc = (static_cast<double>(cx) + 0.5) * h;
        if (xc > f.x0 && xc < f.x1 && yc > f.y0 && yc < f.y1)
          v[static_cast<std::size_t>(cy * n + cx)] = value;
      }
    }
  }
  return CoefficientField(n, n, std::move(v));
}

CoefficientField synth_channels(const GeometrySpec& spec, double background, double contrast,
                                Index n) {
  GeometrySpec s = spec;
  s.background = background;
  s.contrast = contrast;
  return synth_channels(s, n);
}

CoefficientField load_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("field: cannot open " + path.string());
  std::vector<double> values;
  Index nx = -1, ny = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::stringstream ls(line);
    std::string cell;
    Index count = 0;
    while (std::getline(ls, cell, ',')) {
      double x = 0.0;
      try {
        std::size_t used = 0;
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw DataError("field: unreadable value at cell (" + std::to_string(count) + ", " +
                        std::to_string(ny) + ")");
      }
      if (!(x > 0.0))
        throw DataError("field: nonpositive value at cell (" + std::to_string(count) + ", " +
                        std::to_string(ny) + ")");
      values.push_back(x);
      ++count;
    }
    if (nx < 0) nx = count;
    if (count != nx)
      throw DataError("field: row " + std::to_string(ny) + " has " + std::to_string(count) +
                      " values, expected " + std::to_string(nx));
    ++ny;
  }
  if (nx <= 0) throw DataError("field: empty file " + path.string());
  if (nx != ny)
    throw DataError("field: grid must be square, got " + std::to_string(nx) + "x" +
                    std::to_string(ny));
  return CoefficientField(nx, ny, std::move(values));
}

void save_field(const CoefficientField& field, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("field: cannot write " + path.string());
  out << std::setprecision(17);
  for (Index cy = 0; cy < field.ny(); ++cy) {
    for (Index cx = 0; cx < field.nx(); ++cx) {
      if (cx) out << ',';
      out << field(cx, cy);
    }
    out << '\n';
  }
}

std::vector<bool> above_threshold(const CoefficientField& field, double threshold) {
  std::vector<bool> mask(field.values().size());
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = field.values()[k] > threshold;
  return mask;
}

CellBox source_footprint(const SourceConfig& source, const TwoLevelMesh& mesh) {
  const Index n = mesh.nx_fine();
  auto nearest = [n](double c) {
    const Index k = static_cast<Index>(std::lround(c * static_cast<double>(n)));
    return std::clamp<Index>(k, 1, n - 1);
  };
  const Index ix = nearest(source.center_x);
  const Index iy = nearest(source.center_y);
  return {ix - 1, iy - 1, ix + 1, iy + 1};
}

}  // namespace cemwave
