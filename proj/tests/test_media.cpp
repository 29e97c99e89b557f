#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cemwave/error.hpp"
#include "cemwave/media.hpp"

using namespace cemwave;

namespace {
std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cemwave_media_" + name);
}
}  // namespace

TEST_CASE("coefficient field validates values") {
  CHECK_THROWS_AS(CoefficientField(2, 2, {1, 1, 1}), DataError);
  try {
    CoefficientField(2, 2, {1, 1, -3, 1});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(0, 1)") != std::string::npos);
  }
  const CoefficientField f(2, 2, {1, 2, 4, 8});
  CHECK(f.contrast() == doctest::Approx(8.0));
  CHECK(f(1, 1) == 8.0);
  CHECK(f.scaled(2.0).max() == 16.0);
}

TEST_CASE("synthesized channels take the feature value at cell centers") {
  GeometrySpec g;
  g.background = 2.0;
  g.contrast = 100.0;
  Feature strip;
  strip.kind = Feature::Kind::horizontal_strip;
  strip.y0 = 0.25;
  strip.y1 = 0.5;
  g.features.push_back(strip);
  const CoefficientField f = synth_channels(g, 8);
  for (Index cy = 0; cy < 8; ++cy)
    for (Index cx = 0; cx < 8; ++cx) CHECK(f(cx, cy) == ((cy == 2 || cy == 3) ? 200.0 : 2.0));
  CHECK(f.contrast() == doctest::Approx(100.0));
  CHECK(synth_channels(g, 1.0, 1e6, 8).max() == doctest::Approx(1e6));
}

TEST_CASE("later features overwrite earlier ones") {
  GeometrySpec g;
  g.contrast = 10.0;
  Feature a;
  Feature b;
  b.x0 = 0.5;
  b.scale = 3.0;
  g.features = {a, b};
  const CoefficientField f = synth_channels(g, 4);
  CHECK(f(0, 0) == 10.0);
  CHECK(f(3, 0) == 30.0);
}

TEST_CASE("geometry json parsing and validation") {
  const GeometrySpec g = parse_geometry_json(
      R"({"background": 1, "contrast": 1e4,
          "features": [{"type": "vertical_strip", "x0": 0.2, "x1": 0.3},
                       {"type": "block", "x0": 0.5, "x1": 0.6, "y0": 0.1, "y1": 0.9, "scale": 0.5}]})");
  REQUIRE(g.features.size() == 2);
  CHECK(g.features[0].kind == Feature::Kind::vertical_strip);
  CHECK(g.features[0].y1 == 1.0);
  CHECK(g.features[1].scale == 0.5);
  CHECK_THROWS_AS(parse_geometry_json(R"({"features": [{"type": "circle"}]})"), DataError);
  CHECK_THROWS_AS(parse_geometry_json(R"({"features": [{"x0": -0.1}]})"), DataError);
  CHECK_THROWS_AS(parse_geometry_json(R"({"features": [{"x0": 0.5, "x1": 0.5}]})"), DataError);
  CHECK_THROWS_AS(parse_geometry_json("{not json"), DataError);
}

TEST_CASE("field CSV round trip is exact") {
  const CoefficientField f(3, 3, {1.0, 1.0 / 3.0, 7e5, 2.5, 1e-3, 4.0, 9.0, 10.0, 0.1});
  const auto path = temp_file("roundtrip.csv");
  save_field(f, path);
  const CoefficientField g = load_field(path);
  CHECK(g.values() == f.values());
  std::filesystem::remove(path);
}

TEST_CASE("field CSV errors") {
  const auto path = temp_file("bad.csv");
  {
    std::ofstream out(path);
    out << "1,2\n3\n";
  }
  CHECK_THROWS_AS(load_field(path), DataError);
  {
    std::ofstream out(path);
    out << "1,2\n3,0\n";
  }
  try {
    load_field(path);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("(1, 1)") != std::string::npos);
  }
  {
    std::ofstream out(path);
    out << "1,2\n";
  }
  CHECK_THROWS_AS(load_field(path), DataError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_field(temp_file("missing.csv")), DataError);
}

TEST_CASE("threshold mask and source footprint") {
  const CoefficientField f(2, 2, {1, 5, 1, 5});
  const auto mask = above_threshold(f, 1.0);
  CHECK(mask == std::vector<bool>{false, true, false, true});

  const TwoLevelMesh mesh(10, 5);
  CHECK(source_footprint(SourceConfig{}, mesh) == CellBox{4, 4, 6, 6});
  SourceConfig corner;
  corner.center_x = 0.0;
  corner.center_y = 1.0;
  CHECK(source_footprint(corner, mesh) == CellBox{0, 8, 2, 10});
}
