#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cemwave/error.hpp"
#include "cemwave/experiment.hpp"

using namespace cemwave;
using nlohmann::json;

namespace {

json small_config() {
  return json::parse(R"({
    "mesh": {"fine": 16, "coarse": 4},
    "medium": {"geometry": {"contrast": 100.0, "features": [
      {"type": "horizontal_strip", "y0": 0.4, "y1": 0.5},
      {"type": "vertical_strip", "x0": 0.6, "x1": 0.7}]}},
    "source": {"f0": 2.0, "center": [0.5, 0.5]},
    "spaces": {"aux_count": 2, "layers": 1, "v2_count": 2},
    "schemes": [
      {"kind": "implicit", "tau": 0.01, "T": 0.1},
      {"kind": "split_omega1", "tau": 0.002, "T": 0.1}
    ],
    "reference": {"tau": 0.001},
    "snapshot_times": [0.02, 0.1],
    "error_window": [0.02, 0.1]
  })");
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string error_of(const json& j) {
  try {
    parse_experiment_config(j);
  } catch (const ConfigError& e) {
    return e.what();
  } catch (const DataError& e) {
    return e.what();
  }
  return "";
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("config parsing fills defaults") {
  const ExperimentConfig c = parse_experiment_config(small_config());
  CHECK(c.n_fine == 16);
  CHECK(c.spaces.layers == 1);
  CHECK(c.spaces.v2_choice == 2);
  REQUIRE(c.schemes.size() == 2);
  CHECK(c.schemes[0].name == "implicit");
  CHECK(c.schemes[1].kind == SchemeKind::split_omega1);
  CHECK(c.schemes[1].omega == 1.0);
  CHECK(c.source->f0 == 2.0);
  CHECK(c.split_certification == CertifyMode::nonortho);
  CHECK(c.window_start == 0.02);

  json j = small_config();
  j["schemes"] = json::array({{{"kind", "split_lumped"}}});
  j.erase("snapshot_times");
  const ExperimentConfig l = parse_experiment_config(j);
  CHECK(l.schemes[0].tau == 0.004);
  CHECK(l.schemes[0].final_time == 0.6);
  j["source"] = nullptr;
  CHECK_FALSE(parse_experiment_config(j).source.has_value());
}

TEST_CASE("config errors name the offending field") {
  auto with = [](auto edit) {
    json j = small_config();
    edit(j);
    return error_of(j);
  };
  CHECK(with([](json& j) { j["bogus"] = 1; }).find("bogus: unknown field") != std::string::npos);
  CHECK(with([](json& j) { j["mesh"]["fine"] = "a"; }).find("mesh.fine") != std::string::npos);
  CHECK(with([](json& j) { j["schemes"] = json::array(); }).find("schemes") != std::string::npos);
  CHECK(with([](json& j) { j["schemes"][1]["tau"] = -1; }).find("schemes[1].tau") != std::string::npos);
  CHECK(with([](json& j) { j["schemes"][1]["tau"] = 0.0025; }).find("schemes[1].tau") !=
        std::string::npos);
  CHECK(with([](json& j) { j["schemes"][0]["kind"] = "rk4"; }).find("schemes[0].kind") !=
        std::string::npos);
  CHECK(with([](json& j) { j["schemes"][1]["name"] = "implicit"; }).find("duplicate") !=
        std::string::npos);
  CHECK(with([](json& j) { j["schemes"][1]["space"] = "v1"; }).find("schemes[1].space") !=
        std::string::npos);
  CHECK(with([](json& j) { j["snapshot_times"] = {0.015}; }).find("snapshot_times[0]") !=
        std::string::npos);
  CHECK(with([](json& j) { j["error_window"] = {0.5, 0.1}; }).find("error_window") !=
        std::string::npos);
  CHECK(with([](json& j) { j["certification"] = "loose"; }).find("certification") !=
        std::string::npos);
  CHECK(with([](json& j) { j["source"]["center"] = {2.0, 0.5}; }).find("source.center") !=
        std::string::npos);
  CHECK(with([](json& j) { j.erase("medium"); }).find("medium") != std::string::npos);
  CHECK(with([](json& j) { j["spaces"]["kappa_tilde"] = "other"; }).find("spaces.kappa_tilde") !=
        std::string::npos);
  CHECK(with([](json& j) { j["schemes"][0].erase("kind"); }).find("schemes[0].kind: required") !=
        std::string::npos);
  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("contrast override on a CSV medium rescales to the requested ratio") {
  const auto dir = fresh_dir("cemwave_medium_test");
  std::filesystem::create_directories(dir);
  ExperimentConfig c = parse_experiment_config(small_config());
  const CoefficientField base = build_medium(c);
  save_field(base, dir / "k.csv");
  c.medium.geometry.reset();
  c.medium.field_file = dir / "k.csv";
  CHECK(build_medium(c).max() == doctest::Approx(100.0));
  c.medium.contrast = 1e4;
  const CoefficientField r = build_medium(c);
  CHECK(r.min() == doctest::Approx(1.0));
  CHECK(r.max() == doctest::Approx(1e4));
  c.n_fine = 20;
  CHECK_THROWS_AS(build_medium(c), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a small experiment writes its artifacts and is deterministic") {
  const ExperimentConfig c = parse_experiment_config(small_config());
  const auto dir = fresh_dir("cemwave_run_test");
  const ExperimentSummary s = run_experiment(c, dir);
  CHECK(s.dim1 >= 32);  // ties in the auxiliary spectrum add functions
  CHECK(s.dim2 == 32);
  CHECK(s.reference_tau <= 0.001);
  REQUIRE(s.schemes.size() == 2);
  CHECK(s.schemes[0].steps == 10);
  CHECK(s.schemes[1].steps == 50);
  CHECK(s.schemes[1].certified);
  CHECK(std::isnan(s.schemes[1].energy_drift));
  CHECK(s.schemes[0].errors.size() == 11);
  for (const char* f : {"stability.json", "summary.json", "energy_reference.csv",
                        "energy_implicit.csv", "errors_split_omega1.csv",
                        "errors_split_omega1_window.csv", "snapshot_implicit_t0.1000.csv",
                        "snapshot_split_omega1_t0.0200.pgm", "snapshot_reference_t0.1000.csv"})
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);

  const json stab = json::parse(slurp(dir / "stability.json"));
  CHECK(stab["alpha"].get<double>() > 0.0);
  CHECK(stab["schemes"][0]["mode"] == "unconditional");
  CHECK(stab["schemes"][0]["tau_max"] == "inf");

  ExperimentConfig serial = c;
  serial.parallel = false;
  const auto dir2 = fresh_dir("cemwave_run_test_serial");
  run_experiment(serial, dir2);
  CHECK(slurp(dir / "summary.json") == slurp(dir2 / "summary.json"));
  CHECK(slurp(dir / "errors_split_omega1.csv") == slurp(dir2 / "errors_split_omega1.csv"));

  const json cert = certify_experiment(c, dir2 / "cert");
  CHECK(cert["schemes"].size() == 2);
  CHECK(std::filesystem::exists(dir2 / "cert" / "stability.json"));
  std::filesystem::remove_all(dir);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("single-space schemes on V1 and on the fine grid") {
  json j = small_config();
  j["schemes"] = json::array({{{"kind", "implicit"}, {"name", "v1"}, {"space", "v1"}, {"tau", 0.01}, {"T", 0.05}},
                              {{"kind", "weighted"}, {"sigma", 0.5}, {"space", "fine"}, {"tau", 0.01}, {"T", 0.05}}});
  j["snapshot_times"] = {0.05};
  j["reference"]["enabled"] = false;
  const auto dir = fresh_dir("cemwave_run_spaces");
  const ExperimentSummary s = run_experiment(parse_experiment_config(j), dir);
  CHECK(s.schemes[0].dofs >= 32);
  CHECK(s.schemes[0].dofs < 64);
  CHECK(s.schemes[1].dofs == 15 * 15);
  CHECK(s.schemes[0].errors.size() == 0);
  CHECK_FALSE(std::filesystem::exists(dir / "errors_v1.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweeps record a status per point and keep going") {
  json j = small_config();
  j["schemes"] = json::array({{{"kind", "explicit"}, {"space", "fine"}, {"tau", 0.001}, {"T", 4.0}}});
  j["snapshot_times"] = json::array();
  j["reference"]["enabled"] = false;
  const ExperimentConfig c = parse_experiment_config(j);
  const auto dir = fresh_dir("cemwave_sweep_test");
  // Leapfrog on the fine grid at contrast 100 needs tau below roughly 2 h / (2 sqrt(2) * 10).
  const auto rows = sweep(c, SweepAxis::tau, {0.001, 0.01}, dir);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].status == "ok");
  CHECK(rows[1].status == "unstable");
  std::ifstream csv(dir / "sweep_tau.csv");
  std::string header, r0, r1;
  std::getline(csv, header);
  std::getline(csv, r0);
  std::getline(csv, r1);
  CHECK(header ==
        "tau,alpha,gamma,gamma_a,tau_max_split,tau_max_explicit,max_energy_drift,final_l2,"
        "final_energy,status");
  CHECK(r0.substr(r0.rfind(',') + 1) == "ok");
  CHECK(r1.substr(r1.rfind(',') + 1) == "unstable");

  CHECK(with_axis_value(c, SweepAxis::J, 4).spaces.v2_count == 4);
  CHECK(with_axis_value(c, SweepAxis::layers, 3).spaces.layers == 3);
  CHECK(*with_axis_value(c, SweepAxis::contrast, 1e6).medium.contrast == 1e6);
  CHECK_THROWS_AS(with_axis_value(c, SweepAxis::J, 1.5), ConfigError);
  CHECK_THROWS_AS(sweep_axis_from_string("omega"), ConfigError);
  CHECK(sweep_axis_from_string("layers") == SweepAxis::layers);
  CHECK_THROWS_AS(sweep(c, SweepAxis::tau, {}, dir), ConfigError);
  std::filesystem::remove_all(dir);
}
