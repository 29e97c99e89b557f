// Command-line driver: run, sweep and certify experiments from JSON configs.
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cemwave/error.hpp"
#include "cemwave/experiment.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kInstability = 3;
constexpr int kSolverFailure = 4;

fs::path output_dir(const std::string& config, const std::string& explicit_out) {
  if (!explicit_out.empty()) return explicit_out;
  const char* root = std::getenv("CEMWAVE_OUTPUT_ROOT");
  const fs::path base = root && *root ? fs::path(root) : fs::path("output");
  return base / fs::path(config).stem();
}

void print_summary(const cemwave::ExperimentSummary& s) {
  std::cout << "alpha = " << s.inputs.alpha << ", gamma = " << s.inputs.gamma
            << ", gamma_a = " << s.inputs.gamma_a << ", dim V1 = " << s.dim1
            << ", dim V2 = " << s.dim2 << "\n";
  if (s.reference_tau > 0) std::cout << "reference tau = " << s.reference_tau << "\n";
  for (const auto& r : s.schemes) {
    std::cout << r.name << ": tau = " << r.tau << ", steps = " << r.steps
              << ", energy drift = ";
    if (std::isnan(r.energy_drift)) std::cout << "n/a (forced)";
    else std::cout << r.energy_drift;
    std::cout
              << (r.certified ? "" : " (tau above certified bound)");
    if (r.errors.size())
      std::cout << ", final L2 error = " << r.errors.l2.back()
                << ", final energy error = " << r.errors.energy.back();
    std::cout << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiscale partially explicit wave solver"};
  app.require_subcommand(1);

  std::string config_path, out, axis;
  std::vector<double> values;

  auto* run_cmd = app.add_subcommand("run", "Run every scheme of a config and export artifacts");
  run_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  run_cmd->add_option("--out", out, "Output directory (default $CEMWAVE_OUTPUT_ROOT/<config name>)");

  auto* sweep_cmd = app.add_subcommand("sweep", "Repeat a run over values of one parameter");
  sweep_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  sweep_cmd->add_option("--axis", axis, "contrast, tau, J or layers")->required();
  sweep_cmd->add_option("--values", values, "Comma-separated values")->required()->delimiter(',');
  sweep_cmd->add_option("--out", out, "Output directory");

  auto* certify_cmd = app.add_subcommand("certify", "Compute stability constants and check each tau");
  certify_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();
  certify_cmd->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    const cemwave::ExperimentConfig config = cemwave::load_experiment_config(config_path);
    const fs::path dir = output_dir(config_path, out);
    if (run_cmd->parsed()) {
      print_summary(cemwave::run_experiment(config, dir));
    } else if (sweep_cmd->parsed()) {
      const auto a = cemwave::sweep_axis_from_string(axis);
      const auto rows = cemwave::sweep(config, a, values, dir);
      for (const auto& r : rows)
        std::cout << axis << " = " << r.value << ": alpha = " << r.inputs.alpha
                  << ", tau_max_split = " << r.tau_max_split << ", status = " << r.status << "\n";
    } else if (certify_cmd->parsed()) {
      std::cout << cemwave::certify_experiment(config, dir).dump(2) << "\n";
    }
    std::cout << "artifacts in " << dir.string() << "\n";
  } catch (const cemwave::InstabilityError& e) {
    std::cerr << "instability: " << e.what() << "\n";
    return kInstability;
  } catch (const cemwave::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const cemwave::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cemwave::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
