#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cemwave/assembly.hpp"
#include "cemwave/integrators.hpp"

namespace cemwave {

enum class AlphaMethod { automatic, dense, lanczos };

/// sqrt of the largest eigenvalue of A v = lambda M v (0 for an empty space).
/// `automatic` uses a dense eigensolve up to 1500 unknowns and Lanczos above.
double compute_alpha(const SparseOperator& a, const SparseOperator& m,
                     AlphaMethod method = AlphaMethod::automatic);

struct Gammas {
  double gamma = 0.0;    // L2 cosine between V_{H,1} and V_{H,2}
  double gamma_a = 0.0;  // a-cosine
};

/// Largest singular value of L_1^{-1} X_12 L_2^{-T} with X_ii = L_i L_i^T,
/// for X = M and X = A.
Gammas compute_gammas(const BlockSystem& system);

enum class CertifyMode {
  cfl_full,  ///< tau^2 <= 4 / alpha_full^2 for leapfrog on the whole space
  ortho,     ///< tau^2 <= 2 / alpha^2
  nonortho,  ///< tau^2 <= 2 (1 - gamma^2) / alpha^2
};

std::string to_string(CertifyMode mode);
CertifyMode certify_mode_from_string(const std::string& name);

struct StabilityInputs {
  double alpha = 0.0;       // on V_{H,2}
  double alpha_full = 0.0;  // on the space the explicit scheme runs in
  double gamma = 0.0;
  double gamma_a = 0.0;
};

struct StabilityReport {
  StabilityInputs inputs;
  double tau = 0.0;
  CertifyMode mode = CertifyMode::nonortho;
  double tau_max_explicit = 0.0;
  double tau_max_split_ortho = 0.0;
  double tau_max_split_nonortho = 0.0;
  /// Same bound with (1 - gamma) in place of (1 - gamma^2), reported only.
  double tau_max_split_nonortho_linear = 0.0;
  bool pass = false;

  double tau_max() const;
};

StabilityReport certify(double tau, const StabilityInputs& inputs, CertifyMode mode);

/// alpha on the V_{H,2} block, alpha_full on the whole block system, gammas.
StabilityInputs stability_inputs(const BlockSystem& system,
                                 AlphaMethod method = AlphaMethod::automatic);

nlohmann::json to_json(const StabilityReport& report);
void write_report(const StabilityReport& report, const std::filesystem::path& path);

}  // namespace cemwave
