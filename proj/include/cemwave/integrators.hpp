#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cemwave/assembly.hpp"
#include "cemwave/linsolve.hpp"
#include "cemwave/media.hpp"
#include "cemwave/spaces.hpp"

namespace cemwave {

/// Mass and stiffness in the coordinates of [basis1 basis2]; the first
/// `dim1` unknowns belong to V_{H,1}.
struct BlockSystem {
  SparseOperator mass;
  SparseOperator stiffness;
  Index dim1 = 0;

  Index size() const { return mass.rows(); }
  Index dim2() const { return size() - dim1; }
  SparseOperator m11() const { return mass.block(0, 0, dim1, dim1); }
  SparseOperator m12() const { return mass.block(0, dim1, dim1, dim2()); }
  SparseOperator m22() const { return mass.block(dim1, dim1, dim2(), dim2()); }
  SparseOperator a11() const { return stiffness.block(0, 0, dim1, dim1); }
  SparseOperator a12() const { return stiffness.block(0, dim1, dim1, dim2()); }
  SparseOperator a22() const { return stiffness.block(dim1, dim1, dim2(), dim2()); }
};

/// Galerkin projection of the fine operators onto the pair.
BlockSystem project_system(const SpacePair& pair, const SparseOperator& fine_mass,
                           const SparseOperator& fine_stiffness);

/// Lumped pair: the diagonal of the surrogate mass and the projected
/// stiffness. Throws if the surrogate has off-diagonal entries above 1e-9
/// relative to its largest diagonal entry.
BlockSystem lumped_system(const SpacePair& pair, const SparseOperator& fine_stiffness);

/// Common interface of the three-layer schemes: u^{n+1} from u^{n-1}, u^n and
/// the load vector at t^n, plus the scheme's conserved energy E^{n+1/2}.
class TimeStepper {
 public:
  virtual ~TimeStepper() = default;
  virtual std::string tag() const = 0;
  virtual double tau() const = 0;
  virtual const SparseOperator& mass() const = 0;
  virtual const SparseOperator& stiffness() const = 0;
  virtual Eigen::VectorXd step(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur,
                               const Eigen::VectorXd& load) const = 0;
  virtual double energy(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const = 0;
  Index size() const { return mass().rows(); }
};

/// (M + s t^2 A) u^{n+1} = M(2u^n - u^{n-1}) - t^2 A((1-2s) u^n + s u^{n-1}) + t^2 f^n.
/// s = 1/4 is the implicit scheme, s = 0 leapfrog.
class ThreeLayerScheme final : public TimeStepper {
 public:
  ThreeLayerScheme(SparseOperator mass, SparseOperator stiffness, double tau, double sigma);

  std::string tag() const override;
  double tau() const override { return tau_; }
  double sigma() const { return sigma_; }
  const SparseOperator& mass() const override { return mass_; }
  const SparseOperator& stiffness() const override { return stiffness_; }
  Eigen::VectorXd step(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur,
                       const Eigen::VectorXd& load) const override;
  /// |du/t|_M^2 + (s - 1/4) t^2 |du/t|_A^2 + |(u^{n+1}+u^n)/2|_A^2
  double energy(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const override;

 private:
  SparseOperator mass_, stiffness_;
  double tau_, sigma_;
  SpdSolver lhs_;
};

Eigen::VectorXd step_weighted(const SparseOperator& m, const SparseOperator& a,
                              const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tau,
                              double sigma, const Eigen::VectorXd& load);
Eigen::VectorXd step_implicit(const SparseOperator& m, const SparseOperator& a,
                              const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tau,
                              const Eigen::VectorXd& load);
Eigen::VectorXd step_explicit(const SparseOperator& m, const SparseOperator& a,
                              const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tau,
                              const Eigen::VectorXd& load);

/// Two consecutive levels in block coordinates.
struct SplitState {
  Eigen::VectorXd prev;
  Eigen::VectorXd cur;
  Index dim1 = 0;

  Eigen::VectorXd u1() const { return cur.head(dim1); }
  Eigen::VectorXd u2() const { return cur.tail(cur.size() - dim1); }
  Eigen::VectorXd u1_prev() const { return prev.head(dim1); }
  Eigen::VectorXd u2_prev() const { return prev.tail(prev.size() - dim1); }
};

class AppendixEnergy;

/// Partially explicit scheme: A_11 enters implicitly as t^2/2 (u_1^{n+1} + u_1^{n-1}),
/// A_22 only explicitly, and the coupling A_21 u_1 in the V_2 rows as
/// w u_1^n + (1-w)/2 (u_1^{n+1} + u_1^{n-1}). The block system is factored
/// once; with M_12 = 0 it is block lower triangular and solved blockwise.
class SplitScheme final : public TimeStepper {
 public:
  SplitScheme(BlockSystem system, double tau, double omega);

  std::string tag() const override;
  double tau() const override { return tau_; }
  double omega() const { return omega_; }
  const BlockSystem& system() const { return system_; }
  const SparseOperator& mass() const override { return system_.mass; }
  const SparseOperator& stiffness() const override { return system_.stiffness; }
  bool blockwise() const { return blockwise_; }
  Eigen::VectorXd step(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur,
                       const Eigen::VectorXd& load) const override;
  SplitState step(const SplitState& state, const Eigen::VectorXd& load) const;
  /// splitting_energy for w = 1; for w = 0 the appendix energy when the
  /// spaces are M-orthogonal, splitting_energy otherwise.
  double energy(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const override;

 private:
  BlockSystem system_;
  double tau_, omega_;
  bool blockwise_ = false;
  SparseOperator a11_, a12_, a21_, a22_, m21_;
  SpdSolver first_;   // M11 + t^2/2 A11 (blockwise path)
  SpdSolver second_;  // M22 (blockwise path)
  std::shared_ptr<Eigen::SparseLU<SparseOperator>> coupled_;
  SparseOperator lhs_;
  std::shared_ptr<const AppendixEnergy> appendix_;
};

/// E^{n+1/2} = |u^{n+1}-u^n|_M^2 + t^2/2 sum_i (|u_i^{n+1}|_a^2 + |u_i^n|_a^2)
///           + t^2 a(u_2^{n+1}, u_1^n) + t^2 a(u_1^{n+1}, u_2^n) - t^2/2 |u_2^{n+1}-u_2^n|_a^2
double splitting_energy(const BlockSystem& system, double tau, const Eigen::VectorXd& cur,
                        const Eigen::VectorXd& next);

/// Energy of the w = 0 scheme for M-orthogonal spaces, built from the maps
///   b v_1 = M_t^{-1} M_11 v_1,  c v_2 = M_t^{-1} (t^2/2) A_12 v_2,  d v_2 = A_11^{-1} A_12 v_2
/// with M_t = M_11 + t^2/2 A_11 and the norms
///   |v_1|_s^2 = |v_1|^2 - |b v_1|_{M_t}^2,
///   |v_2|_n^2 = t^2/2 |v_2|_a^2 - |c v_2|_{M_t}^2 - |d v_2|_s^2.
class AppendixEnergy {
 public:
  AppendixEnergy(const BlockSystem& system, double tau);

  Eigen::VectorXd b(const Eigen::VectorXd& v1) const;
  Eigen::VectorXd c(const Eigen::VectorXd& v2) const;
  Eigen::VectorXd d(const Eigen::VectorXd& v2) const;
  double m_tau_norm2(const Eigen::VectorXd& v1) const;
  double s_tau_norm2(const Eigen::VectorXd& v1) const;
  double n_tau_norm2(const Eigen::VectorXd& v2) const;
  /// |v_2 - d v_2|_a^2 with v_2 and d v_2 in the full a-form.
  double a_norm2_of_difference(const Eigen::VectorXd& v2) const;
  double operator()(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const;

 private:
  double tau_;
  Index dim1_;
  SparseOperator m11_, m22_, a11_, a12_, a22_, m_tau_;
  SpdSolver m_tau_solver_, a11_solver_;
};

enum class SchemeKind { implicit, explicit_leapfrog, weighted, split_omega1, split_omega0, split_lumped };

std::string to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

struct SchemeConfig {
  SchemeKind kind = SchemeKind::implicit;
  double tau = 0.006;
  double final_time = 0.6;
  double sigma = 0.25;  // weighted only
  double omega = 1.0;   // split only; fixed to 1 for split_omega1, 0 for split_omega0
  std::optional<SourceConfig> source;
  Eigen::VectorXd u0;  // empty = zero
  Eigen::VectorXd v0;  // empty = zero

  /// round(T / tau); throws for tau <= 0 or T < tau.
  long steps() const;
};

/// Builds the stepper of `config.kind`. Split kinds use `system` as is;
/// implicit/explicit/weighted see the whole block system as one space.
std::unique_ptr<TimeStepper> make_stepper(const SchemeConfig& config, const BlockSystem& system);

struct EnergyTrace {
  std::string scheme;
  std::vector<double> values;  // E^{n+1/2}, n = 1 .. N-1
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

struct RunResult {
  EnergyTrace energy;
  Trajectory snapshots;
  Eigen::VectorXd final_state;
  long steps = 0;
};

/// Load vector at time t in the stepper's coordinates.
using LoadFunction = std::function<Eigen::VectorXd(double)>;

struct RunOptions {
  /// Every `snapshot_every`-th level (0 = none) plus the listed times, which
  /// must be integer multiples of tau.
  long snapshot_every = 0;
  std::vector<double> snapshot_times;
  bool record_energy = true;
};

/// Marches N = round(T/tau) levels: u^1 by the Taylor step
/// u^1 = u^0 + t v^0 + t^2/2 M^{-1}(f^0 - A u^0), then N-1 scheme steps.
/// A non-finite state raises InstabilityError carrying the level index.
RunResult run(const TimeStepper& stepper, const SchemeConfig& config, const LoadFunction& load,
              const RunOptions& options = {});

/// Level index of time t on a grid of step tau; throws ConfigError when t is
/// not a multiple of tau to 1e-9 relative.
long aligned_step(double t, double tau);

}  // namespace cemwave
