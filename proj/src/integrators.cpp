#include "cemwave/integrators.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "cemwave/error.hpp"

namespace cemwave {

namespace {

SparseOperator symmetrized(const SparseOperator& x) {
  SparseOperator t = x.transpose();
  return 0.5 * (x + t);
}

double max_abs(const SparseOperator& x) {
  double m = 0.0;
  for (Index k = 0; k < x.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(x, k); it; ++it) m = std::max(m, std::abs(it.value()));
  return m;
}

double max_abs_diagonal(const SparseOperator& x) {
  return x.rows() ? x.diagonal().cwiseAbs().maxCoeff() : 0.0;
}

// M_12 below round-off relative to the diagonal of M.
bool negligible_coupling(const BlockSystem& s, double rel) {
  if (s.dim1 == 0 || s.dim2() == 0) return true;
  return max_abs(s.m12()) <= rel * max_abs_diagonal(s.mass);
}

double quad(const SparseOperator& a, const Eigen::VectorXd& x) { return x.dot(a * x); }

std::string format_double(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

BlockSystem project_system(const SpacePair& pair, const SparseOperator& fine_mass,
                           const SparseOperator& fine_stiffness) {
  const SparseOperator phi = pair.combined();
  if (phi.rows() != fine_mass.rows() || phi.rows() != fine_stiffness.rows())
    throw ConfigError("project_system: basis and fine operators differ in size");
  const SparseOperator phi_t = phi.transpose();
  BlockSystem s;
  s.mass = symmetrized(SparseOperator(phi_t * (fine_mass * phi)));
  s.stiffness = symmetrized(SparseOperator(phi_t * (fine_stiffness * phi)));
  s.dim1 = pair.dim1();
  return s;
}

BlockSystem lumped_system(const SpacePair& pair, const SparseOperator& fine_stiffness) {
  if (!pair.surrogate_mass) throw ConfigError("lumped_system: space pair has no surrogate mass");
  const SparseOperator& sm = *pair.surrogate_mass;
  const double diag = max_abs_diagonal(sm);
  double off = 0.0;
  for (Index k = 0; k < sm.outerSize(); ++k)
    for (SparseOperator::InnerIterator it(sm, k); it; ++it)
      if (it.row() != it.col()) off = std::max(off, std::abs(it.value()));
  if (off > 1e-9 * diag)
    throw SolverError("lumped_system: surrogate mass is not diagonal (largest off-diagonal " +
                      format_double(off) + ")");
  BlockSystem s;
  const Eigen::VectorXd d = sm.diagonal();
  s.mass.resize(d.size(), d.size());
  std::vector<Eigen::Triplet<double>> t;
  for (Index i = 0; i < d.size(); ++i) t.emplace_back(i, i, d(i));
  s.mass.setFromTriplets(t.begin(), t.end());
  const SparseOperator phi = pair.combined();
  s.stiffness = symmetrized(SparseOperator(SparseOperator(phi.transpose()) * (fine_stiffness * phi)));
  s.dim1 = pair.dim1();
  return s;
}

ThreeLayerScheme::ThreeLayerScheme(SparseOperator mass, SparseOperator stiffness, double tau,
                                   double sigma)
    : mass_(std::move(mass)), stiffness_(std::move(stiffness)), tau_(tau), sigma_(sigma) {
  if (!(tau_ > 0.0)) throw ConfigError("time step must be positive");
  if (!(sigma_ >= 0.0)) throw ConfigError("weight sigma must be >= 0");
  if (mass_.rows() != stiffness_.rows()) throw ConfigError("mass and stiffness differ in size");
  if (sigma_ == 0.0) {
    lhs_ = SpdSolver(mass_);
  } else {
    const SparseOperator lhs = mass_ + (sigma_ * tau_ * tau_) * stiffness_;
    lhs_ = SpdSolver(lhs);
  }
}

std::string ThreeLayerScheme::tag() const {
  if (sigma_ == 0.25) return "implicit";
  if (sigma_ == 0.0) return "explicit";
  return "weighted(" + format_double(sigma_) + ")";
}

Eigen::VectorXd ThreeLayerScheme::step(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur,
                                       const Eigen::VectorXd& load) const {
  const double t2 = tau_ * tau_;
  Eigen::VectorXd rhs = mass_ * (2.0 * cur - prev) -
                        t2 * (stiffness_ * ((1.0 - 2.0 * sigma_) * cur + sigma_ * prev));
  if (load.size()) rhs += t2 * load;
  return lhs_.solve(rhs);
}

double ThreeLayerScheme::energy(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const {
  const Eigen::VectorXd rate = (next - cur) / tau_;
  const Eigen::VectorXd mid = 0.5 * (next + cur);
  return quad(mass_, rate) + (sigma_ - 0.25) * tau_ * tau_ * quad(stiffness_, rate) +
         quad(stiffness_, mid);
}

Eigen::VectorXd step_weighted(const SparseOperator& m, const SparseOperator& a,
                              const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tau,
                              double sigma, const Eigen::VectorXd& load) {
  return ThreeLayerScheme(m, a, tau, sigma).step(prev, cur, load);
}

Eigen::VectorXd step_implicit(const SparseOperator& m, const SparseOperator& a,
                              const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tau,
                              const Eigen::VectorXd& load) {
  return step_weighted(m, a, prev, cur, tau, 0.25, load);
}

Eigen::VectorXd step_explicit(const SparseOperator& m, const SparseOperator& a,
                              const Eigen::VectorXd& prev, const Eigen::VectorXd& cur, double tau,
                              const Eigen::VectorXd& load) {
  return step_weighted(m, a, prev, cur, tau, 0.0, load);
}

SplitScheme::SplitScheme(BlockSystem system, double tau, double omega)
    : system_(std::move(system)), tau_(tau), omega_(omega) {
  if (!(tau_ > 0.0)) throw ConfigError("time step must be positive");
  if (!(omega_ >= 0.0 && omega_ <= 1.0)) throw ConfigError("omega must lie in [0, 1]");
  const Index d1 = system_.dim1;
  const Index d2 = system_.dim2();
  if (d1 < 0 || d2 < 0) throw ConfigError("split scheme: dim1 exceeds the system size");
  const double half_t2 = 0.5 * tau_ * tau_;
  a11_ = system_.a11();
  a12_ = system_.a12();
  a21_ = SparseOperator(a12_.transpose());
  a22_ = system_.a22();
  m21_ = SparseOperator(system_.m12().transpose());

  blockwise_ = negligible_coupling(system_, 1e-14);
  if (blockwise_) {
    if (d1 > 0) first_ = SpdSolver(SparseOperator(system_.m11() + half_t2 * a11_));
    if (d2 > 0) second_ = SpdSolver(system_.m22());
  } else {
    std::vector<Eigen::Triplet<double>> t;
    auto add = [&](const SparseOperator& x, Index r0, Index c0, double f) {
      for (Index k = 0; k < x.outerSize(); ++k)
        for (SparseOperator::InnerIterator it(x, k); it; ++it)
          t.emplace_back(r0 + it.row(), c0 + it.col(), f * it.value());
    };
    add(system_.m11(), 0, 0, 1.0);
    add(a11_, 0, 0, half_t2);
    add(system_.m12(), 0, d1, 1.0);
    add(m21_, d1, 0, 1.0);
    add(a21_, d1, 0, (1.0 - omega_) * half_t2);
    add(system_.m22(), d1, d1, 1.0);
    lhs_.resize(d1 + d2, d1 + d2);
    lhs_.setFromTriplets(t.begin(), t.end());
    coupled_ = std::make_shared<Eigen::SparseLU<SparseOperator>>();
    coupled_->compute(lhs_);
    if (coupled_->info() != Eigen::Success) {
      const Eigen::MatrixXd g(system_.mass);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g, Eigen::EigenvaluesOnly);
      const double lo = eig.eigenvalues().minCoeff();
      throw SolverError("split scheme: block system is singular; Gram condition number " +
                        format_double(lo > 0.0 ? eig.eigenvalues().maxCoeff() / lo : INFINITY));
    }
  }
  if (omega_ == 0.0 && negligible_coupling(system_, 1e-10) && d1 > 0)
    appendix_ = std::make_shared<const AppendixEnergy>(system_, tau_);
}

std::string SplitScheme::tag() const {
  if (omega_ == 1.0) return "split_omega1";
  if (omega_ == 0.0) return "split_omega0";
  return "split_omega(" + format_double(omega_) + ")";
}

Eigen::VectorXd SplitScheme::step(const Eigen::VectorXd& prev, const Eigen::VectorXd& cur,
                                  const Eigen::VectorXd& load) const {
  const Index d1 = system_.dim1;
  const Index d2 = system_.dim2();
  const double t2 = tau_ * tau_;
  const Eigen::VectorXd u1p = prev.head(d1), u2p = prev.tail(d2);
  const Eigen::VectorXd u1 = cur.head(d1), u2 = cur.tail(d2);
  const Eigen::VectorXd inertia = system_.mass * (2.0 * cur - prev);

  Eigen::VectorXd r1 = inertia.head(d1) - (0.5 * t2) * (a11_ * u1p) - t2 * (a12_ * u2);
  Eigen::VectorXd r2 =
      inertia.tail(d2) -
      t2 * (omega_ * (a21_ * u1) + (0.5 * (1.0 - omega_)) * (a21_ * u1p) + a22_ * u2);
  if (load.size()) {
    r1 += t2 * load.head(d1);
    r2 += t2 * load.tail(d2);
  }

  Eigen::VectorXd next(d1 + d2);
  if (blockwise_) {
    if (d1 > 0) next.head(d1) = first_.solve(r1);
    if (d2 > 0) {
      const Eigen::VectorXd v1 = next.head(d1);
      Eigen::VectorXd rhs2 = r2 - m21_ * v1;
      if (omega_ != 1.0) rhs2 -= ((1.0 - omega_) * 0.5 * t2) * (a21_ * v1);
      next.tail(d2) = second_.solve(rhs2);
    }
    return next;
  }
  Eigen::VectorXd rhs(d1 + d2);
  rhs << r1, r2;
  next = coupled_->solve(rhs);
  const double res = (lhs_ * next - rhs).norm();
  if (!(res <= 1e-8 * std::max(rhs.norm(), 1e-300)))
    throw SolverError("split scheme: block solve residual " + format_double(res));
  return next;
}

SplitState SplitScheme::step(const SplitState& state, const Eigen::VectorXd& load) const {
  SplitState out;
  out.prev = state.cur;
  out.cur = step(state.prev, state.cur, load);
  out.dim1 = state.dim1;
  return out;
}

double SplitScheme::energy(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const {
  if (appendix_) return (*appendix_)(cur, next);
  return splitting_energy(system_, tau_, cur, next);
}

double splitting_energy(const BlockSystem& s, double tau, const Eigen::VectorXd& cur,
                        const Eigen::VectorXd& next) {
  const Index d1 = s.dim1;
  const Index d2 = s.dim2();
  const double t2 = tau * tau;
  const SparseOperator a11 = s.a11(), a12 = s.a12(), a22 = s.a22();
  const Eigen::VectorXd u1 = cur.head(d1), u2 = cur.tail(d2);
  const Eigen::VectorXd v1 = next.head(d1), v2 = next.tail(d2);
  const Eigen::VectorXd du2 = v2 - u2;
  return quad(s.mass, next - cur) +
         0.5 * t2 * (quad(a11, v1) + quad(a11, u1) + quad(a22, v2) + quad(a22, u2)) +
         t2 * (u1.dot(a12 * v2) + v1.dot(a12 * u2)) - 0.5 * t2 * quad(a22, du2);
}

AppendixEnergy::AppendixEnergy(const BlockSystem& system, double tau)
    : tau_(tau), dim1_(system.dim1) {
  if (!negligible_coupling(system, 1e-10))
    throw ConfigError("appendix energy requires M-orthogonal spaces (largest |M12| = " +
                      format_double(max_abs(system.m12())) + ")");
  m11_ = system.m11();
  m22_ = system.m22();
  a11_ = system.a11();
  a12_ = system.a12();
  a22_ = system.a22();
  m_tau_ = m11_ + (0.5 * tau_ * tau_) * a11_;
  if (dim1_ > 0) {
    m_tau_solver_ = SpdSolver(m_tau_);
    a11_solver_ = SpdSolver(a11_);
  }
}

Eigen::VectorXd AppendixEnergy::b(const Eigen::VectorXd& v1) const {
  if (dim1_ == 0) return Eigen::VectorXd();
  return m_tau_solver_.solve(Eigen::VectorXd(m11_ * v1));
}

Eigen::VectorXd AppendixEnergy::c(const Eigen::VectorXd& v2) const {
  if (dim1_ == 0) return Eigen::VectorXd();
  return m_tau_solver_.solve(Eigen::VectorXd((0.5 * tau_ * tau_) * (a12_ * v2)));
}

Eigen::VectorXd AppendixEnergy::d(const Eigen::VectorXd& v2) const {
  if (dim1_ == 0) return Eigen::VectorXd();
  return a11_solver_.solve(Eigen::VectorXd(a12_ * v2));
}

double AppendixEnergy::m_tau_norm2(const Eigen::VectorXd& v1) const { return quad(m_tau_, v1); }

double AppendixEnergy::s_tau_norm2(const Eigen::VectorXd& v1) const {
  return quad(m11_, v1) - m_tau_norm2(b(v1));
}

double AppendixEnergy::n_tau_norm2(const Eigen::VectorXd& v2) const {
  return 0.5 * tau_ * tau_ * quad(a22_, v2) - m_tau_norm2(c(v2)) - s_tau_norm2(d(v2));
}

double AppendixEnergy::a_norm2_of_difference(const Eigen::VectorXd& v2) const {
  const Eigen::VectorXd dv = d(v2);
  return quad(a22_, v2) - 2.0 * dv.dot(a12_ * v2) + quad(a11_, dv);
}

double AppendixEnergy::operator()(const Eigen::VectorXd& cur, const Eigen::VectorXd& next) const {
  const Index d2 = cur.size() - dim1_;
  const Eigen::VectorXd u1 = cur.head(dim1_), u2 = cur.tail(d2);
  const Eigen::VectorXd v1 = next.head(dim1_), v2 = next.tail(d2);
  const Eigen::VectorXd du2 = v2 - u2;
  const Eigen::VectorXd jump = (b(v1) - c(v2)) - (b(u1) - c(u2));
  return m_tau_norm2(jump) + quad(m22_, du2) - 0.5 * tau_ * tau_ * quad(a22_, du2) +
         s_tau_norm2(v1 + d(v2)) + n_tau_norm2(v2) + s_tau_norm2(u1 + d(u2)) + n_tau_norm2(u2);
}

std::string to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::implicit: return "implicit";
    case SchemeKind::explicit_leapfrog: return "explicit";
    case SchemeKind::weighted: return "weighted";
    case SchemeKind::split_omega1: return "split_omega1";
    case SchemeKind::split_omega0: return "split_omega0";
    case SchemeKind::split_lumped: return "split_lumped";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  for (SchemeKind k : {SchemeKind::implicit, SchemeKind::explicit_leapfrog, SchemeKind::weighted,
                       SchemeKind::split_omega1, SchemeKind::split_omega0,
                       SchemeKind::split_lumped})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown scheme '" + name + "'");
}

long SchemeConfig::steps() const {
  if (!(tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(final_time > 0.0)) throw ConfigError("final time must be positive");
  const long n = std::lround(final_time / tau);
  if (n < 1) throw ConfigError("final time is shorter than one time step");
  return n;
}

long aligned_step(double t, double tau) {
  const long k = std::lround(t / tau);
  if (std::abs(static_cast<double>(k) * tau - t) > 1e-9 * std::max(std::abs(t), tau))
    throw ConfigError("time " + format_double(t) + " is not a multiple of tau = " +
                      format_double(tau));
  return k;
}

std::unique_ptr<TimeStepper> make_stepper(const SchemeConfig& config, const BlockSystem& system) {
  switch (config.kind) {
    case SchemeKind::implicit:
      return std::make_unique<ThreeLayerScheme>(system.mass, system.stiffness, config.tau, 0.25);
    case SchemeKind::explicit_leapfrog:
      return std::make_unique<ThreeLayerScheme>(system.mass, system.stiffness, config.tau, 0.0);
    case SchemeKind::weighted:
      return std::make_unique<ThreeLayerScheme>(system.mass, system.stiffness, config.tau,
                                                config.sigma);
    case SchemeKind::split_omega1:
      return std::make_unique<SplitScheme>(system, config.tau, 1.0);
    case SchemeKind::split_omega0:
      return std::make_unique<SplitScheme>(system, config.tau, 0.0);
    case SchemeKind::split_lumped:
      return std::make_unique<SplitScheme>(system, config.tau, config.omega);
  }
  throw ConfigError("unknown scheme kind");
}

RunResult run(const TimeStepper& stepper, const SchemeConfig& config, const LoadFunction& load,
              const RunOptions& options) {
  const long n_steps = config.steps();
  const double tau = stepper.tau();
  const Index n = stepper.size();
  auto initial = [&](const Eigen::VectorXd& v, const char* name) {
    if (v.size() == 0) return Eigen::VectorXd(Eigen::VectorXd::Zero(n));
    if (v.size() != n)
      throw ConfigError(std::string("initial ") + name + " has " + std::to_string(v.size()) +
                        " entries, the scheme has " + std::to_string(n) + " unknowns");
    return v;
  };
  auto load_at = [&](double t) -> Eigen::VectorXd {
    if (!load) return Eigen::VectorXd::Zero(n);
    return load(t);
  };

  std::set<long> wanted;
  for (double t : options.snapshot_times) {
    const long k = aligned_step(t, tau);
    if (k < 0 || k > n_steps)
      throw ConfigError("snapshot time " + format_double(t) + " lies outside [0, T]");
    wanted.insert(k);
  }
  auto record = [&](RunResult& r, long level, const Eigen::VectorXd& u) {
    const bool every = options.snapshot_every > 0 && level % options.snapshot_every == 0;
    if (every || wanted.count(level)) {
      r.snapshots.times.push_back(static_cast<double>(level) * tau);
      r.snapshots.states.push_back(u);
    }
  };
  auto check = [&](const Eigen::VectorXd& u, long level) {
    if (!u.allFinite())
      throw InstabilityError(stepper.tag() + ": non-finite solution at step " +
                                 std::to_string(level),
                             level);
  };

  RunResult result;
  result.energy.scheme = stepper.tag();
  Eigen::VectorXd prev = initial(config.u0, "u0");
  const Eigen::VectorXd v0 = initial(config.v0, "v0");
  record(result, 0, prev);

  const SpdSolver mass_solver(stepper.mass());
  const Eigen::VectorXd accel = mass_solver.solve(Eigen::VectorXd(load_at(0.0) - stepper.stiffness() * prev));
  Eigen::VectorXd cur = prev + tau * v0 + 0.5 * tau * tau * accel;
  check(cur, 1);
  record(result, 1, cur);

  if (options.record_energy) result.energy.values.reserve(static_cast<std::size_t>(n_steps));
  for (long level = 1; level < n_steps; ++level) {
    Eigen::VectorXd next = stepper.step(prev, cur, load_at(static_cast<double>(level) * tau));
    check(next, level + 1);
    if (options.record_energy) {
      const double e = stepper.energy(cur, next);
      if (!std::isfinite(e))
        throw InstabilityError(stepper.tag() + ": non-finite energy at step " +
                                   std::to_string(level + 1),
                               level + 1);
      result.energy.values.push_back(e);
    }
    record(result, level + 1, next);
    prev = std::move(cur);
    cur = std::move(next);
  }
  result.final_state = cur;
  result.steps = n_steps;
  return result;
}

}  // namespace cemwave
