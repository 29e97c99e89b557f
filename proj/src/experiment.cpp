#include "cemwave/experiment.hpp"

#include <omp.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>

#include "cemwave/assembly.hpp"
#include "cemwave/diagnostics.hpp"
#include "cemwave/error.hpp"

namespace cemwave {

namespace {

using nlohmann::json;

// ---- validation helpers -------------------------------------------------

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

void reject_unknown(const json& j, const std::string& path, std::set<std::string> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(join(path, it.key()) + ": unknown field");
}

double get_number(const json& j, const std::string& path, const std::string& key, double def) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key) + ": expected a number");
  return v.get<double>();
}

double get_positive(const json& j, const std::string& path, const std::string& key, double def) {
  const double v = get_number(j, path, key, def);
  if (!(v > 0.0)) throw ConfigError(join(path, key) + ": must be positive");
  return v;
}

Index get_index(const json& j, const std::string& path, const std::string& key, Index def,
                Index min_value) {
  if (!j.contains(key)) return def;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(join(path, key) + ": expected an integer");
  const Index x = v.get<Index>();
  if (x < min_value)
    throw ConfigError(join(path, key) + ": must be >= " + std::to_string(min_value));
  return x;
}

bool get_bool(const json& j, const std::string& path, const std::string& key, bool def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) throw ConfigError(join(path, key) + ": expected true or false");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const std::string& path, const std::string& key,
                       const std::string& def) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) throw ConfigError(join(path, key) + ": expected a string");
  return j.at(key).get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

bool is_split(SchemeKind k) {
  return k == SchemeKind::split_omega1 || k == SchemeKind::split_omega0 ||
         k == SchemeKind::split_lumped;
}

std::string time_label(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", t);
  return buf;
}

json number(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? json("inf") : json(nullptr);
}

// ---- experiment state ---------------------------------------------------

struct SchemeSetup {
  const SchemeEntry* entry = nullptr;
  BlockSystem system;
  SparseOperator basis;  // prolongation; empty for the fine space
  bool fine = false;
  bool lumped = false;
  std::string mode;
  double tau_max = 0.0;
  bool pass = true;
  std::optional<StabilityReport> report;
};

struct Context {
  TwoLevelMesh mesh;
  CoefficientField kappa;
  SparseOperator mass, stiffness;
  Exec exec = Exec::serial;
  std::optional<SpacePair> pair;
  std::optional<BlockSystem> system;
  std::optional<SpacePair> lumped;
  StabilityInputs inputs;
  std::vector<SchemeSetup> setups;
};

double alpha_full_of(const BlockSystem& s) { return compute_alpha(s.stiffness, s.mass); }

BlockSystem fine_system(const Context& c) { return BlockSystem{c.mass, c.stiffness, c.mass.rows()}; }

void certify_setup(SchemeSetup& s, const ExperimentConfig& config, const StabilityInputs& inputs) {
  const SchemeEntry& e = *s.entry;
  const double inf = std::numeric_limits<double>::infinity();
  if (is_split(e.kind)) {
    StabilityInputs in = inputs;
    if (s.lumped) in = stability_inputs(s.system);
    s.report = certify(e.tau, in, config.split_certification);
    s.mode = to_string(config.split_certification);
    s.tau_max = s.report->tau_max();
    s.pass = s.report->pass;
    return;
  }
  const double sigma = e.kind == SchemeKind::implicit            ? 0.25
                       : e.kind == SchemeKind::explicit_leapfrog ? 0.0
                                                                 : e.sigma;
  if (sigma >= 0.25) {
    s.mode = "unconditional";
    s.tau_max = inf;
    s.pass = true;
    return;
  }
  const double alpha_full = s.fine ? compute_alpha(s.system.stiffness, s.system.mass)
                                   : alpha_full_of(s.system);
  s.mode = "cfl_full";
  s.tau_max = alpha_full > 0.0 ? 2.0 / (alpha_full * std::sqrt(1.0 - 4.0 * sigma)) : inf;
  s.pass = e.tau <= s.tau_max;
}

Context prepare(const ExperimentConfig& config) {
  if (config.threads > 0) omp_set_num_threads(config.threads);
  Context c{TwoLevelMesh(config.n_fine, config.n_coarse), build_medium(config), {}, {}, {}, {}, {}, {}, {}, {}};
  c.exec = config.parallel ? Exec::parallel : Exec::serial;
  const LocalRegion global = c.mesh.global_region();
  c.mass = assemble_mass(c.mesh, global, c.exec);
  c.stiffness = assemble_stiffness(c.mesh, c.kappa, global, c.exec);

  bool need_pair = false, need_lumped = false;
  for (const auto& e : config.schemes) {
    if (e.kind == SchemeKind::split_lumped) need_lumped = true;
    else if (is_split(e.kind) || e.space != SchemeSpace::fine) need_pair = true;
  }
  if (need_pair) {
    c.pair = build_space_pair(c.mesh, c.kappa, config.spaces, c.exec);
    if (config.orthogonalize) c.pair = orthogonalize(*c.pair, c.mass);
    c.system = project_system(*c.pair, c.mass, c.stiffness);
    c.inputs = stability_inputs(*c.system);
  }
  if (need_lumped)
    c.lumped = build_lumped_pair(c.mesh, c.kappa, config.lumping.threshold, config.lumping.count,
                                 config.spaces.layers, c.exec);

  for (const auto& e : config.schemes) {
    SchemeSetup s;
    s.entry = &e;
    if (e.kind == SchemeKind::split_lumped) {
      s.system = lumped_system(*c.lumped, c.stiffness);
      s.basis = c.lumped->combined();
      s.lumped = true;
    } else if (is_split(e.kind) || e.space == SchemeSpace::full) {
      s.system = *c.system;
      s.basis = c.pair->combined();
    } else if (e.space == SchemeSpace::v1) {
      SpacePair v1 = *c.pair;
      v1.basis2 = SparseOperator(c.mesh.num_dofs(), 0);
      s.system = project_system(v1, c.mass, c.stiffness);
      s.basis = v1.basis1;
    } else {
      s.system = fine_system(c);
      s.fine = true;
    }
    c.setups.push_back(std::move(s));
  }
  if (!need_pair && need_lumped) c.inputs = stability_inputs(c.setups.front().system);
  for (auto& s : c.setups) certify_setup(s, config, c.inputs);
  return c;
}

json stability_json(const Context& c, const ExperimentConfig& config, double reference_tau) {
  json schemes = json::array();
  for (const auto& s : c.setups) {
    json item = {{"name", s.entry->name},
                 {"kind", to_string(s.entry->kind)},
                 {"tau", s.entry->tau},
                 {"mode", s.mode},
                 {"tau_max", number(s.tau_max)},
                 {"pass", s.pass}};
    if (s.report) item["report"] = to_json(*s.report);
    schemes.push_back(item);
  }
  json out = {{"alpha", number(c.inputs.alpha)},
              {"alpha_full", number(c.inputs.alpha_full)},
              {"gamma", number(c.inputs.gamma)},
              {"gamma_a", number(c.inputs.gamma_a)},
              {"certification", to_string(config.split_certification)},
              {"schemes", schemes}};
  if (c.pair) {
    out["dim1"] = c.pair->dim1();
    out["dim2"] = c.pair->dim2();
  }
  if (c.lumped) {
    out["lumped_dim1"] = c.lumped->dim1();
    out["lumped_dim2"] = c.lumped->dim2();
    out["lumped_dropped_indicators"] = c.lumped->dropped_indicators;
  }
  if (reference_tau > 0.0) out["reference_tau"] = reference_tau;
  return out;
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

LoadFunction make_load(const Context& c, const ExperimentConfig& config, const SchemeSetup& s) {
  if (!config.source) return {};
  const SourceConfig src = *config.source;
  const CellBox footprint = source_footprint(src, c.mesh);
  Eigen::VectorXd shape;
  if (s.fine) {
    shape = source_load(c.mesh, footprint);
  } else if (s.lumped) {
    shape = lumped_source_load(c.mesh, *c.lumped, footprint);
  } else {
    shape = SparseOperator(s.basis.transpose()) * source_load(c.mesh, footprint);
  }
  const double h = c.mesh.h();
  return [shape, src, h](double t) -> Eigen::VectorXd {
    return source_time_factor(t, src.f0, h) * shape;
  };
}

std::unique_ptr<TimeStepper> stepper_for(const SchemeSetup& s) {
  const SchemeEntry& e = *s.entry;
  SchemeConfig sc;
  sc.kind = e.kind;
  sc.tau = e.tau;
  sc.final_time = e.final_time;
  sc.sigma = e.sigma;
  sc.omega = e.omega;
  return make_stepper(sc, s.system);
}

SchemeConfig scheme_config(const SchemeEntry& e, const ExperimentConfig& config) {
  SchemeConfig sc;
  sc.kind = e.kind;
  sc.tau = e.tau;
  sc.final_time = e.final_time;
  sc.sigma = e.sigma;
  sc.omega = e.omega;
  sc.source = config.source;
  return sc;
}

void export_snapshots(const TwoLevelMesh& mesh, const Trajectory& fine_traj,
                      const std::vector<double>& times, double tau, const std::string& name,
                      const std::filesystem::path& out_dir) {
  std::map<long, std::size_t> by_level;
  for (std::size_t k = 0; k < fine_traj.times.size(); ++k)
    by_level[std::lround(fine_traj.times[k] / tau)] = k;
  for (double t : times) {
    const auto it = by_level.find(std::lround(t / tau));
    if (it == by_level.end()) continue;
    const Eigen::MatrixXd grid = nodal_grid(mesh, fine_traj.states[it->second]);
    const std::string stem = "snapshot_" + name + "_t" + time_label(t);
    export_csv(grid, out_dir / (stem + ".csv"));
    write_pgm(grid, out_dir / (stem + ".pgm"));
  }
}

void run_into(const ExperimentConfig& config, const std::filesystem::path& out_dir,
              ExperimentSummary& summary) {
  std::filesystem::create_directories(out_dir);
  Context c = prepare(config);
  summary.inputs = c.inputs;
  if (c.pair) {
    summary.dim1 = c.pair->dim1();
    summary.dim2 = c.pair->dim2();
  } else if (c.lumped) {
    summary.dim1 = c.lumped->dim1();
    summary.dim2 = c.lumped->dim2();
  }

  // Reference: fine leapfrog on the union of all scheme time grids.
  double ref_tau = 0.0;
  std::map<long, Eigen::VectorXd> ref_states;
  if (config.reference.enabled) {
    ref_tau = config.reference.tau;
    if (config.reference.auto_refine) {
      const double tau_cfl = 2.0 / compute_alpha(c.stiffness, c.mass, AlphaMethod::lanczos);
      const double m = std::max(1.0, std::ceil(ref_tau / (0.95 * tau_cfl) - 1e-12));
      ref_tau /= m;
    }
  }
  write_json(stability_json(c, config, ref_tau), out_dir / "stability.json");
  for (const auto& s : c.setups)
    if (!s.pass)
      std::cerr << "warning: scheme '" << s.entry->name << "' tau = " << s.entry->tau
                << " exceeds the certified bound " << s.tau_max << " (" << s.mode << ")\n";

  if (config.reference.enabled) {
    double t_end = 0.0;
    std::set<long> levels;
    for (const auto& e : config.schemes) {
      t_end = std::max(t_end, e.final_time);
      const long ratio = aligned_step(e.tau, ref_tau);
      const long n = std::lround(e.final_time / e.tau);
      for (long k = 0; k <= n; ++k) levels.insert(k * ratio);
    }
    SchemeEntry ref_entry;
    ref_entry.name = "reference";
    ref_entry.kind = SchemeKind::explicit_leapfrog;
    ref_entry.tau = ref_tau;
    ref_entry.final_time = static_cast<double>(*levels.rbegin()) * ref_tau;
    SchemeSetup ref;
    ref.entry = &ref_entry;
    ref.system = fine_system(c);
    ref.fine = true;
    const ThreeLayerScheme stepper(c.mass, c.stiffness, ref_tau, 0.0);
    RunOptions opts;
    for (long l : levels) opts.snapshot_times.push_back(static_cast<double>(l) * ref_tau);
    const RunResult r =
        run(stepper, scheme_config(ref_entry, config), make_load(c, config, ref), opts);
    for (std::size_t k = 0; k < r.snapshots.times.size(); ++k)
      ref_states[std::lround(r.snapshots.times[k] / ref_tau)] = r.snapshots.states[k];
    export_csv(r.energy, out_dir / "energy_reference.csv");
    export_snapshots(c.mesh, r.snapshots, config.snapshot_times, ref_tau, "reference", out_dir);
  }
  summary.reference_tau = ref_tau;

  json schemes = json::array();
  for (const auto& s : c.setups) {
    const SchemeEntry& e = *s.entry;
    SchemeSummary sum;
    sum.name = e.name;
    sum.kind = to_string(e.kind);
    sum.tau = e.tau;
    sum.dofs = s.system.size();
    sum.certified = s.pass;
    sum.tau_max = s.tau_max;

    const auto stepper = stepper_for(s);
    RunOptions opts;
    opts.snapshot_every = 1;
    const RunResult r = run(*stepper, scheme_config(e, config), make_load(c, config, s), opts);
    sum.steps = r.steps;
    // Drift of the discrete energy only means something for an unforced run.
    sum.energy_drift = config.source ? std::numeric_limits<double>::quiet_NaN() : relative_drift(r.energy);
    export_csv(r.energy, out_dir / ("energy_" + e.name + ".csv"));

    const Trajectory fine_traj = s.fine ? r.snapshots : prolongate(s.basis, r.snapshots);
    export_snapshots(c.mesh, fine_traj, config.snapshot_times, e.tau, e.name, out_dir);
    if (config.reference.enabled) {
      Trajectory ref;
      const long ratio = aligned_step(e.tau, ref_tau);
      for (double t : fine_traj.times) {
        ref.times.push_back(t);
        ref.states.push_back(ref_states.at(std::lround(t / e.tau) * ratio));
      }
      sum.errors = compare(fine_traj, ref, c.mass, c.stiffness);
      export_csv(sum.errors, out_dir / ("errors_" + e.name + ".csv"));
      export_csv(window(sum.errors, config.window_start, config.window_end),
                 out_dir / ("errors_" + e.name + "_window.csv"));
    }
    json item = {{"name", sum.name},      {"kind", sum.kind},
                 {"tau", sum.tau},        {"steps", sum.steps},
                 {"dofs", sum.dofs},      {"energy_drift", number(sum.energy_drift)},
                 {"certified", sum.certified}, {"tau_max", number(sum.tau_max)}};
    if (sum.errors.size()) {
      item["final_l2_error"] = number(sum.errors.l2.back());
      item["final_energy_error"] = number(sum.errors.energy.back());
    }
    schemes.push_back(item);
    summary.schemes.push_back(std::move(sum));
  }
  write_json({{"reference_tau", ref_tau}, {"schemes", schemes}}, out_dir / "summary.json");
}

}  // namespace

// ---- config parsing -----------------------------------------------------

ExperimentConfig parse_experiment_config(const json& j, const std::filesystem::path& base_dir) {
  expect_object(j, "config");
  reject_unknown(j, "",
                 {"mesh", "medium", "source", "spaces", "lumping", "schemes", "reference",
                  "snapshot_times", "error_window", "certification", "parallel", "threads"});
  ExperimentConfig c;

  if (j.contains("mesh")) {
    const json& m = j.at("mesh");
    expect_object(m, "mesh");
    reject_unknown(m, "mesh", {"fine", "coarse"});
    c.n_fine = get_index(m, "mesh", "fine", c.n_fine, 2);
    c.n_coarse = get_index(m, "mesh", "coarse", c.n_coarse, 1);
    if (c.n_fine % c.n_coarse != 0)
      throw ConfigError("mesh.coarse: " + std::to_string(c.n_coarse) + " does not divide mesh.fine = " +
                        std::to_string(c.n_fine));
  }

  if (!j.contains("medium")) throw ConfigError("medium: required");
  {
    const json& m = j.at("medium");
    expect_object(m, "medium");
    reject_unknown(m, "medium", {"field", "geometry", "contrast"});
    if (m.contains("field") == m.contains("geometry"))
      throw ConfigError("medium: give exactly one of 'field' and 'geometry'");
    try {
      if (m.contains("field")) {
        c.medium.field_file = resolve(base_dir, get_string(m, "medium", "field", ""));
      } else if (m.at("geometry").is_string()) {
        c.medium.geometry = load_geometry(resolve(base_dir, m.at("geometry").get<std::string>()));
      } else {
        c.medium.geometry = parse_geometry_json(m.at("geometry").dump());
      }
    } catch (const DataError& e) {
      throw ConfigError(std::string("medium: ") + e.what());
    }
    if (m.contains("contrast")) c.medium.contrast = get_positive(m, "medium", "contrast", 1.0);
  }

  if (j.contains("source")) {
    const json& s = j.at("source");
    if (s.is_null()) {
      c.source.reset();
    } else {
      expect_object(s, "source");
      reject_unknown(s, "source", {"f0", "center"});
      SourceConfig src;
      src.f0 = get_positive(s, "source", "f0", src.f0);
      if (s.contains("center")) {
        const json& ctr = s.at("center");
        if (!ctr.is_array() || ctr.size() != 2 || !ctr[0].is_number() || !ctr[1].is_number())
          throw ConfigError("source.center: expected [x, y]");
        src.center_x = ctr[0].get<double>();
        src.center_y = ctr[1].get<double>();
        if (src.center_x < 0 || src.center_x > 1 || src.center_y < 0 || src.center_y > 1)
          throw ConfigError("source.center: must lie in the unit square");
      }
      c.source = src;
    }
  }

  if (j.contains("spaces")) {
    const json& s = j.at("spaces");
    expect_object(s, "spaces");
    reject_unknown(s, "spaces",
                   {"aux_count", "layers", "v2_choice", "v2_count", "kappa_tilde", "orthogonalize"});
    c.spaces.aux_count = get_index(s, "spaces", "aux_count", c.spaces.aux_count, 1);
    c.spaces.layers = get_index(s, "spaces", "layers", c.spaces.layers, 0);
    c.spaces.v2_choice = static_cast<int>(get_index(s, "spaces", "v2_choice", c.spaces.v2_choice, 0));
    if (c.spaces.v2_choice > 2) throw ConfigError("spaces.v2_choice: must be 0, 1 or 2");
    c.spaces.v2_count = get_index(s, "spaces", "v2_count", c.spaces.v2_count, 0);
    const std::string kt = get_string(s, "spaces", "kappa_tilde", "h_scaled");
    if (kt == "h_scaled") c.spaces.weight = KappaTilde::h_scaled;
    else if (kt == "partition_of_unity") c.spaces.weight = KappaTilde::partition_of_unity;
    else throw ConfigError("spaces.kappa_tilde: expected 'h_scaled' or 'partition_of_unity'");
    c.orthogonalize = get_bool(s, "spaces", "orthogonalize", false);
  }

  if (j.contains("lumping")) {
    const json& l = j.at("lumping");
    expect_object(l, "lumping");
    reject_unknown(l, "lumping", {"threshold", "count"});
    c.lumping.threshold = get_positive(l, "lumping", "threshold", c.lumping.threshold);
    c.lumping.count = get_index(l, "lumping", "count", c.lumping.count, 0);
  }

  if (j.contains("reference")) {
    const json& r = j.at("reference");
    expect_object(r, "reference");
    reject_unknown(r, "reference", {"enabled", "tau", "auto_refine"});
    c.reference.enabled = get_bool(r, "reference", "enabled", true);
    c.reference.tau = get_positive(r, "reference", "tau", c.reference.tau);
    c.reference.auto_refine = get_bool(r, "reference", "auto_refine", true);
  }

  if (!j.contains("schemes") || !j.at("schemes").is_array() || j.at("schemes").empty())
    throw ConfigError("schemes: expected a non-empty list");
  std::set<std::string> names;
  for (std::size_t k = 0; k < j.at("schemes").size(); ++k) {
    const std::string path = "schemes[" + std::to_string(k) + "]";
    const json& s = j.at("schemes")[k];
    expect_object(s, path);
    reject_unknown(s, path, {"kind", "name", "tau", "T", "sigma", "omega", "space"});
    if (!s.contains("kind")) throw ConfigError(path + ".kind: required");
    SchemeEntry e;
    try {
      e.kind = scheme_kind_from_string(get_string(s, path, "kind", ""));
    } catch (const ConfigError& err) {
      throw ConfigError(path + ".kind: " + err.what());
    }
    e.name = get_string(s, path, "name", to_string(e.kind));
    if (e.name.empty() || e.name.find_first_of("/\\ ") != std::string::npos)
      throw ConfigError(path + ".name: must be non-empty without spaces or slashes");
    if (!names.insert(e.name).second) throw ConfigError(path + ".name: duplicate '" + e.name + "'");
    e.tau = get_positive(s, path, "tau", e.kind == SchemeKind::split_lumped ? 0.004 : 0.006);
    e.final_time = get_positive(s, path, "T", 0.6);
    if (std::lround(e.final_time / e.tau) < 1)
      throw ConfigError(path + ".T: shorter than one time step");
    e.sigma = get_number(s, path, "sigma", 0.25);
    if (!(e.sigma >= 0.0)) throw ConfigError(path + ".sigma: must be >= 0");
    e.omega = e.kind == SchemeKind::split_omega0 ? 0.0 : 1.0;
    if (e.kind == SchemeKind::split_lumped) e.omega = get_number(s, path, "omega", 1.0);
    if (!(e.omega >= 0.0 && e.omega <= 1.0)) throw ConfigError(path + ".omega: must lie in [0, 1]");
    const std::string space = get_string(s, path, "space", "full");
    if (space == "full") e.space = SchemeSpace::full;
    else if (space == "v1") e.space = SchemeSpace::v1;
    else if (space == "fine") e.space = SchemeSpace::fine;
    else throw ConfigError(path + ".space: expected 'full', 'v1' or 'fine'");
    if (is_split(e.kind) && e.space != SchemeSpace::full)
      throw ConfigError(path + ".space: split schemes always run on the space pair");
    if (c.reference.enabled) {
      try {
        aligned_step(e.tau, c.reference.tau);
      } catch (const ConfigError&) {
        throw ConfigError(path + ".tau: must be an integer multiple of reference.tau");
      }
    }
    c.schemes.push_back(e);
  }

  if (j.contains("snapshot_times")) {
    const json& t = j.at("snapshot_times");
    if (!t.is_array()) throw ConfigError("snapshot_times: expected a list");
    c.snapshot_times.clear();
    for (std::size_t k = 0; k < t.size(); ++k) {
      const std::string path = "snapshot_times[" + std::to_string(k) + "]";
      if (!t[k].is_number() || t[k].get<double>() < 0.0)
        throw ConfigError(path + ": expected a nonnegative number");
      const double time = t[k].get<double>();
      for (const auto& e : c.schemes) {
        if (time > e.final_time + 1e-12) continue;
        try {
          aligned_step(time, e.tau);
        } catch (const ConfigError&) {
          throw ConfigError(path + ": not a multiple of the time step of scheme '" + e.name + "'");
        }
      }
      c.snapshot_times.push_back(time);
    }
  }

  if (j.contains("error_window")) {
    const json& w = j.at("error_window");
    if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number() ||
        w[0].get<double>() > w[1].get<double>())
      throw ConfigError("error_window: expected [t0, t1] with t0 <= t1");
    c.window_start = w[0].get<double>();
    c.window_end = w[1].get<double>();
  }

  if (j.contains("certification")) {
    try {
      c.split_certification = certify_mode_from_string(get_string(j, "", "certification", ""));
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("certification: ") + e.what());
    }
  }
  c.parallel = get_bool(j, "", "parallel", true);
  c.threads = static_cast<int>(get_index(j, "", "threads", 0, 0));
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment_config(j, path.parent_path());
}

CoefficientField build_medium(const ExperimentConfig& config) {
  const Index n = config.n_fine;
  if (config.medium.geometry) {
    GeometrySpec g = *config.medium.geometry;
    if (config.medium.contrast) g.contrast = *config.medium.contrast;
    return synth_channels(g, n);
  }
  if (!config.medium.field_file) throw ConfigError("medium: no field file or geometry given");
  CoefficientField f = load_field(*config.medium.field_file);
  if (f.nx() != n)
    throw ConfigError("medium.field: grid is " + std::to_string(f.nx()) + " cells wide, mesh.fine is " +
                      std::to_string(n));
  if (config.medium.contrast) {
    // Rescale the values above the minimum so that max/min equals the requested contrast.
    const double lo = f.min(), hi = f.max();
    std::vector<double> v = f.values();
    if (hi > lo)
      for (double& x : v) x = lo + (x - lo) * (lo * *config.medium.contrast - lo) / (hi - lo);
    f = CoefficientField(f.nx(), f.ny(), std::move(v));
  }
  return f;
}

ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 const std::filesystem::path& out_dir) {
  ExperimentSummary summary;
  run_into(config, out_dir, summary);
  return summary;
}

json certify_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Context c = prepare(config);
  json j = stability_json(c, config, 0.0);
  write_json(j, out_dir / "stability.json");
  return j;
}

SweepAxis sweep_axis_from_string(const std::string& name) {
  for (SweepAxis a : {SweepAxis::contrast, SweepAxis::tau, SweepAxis::J, SweepAxis::layers})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown sweep axis '" + name + "' (contrast, tau, J, layers)");
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::contrast: return "contrast";
    case SweepAxis::tau: return "tau";
    case SweepAxis::J: return "J";
    case SweepAxis::layers: return "layers";
  }
  return "unknown";
}

ExperimentConfig with_axis_value(const ExperimentConfig& config, SweepAxis axis, double value) {
  ExperimentConfig c = config;
  auto as_count = [&](const char* what) {
    if (value < 0 || std::abs(value - std::round(value)) > 1e-12)
      throw ConfigError(std::string("sweep value for ") + what + " must be a nonnegative integer");
    return static_cast<Index>(std::llround(value));
  };
  switch (axis) {
    case SweepAxis::contrast:
      if (!(value > 0.0)) throw ConfigError("sweep value for contrast must be positive");
      c.medium.contrast = value;
      break;
    case SweepAxis::tau:
      if (!(value > 0.0)) throw ConfigError("sweep value for tau must be positive");
      for (auto& e : c.schemes) e.tau = value;
      break;
    case SweepAxis::J:
      c.spaces.v2_count = as_count("J");
      break;
    case SweepAxis::layers:
      c.spaces.layers = as_count("layers");
      break;
  }
  return c;
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, SweepAxis axis,
                            const std::vector<double>& values, const std::filesystem::path& out_dir) {
  if (values.empty()) throw ConfigError("sweep: no values given");
  std::filesystem::create_directories(out_dir);
  std::vector<SweepRow> rows;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const ExperimentConfig c = with_axis_value(config, axis, values[k]);
    SweepRow row;
    row.value = values[k];
    ExperimentSummary summary;
    try {
      run_into(c, out_dir / (to_string(axis) + "_" + std::to_string(k)), summary);
      row.status = "ok";
    } catch (const InstabilityError&) {
      row.status = "unstable";
    } catch (const SolverError&) {
      row.status = "solver_failure";
    }
    row.inputs = summary.inputs;
    const StabilityReport rep = certify(1.0, summary.inputs, c.split_certification);
    row.tau_max_split = rep.tau_max();
    row.tau_max_explicit = rep.tau_max_explicit;
    row.final_l2 = row.final_energy = std::numeric_limits<double>::quiet_NaN();
    if (c.source) row.max_energy_drift = std::numeric_limits<double>::quiet_NaN();
    else
      for (const auto& s : summary.schemes) row.max_energy_drift = std::max(row.max_energy_drift, s.energy_drift);
    if (!summary.schemes.empty() && summary.schemes.front().errors.size()) {
      row.final_l2 = summary.schemes.front().errors.l2.back();
      row.final_energy = summary.schemes.front().errors.energy.back();
    }
    rows.push_back(row);
  }

  std::ofstream out(out_dir / ("sweep_" + to_string(axis) + ".csv"));
  if (!out) throw DataError("cannot write sweep summary in " + out_dir.string());
  out << std::setprecision(17);
  out << to_string(axis)
      << ",alpha,gamma,gamma_a,tau_max_split,tau_max_explicit,max_energy_drift,final_l2,final_energy,"
         "status\n";
  auto cell = [&](double v) {
    if (std::isfinite(v)) out << v;
    else if (v > 0) out << "inf";
  };
  for (const auto& r : rows) {
    out << r.value << ',' << r.inputs.alpha << ',' << r.inputs.gamma << ',' << r.inputs.gamma_a << ',';
    cell(r.tau_max_split);
    out << ',';
    cell(r.tau_max_explicit);
    out << ',';
    cell(r.max_energy_drift);
    out << ',';
    cell(r.final_l2);
    out << ',';
    cell(r.final_energy);
    out << ',' << r.status << '\n';
  }
  return rows;
}

}  // namespace cemwave
