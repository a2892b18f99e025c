// modelock: command-line driver for the mode-locked laser pulse workflows.
//
//   modelock evolve    seed and evolve a pulse for --roundtrips round trips
//   modelock optimize  evolve, then minimize the Poincare functional
//   modelock spectrum  optimize, then the monodromy spectrum and eigenvectors
//   modelock continue  warm-started optimization along an amplifier parameter
//   modelock verify    convergence, Fornberg, gradient and adjoint checks
//
// Exit codes: 0 success, 2 configuration or usage error, 3 solver failure,
// 4 non-convergence.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "modelock/io.hpp"

using namespace modelock;
using json = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kSolverError = 3;
constexpr int kNotConverged = 4;

struct Options {
  std::string config;
  std::string out_dir = "run";
  std::optional<double> steps_per_meter;
  std::optional<std::size_t> roundtrips;
  std::optional<std::size_t> top_k;
  std::size_t tasks = 0;
  std::optional<std::uint64_t> seed;
  std::string init;

  // continue
  std::string param;
  double to = 0.0;
  double step = 0.0;

  // verify
  std::string target = "all";
  double dt_ref = 1e-4;
  std::vector<double> dt_list{1e-2, 5e-3, 2e-3, 1e-3};
};

// Raised for bad command-line values that CLI11 cannot check by itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : parse_config(o.config);
  if (o.steps_per_meter) {
    if (!(*o.steps_per_meter > 0.0)) throw UsageError("--steps-per-meter must be positive");
    cfg.laser.step.step_m = 1.0 / *o.steps_per_meter;
  }
  if (o.roundtrips) cfg.evolve_roundtrips = *o.roundtrips;
  if (o.top_k) cfg.top_k_eigenvectors = *o.top_k;
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

json metrics_json(const PulseMetrics& m) {
  return {{"peak_power_w", m.peak_power}, {"rms_width_ps", m.rms_width}, {"energy_pj", m.energy}};
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

void write_summary(RunDirectory& dir, const json& j) {
  std::ofstream(dir.file("summary.json")) << j.dump(2) << '\n';
}

void print_short(const char* label, double v) { std::printf("  %-22s %.6g\n", label, v); }

// Seeded and evolved pulse, or the --init file.
RealField initial_pulse(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const auto grid = cfg.laser.make_grid();
  if (!o.init.empty()) {
    try {
      return read_pulse_csv(o.init, grid);
    } catch (const std::runtime_error& ex) {
      throw UsageError(ex.what());
    }
  }
  const RealField seed = gaussian_seed(cfg.seed_peak_power_w, cfg.seed_fwhm_ps, grid);
  write_pulse_csv(dir.file("seed.csv"), seed);
  return evolve_stage(cfg.laser, seed, cfg.evolve_roundtrips);
}

int cmd_evolve(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const RealField psi = initial_pulse(cfg, o, dir);
  write_pulse_csv(dir.file("pulse.csv"), psi);
  const auto rt = round_trip(cfg.laser, psi);
  write_stages_csv(dir.file("stages.csv"), rt);
  const auto ev = evaluate_poincare(cfg.laser, psi, false);
  json j;
  j["command"] = "evolve";
  j["roundtrips"] = cfg.evolve_roundtrips;
  j["objective"] = ev.objective;
  j["theta"] = ev.theta;
  j["pulse"] = metrics_json(pulse_metrics(psi));
  write_summary(dir, j);
  std::printf("evolve: %zu round trips\n", cfg.evolve_roundtrips);
  print_short("objective", ev.objective);
  print_short("peak power [W]", pulse_metrics(psi).peak_power);
  return kOk;
}

json optimizer_json(const OptimizerReport& rep) {
  return {{"objective", rep.objective},       {"theta", rep.theta},
          {"iterations", rep.iterations},     {"evaluations", rep.evaluations},
          {"grad_norm", rep.grad_norm},       {"status", to_string(rep.status)},
          {"converged", rep.converged},       {"pulse", metrics_json(pulse_metrics(rep.psi))}};
}

OptimizerReport run_optimizer(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const RealField start = initial_pulse(cfg, o, dir);
  write_pulse_csv(dir.file("pulse_start.csv"), start);
  auto rep = optimize(cfg.laser, start, cfg.minimizer());
  write_trace_csv(dir.file("trace.csv"), rep.history);
  write_pulse_csv(dir.file("pulse.csv"), rep.psi);
  write_stages_csv(dir.file("stages.csv"), round_trip(cfg.laser, rep.psi));
  std::printf("optimize: %s after %zu iterations\n", to_string(rep.status).c_str(), rep.iterations);
  print_short("objective", rep.objective);
  print_short("theta", rep.theta);
  print_short("peak power [W]", pulse_metrics(rep.psi).peak_power);
  return rep;
}

int cmd_optimize(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const auto rep = run_optimizer(cfg, o, dir);
  json j = optimizer_json(rep);
  j["command"] = "optimize";
  write_summary(dir, j);
  return rep.converged ? kOk : kNotConverged;
}

int cmd_spectrum(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const auto rep = run_optimizer(cfg, o, dir);
  json j = optimizer_json(rep);
  j["command"] = "spectrum";
  if (!rep.converged) {
    write_summary(dir, j);
    return kNotConverged;
  }
  const auto rt = round_trip(cfg.laser, rep.psi);
  const auto m = assemble_matrix(cfg.laser, rt, rep.theta, o.tasks);
  SpectrumReport spec = eigendecompose(m, cfg.top_k_eigenvectors);
  const auto curve = essential_curve(cfg.laser, rt.gain_integral(), rep.theta);
  classify(spec, curve);
  spec.curve = curve;

  write_eigenvalues_csv(dir.file("eigenvalues.csv"), spec);
  write_essential_curve_csv(dir.file("essential_curve.csv"), curve);
  for (std::size_t i = 0; i < spec.eigenvectors.size(); ++i) {
    write_eigenfunction_csv(dir.file("eigenfunction_" + std::to_string(i) + ".csv"), spec.eigenvectors[i]);
  }

  json discrete = json::array();
  for (std::size_t i = 0; i < spec.eigenvalues.size(); ++i) {
    if (spec.classes[i] != SpectralClass::essential_adjacent) {
      discrete.push_back({{"index", i}, {"value", complex_json(spec.eigenvalues[i])}, {"class", to_string(spec.classes[i])}});
    }
  }
  j["gain_integral_fa"] = rt.gain_integral();
  j["essential_edge_abs"] = std::abs(curve.plus.front());
  j["stability_margin"] = spec.stability_margin;
  j["discrete_count"] = spec.discrete_count;
  j["discrete_eigenvalues"] = discrete;

  const auto theory = theoretical_eigenpairs(rep.psi);
  try {
    const auto unit = check_unit_pair(spec, theory);
    const auto phase = complexify(theory.phase), shift = complexify(theory.translation);
    write_eigenfunction_csv(dir.file("unit_phase_numeric.csv"), unit.phase_vector);
    write_eigenfunction_csv(dir.file("unit_phase_theory.csv"), phase);
    write_eigenfunction_csv(dir.file("unit_translation_numeric.csv"), unit.translation_vector);
    write_eigenfunction_csv(dir.file("unit_translation_theory.csv"), shift);
    j["unit_pair"] = {{"eigen_error", {unit.eigen_error[0], unit.eigen_error[1]}},
                      {"phase_error", unit.phase_error},
                      {"translation_error", unit.translation_error},
                      {"raw_phase_error", unit.raw_phase_error},
                      {"raw_translation_error", unit.raw_translation_error}};
  } catch (const std::exception& ex) {
    j["unit_pair"] = {{"error", ex.what()}};
  }
  write_summary(dir, j);
  print_short("stability margin", spec.stability_margin);
  print_short("discrete eigenvalues", static_cast<double>(spec.discrete_count));
  return kOk;
}

int cmd_continue(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const SweepParameter param = parse_sweep_parameter(o.param);
  const double from = parameter_value(cfg.laser, param);
  std::vector<double> values;
  try {
    values = sweep_values(from, o.to, o.step);
  } catch (const std::invalid_argument& ex) {
    throw UsageError(ex.what());
  }
  std::vector<LaserConfig> path;
  for (const double v : values) path.push_back(with_parameter(cfg.laser, param, v));

  const RealField start = initial_pulse(cfg, o, dir);
  const auto sweep = continuation_sweep(path, values, start, cfg.minimizer());
  write_sweep_csv(dir.file("continuation.csv"), sweep);
  if (!sweep.steps.empty()) write_pulse_csv(dir.file("pulse.csv"), sweep.steps.back().report.psi);

  json steps = json::array();
  for (const auto& s : sweep.steps) {
    steps.push_back({{"value", s.value},
                     {"converged", s.report.converged},
                     {"iterations", s.report.iterations},
                     {"objective", s.report.objective},
                     {"theta", s.report.theta},
                     {"pulse", metrics_json(s.metrics)}});
  }
  json j;
  j["command"] = "continue";
  j["parameter"] = to_string(param);
  j["completed"] = sweep.completed;
  j["steps"] = steps;
  write_summary(dir, j);
  for (const auto& s : sweep.steps) {
    std::printf("  %s = %-8.6g peak %.6g W  rms %.6g ps  %s\n", to_string(param).c_str(), s.value,
                s.metrics.peak_power, s.metrics.rms_width, s.report.converged ? "" : "(not converged)");
  }
  return sweep.completed ? kOk : kNotConverged;
}

// Base point for the gradient check: a pulse that is far from stationary.
RealField gradient_direction(const GridPtr& grid, std::uint64_t seed) {
  RealField u = random_field(grid, seed);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double w = std::exp(-std::pow(grid->x(j) / 0.2, 2));
    u.re()[j] *= w;
    u.im()[j] *= w;
  }
  return u;
}

int cmd_verify(const RunConfig& cfg, const Options& o, RunDirectory& dir) {
  const std::string& t = o.target;
  const bool all = t == "all";
  const bool conv = all || t == "R" || t == "M" || t == "M*";
  if (!conv && t != "fornberg" && t != "gradient" && t != "audit") {
    throw UsageError("unknown --target '" + t + "' (R, M, M*, fornberg, gradient, audit or all)");
  }
  json j;
  j["command"] = "verify";
  j["target"] = t;
  const auto grid = cfg.laser.make_grid();
  const RealField evolved = initial_pulse(cfg, o, dir);

  if (conv) {
    json studies = json::object();
    for (const char* name : {"R", "M", "M*"}) {
      if (!all && t != name) continue;
      const auto study = convergence_study(cfg.laser, evolved, parse_study_target(name), o.dt_list, o.dt_ref);
      const std::string file = std::string("convergence_") + (std::string(name) == "M*" ? "Mstar" : name) + ".csv";
      write_convergence_csv(dir.file(file), study);
      json pts = json::array();
      for (const auto& p : study.points) {
        pts.push_back({{"dt_m", p.dt}, {"abs_error", p.abs_error}, {"ok", p.ok}, {"failure", p.failure}});
      }
      studies[name] = {{"slope", study.slope}, {"dt_ref", study.dt_ref}, {"points", pts}};
      std::printf("  convergence %-3s slope %.4f\n", name, study.slope);
    }
    j["convergence"] = studies;
  }

  if (all || t == "fornberg" || t == "audit") {
    const auto rep = optimize(cfg.laser, evolved, cfg.minimizer());
    write_pulse_csv(dir.file("pulse.csv"), rep.psi);
    j["optimizer"] = optimizer_json(rep);
    if (all || t == "fornberg") {
      std::vector<double> radii;
      for (int k = 1; k <= 40; ++k) radii.push_back(std::ldexp(1.0, -k));
      const auto scan = fornberg_scan(cfg.laser, rep.psi, apply_j(rep.psi), radii, 4);
      write_fornberg_csv(dir.file("fornberg.csv"), scan);
      const auto best = std::min_element(scan.begin(), scan.end(),
                                         [](const auto& a, const auto& b) { return a.abs_error < b.abs_error; });
      const auto at = std::find_if(scan.begin(), scan.end(), [](const auto& p) { return p.r == std::ldexp(1.0, -10); });
      j["fornberg"] = {{"samples", 4},
                       {"error_at_2^-10", at->abs_error},
                       {"error_at_2^-10_sqrt_joule", at->abs_error_sqrt_joule},
                       {"best_r", best->r},
                       {"best_error", best->abs_error}};
      std::printf("  fornberg error at r=2^-10: %.3g\n", at->abs_error);
    }
    if (all || t == "audit") {
      const auto audit = adjoint_pairing_audit(cfg.laser, round_trip(cfg.laser, rep.psi), 20, cfg.seed);
      json parts = json::object();
      for (const auto& c : audit.components) parts[c.component] = c.max_defect;
      j["adjoint_audit"] = {{"seed", audit.seed}, {"trials", audit.trials}, {"max_defect", audit.max_defect},
                            {"components", parts}};
      std::printf("  adjoint pairing defect %.3g\n", audit.max_defect);
    }
  }

  if (all || t == "gradient") {
    const RealField base = gaussian_seed(200.0, 0.05, grid);
    std::vector<double> eps;
    for (int k = 0; k <= 8; ++k) eps.push_back(std::pow(10.0, -5.0 + 0.5 * k));
    const auto check = gradient_fd_check(cfg.laser, base, gradient_direction(grid, cfg.seed), eps);
    write_gradient_csv(dir.file("gradient.csv"), check);
    j["gradient"] = {{"slope", check.slope}, {"adjoint_derivative", check.adjoint_derivative}, {"seed", cfg.seed}};
    std::printf("  gradient check slope %.4f\n", check.slope);
  }
  write_summary(dir, j);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodically stationary pulses of a mode-locked fiber laser"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value config file (defaults when absent)")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", o.out_dir, "run directory")->capture_default_str();
    sub->add_option("--steps-per-meter", o.steps_per_meter, "fiber steps per meter (overrides step_m)");
    sub->add_option("--roundtrips", o.roundtrips, "evolution round trips before optimizing");
    sub->add_option("--top-k-eigenvectors", o.top_k, "eigenvectors to write");
    sub->add_option("--tasks", o.tasks, "worker threads (0: all cores)");
    sub->add_option("--seed", o.seed, "random seed for verification trials");
  };
  auto with_init = [&](CLI::App* sub) {
    sub->add_option("--init", o.init, "start from a pulse CSV instead of the evolved seed")->check(CLI::ExistingFile);
  };

  auto* evolve = app.add_subcommand("evolve", "evolve the Gaussian seed");
  common(evolve);
  with_init(evolve);
  auto* opt = app.add_subcommand("optimize", "find a periodically stationary pulse");
  common(opt);
  with_init(opt);
  auto* spectrum = app.add_subcommand("spectrum", "spectrum of the modified monodromy operator");
  common(spectrum);
  with_init(spectrum);
  auto* cont = app.add_subcommand("continue", "parameter continuation");
  common(cont);
  with_init(cont);
  cont->add_option("--param", o.param, "g0, e_sat or omega_g")->required();
  cont->add_option("--to", o.to, "final parameter value")->required();
  cont->add_option("--step", o.step, "parameter increment")->required();
  auto* verify = app.add_subcommand("verify", "numerical verification studies");
  common(verify);
  verify->add_option("--target", o.target, "R, M, M*, fornberg, gradient, audit or all")->capture_default_str();
  verify->add_option("--dt-ref", o.dt_ref, "reference step [m]")->capture_default_str();
  verify->add_option("--dt", o.dt_list, "steps [m] for the convergence study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  RunConfig cfg;
  try {
    cfg = load(o);
  } catch (const std::exception& ex) {
    std::cerr << "config error: " << ex.what() << '\n';
    return kConfigError;
  }
  if (o.tasks > 0) omp_set_num_threads(static_cast<int>(o.tasks));

  const auto t0 = std::chrono::steady_clock::now();
  int rc = kOk;
  try {
    RunDirectory dir(o.out_dir, command_line(argc, argv), cfg);
    if (*evolve) rc = cmd_evolve(cfg, o, dir);
    if (*opt) rc = cmd_optimize(cfg, o, dir);
    if (*spectrum) rc = cmd_spectrum(cfg, o, dir);
    if (*cont) rc = cmd_continue(cfg, o, dir);
    if (*verify) rc = cmd_verify(cfg, o, dir);
    dir.finalize(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    if (rc == kNotConverged) std::cerr << "not converged\n";
  } catch (const UsageError& ex) {
    std::cerr << "usage error: " << ex.what() << '\n';
    return kConfigError;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "invalid input: " << ex.what() << '\n';
    return kConfigError;
  } catch (const std::exception& ex) {
    std::cerr << "solver failure: " << ex.what() << '\n';
    return kSolverError;
  }
  return rc;
}
