#pragma once

// Two-stage search for periodically stationary pulses: a few round trips of
// plain evolution, then quasi-Newton minimization of the normalized
// Poincare functional  E~ = (1/2)||R(psi) - R(theta) psi||^2 / E(psi)
// with theta chosen in closed form and the gradient from the adjoint
// monodromy operator.

#include <functional>
#include <string>
#include <vector>

#include "modelock/roundtrip.hpp"

namespace modelock {

struct PoincareEvaluation {
  double f_val = 0.0;  // (||R(psi)||^2 + ||psi||^2) / 2
  double g_val = 0.0;  // Re <R(psi), psi>
  double h_val = 0.0;  // Im <R(psi), psi>
  double theta = 0.0;  // in [0, 2 pi)
  double e_val = 0.0;  // (1/2) ||v0||^2
  double energy = 0.0;
  double objective = 0.0;  // e_val / energy
  RealField residual;      // v0 = R(psi) - R(theta) psi
  RealField image;         // R(psi)
  RealField gradient;      // L2 gradient of the objective; empty if not requested
};

PoincareEvaluation evaluate_poincare(const LaserConfig& cfg, const RealField& psi0, bool with_gradient = true);

RealField gaussian_seed(double peak_power_w, double fwhm_ps, const GridPtr& grid);

RealField evolve_stage(const LaserConfig& cfg, const RealField& seed, std::size_t n_roundtrips);

struct PulseMetrics {
  double peak_power = 0.0;  // W
  double rms_width = 0.0;   // ps
  double energy = 0.0;      // pJ
};

PulseMetrics pulse_metrics(const RealField& psi);

// ---------------------------------------------------------------------------
// Generic quasi-Newton minimizer on R^n

struct MinimizerOptions {
  double obj_tol = 1e-20;
  double grad_tol = 1e-10;
  std::size_t max_iters = 200;
  std::size_t max_line_search = 30;
  double c1 = 1e-4;
  double c2 = 0.9;
  /// Dense inverse-Hessian BFGS up to this dimension, L-BFGS beyond it.
  std::size_t dense_limit = 2048;
  std::size_t lbfgs_memory = 20;
};

/// Returns f(x) and writes the gradient into g (resized by the callee).
using ObjectiveFn = std::function<double(const std::vector<double>& x, std::vector<double>& g)>;
/// Called after every accepted step (and once for the initial point).
using IterationFn = std::function<void(std::size_t iter, const std::vector<double>& x, double f,
                                       const std::vector<double>& g)>;
/// Norm used for the gradient stopping test.
using GradNormFn = std::function<double(const std::vector<double>& g)>;

enum class MinimizerStatus { objective_tolerance, gradient_tolerance, max_iterations, line_search_failed, diverged };

std::string to_string(MinimizerStatus s);

struct MinimizerResult {
  std::vector<double> x;
  double f = 0.0;
  std::vector<double> g;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  MinimizerStatus status = MinimizerStatus::max_iterations;
  bool converged() const {
    return status == MinimizerStatus::objective_tolerance || status == MinimizerStatus::gradient_tolerance;
  }
};

MinimizerResult minimize_bfgs(const ObjectiveFn& fn, std::vector<double> x0, const MinimizerOptions& opts,
                              const IterationFn& on_iter = {}, const GradNormFn& grad_norm = {});

// ---------------------------------------------------------------------------
// Pulse optimization

struct TraceRow {
  std::size_t iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double theta = 0.0;
  double peak_power = 0.0;
  double rms_width = 0.0;
};

struct OptimizerReport {
  std::vector<TraceRow> history;
  RealField psi;
  double theta = 0.0;
  double objective = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  MinimizerStatus status = MinimizerStatus::max_iterations;
  bool converged = false;
};

class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

OptimizerReport optimize(const LaserConfig& cfg, const RealField& psi_init, const MinimizerOptions& opts = {});

struct SweepStep {
  double value = 0.0;  // swept parameter value
  OptimizerReport report;
  PulseMetrics metrics;
  double gain_integral = 0.0;
};

struct SweepResult {
  std::vector<SweepStep> steps;
  bool completed = false;
};

enum class SweepParameter { g0, e_sat, omega_g };
std::string to_string(SweepParameter p);
SweepParameter parse_sweep_parameter(const std::string& s);  // "g0", "e_sat", "omega_g"

/// cfg with the amplifier parameter replaced; from, from + step, ... up to `to`
/// inclusive (to within step/1000).
std::vector<double> sweep_values(double from, double to, double step);
LaserConfig with_parameter(const LaserConfig& cfg, SweepParameter p, double value);
double parameter_value(const LaserConfig& cfg, SweepParameter p);

/// Warm-started optimization along a parameter path.
SweepResult continuation_sweep(const std::vector<LaserConfig>& path, const std::vector<double>& values,
                               const RealField& psi_init, const MinimizerOptions& opts = {});

}  // namespace modelock
