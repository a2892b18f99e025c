#pragma once

// Symmetric split-step Fourier propagation through a fiber segment:
// the nonlinear Haus master equation (NLSE when g0 = 0), its linearization,
// and the adjoint of the linearization, each with optional three-level
// Richardson extrapolation (32 f^{h/4} - 12 f^{h/2} + f^h) / 21.
//
// One step of size h is  A-half(t+h/2 -> t+h) o Kerr(h) o A-half(t -> t+h/2).
// The gain integral over a half step is G = (h/2)(g + (h/4) g2) with g, g2
// taken at the half step's own input field. The linearized and adjoint
// schemes are the exact derivative and exact transpose of this discrete map.

#include <stdexcept>
#include <string>
#include <vector>

#include "modelock/field.hpp"

namespace modelock {

struct FiberParams {
  std::string name = "fiber";
  double beta = 0.0;     // ps^2/m
  double gamma = 0.0;    // 1/(W m)
  double g0 = 0.0;       // 1/m, zero for passive fiber
  double e_sat = 1.0;    // pJ
  double omega_g = 1.0;  // rad/ps
  double length = 1.0;   // m

  bool active() const noexcept { return g0 > 0.0; }
  void validate() const;
  bool operator==(const FiberParams&) const = default;
};

struct StepPolicy {
  double step_m = 1e-2;
  bool richardson = true;
  /// Carry the real-mode state and transforms in long double. Convergence
  /// studies use it to push the round-off floor below the truncation error.
  bool extended_precision = false;

  /// ceil(L/h); the step actually used is L / steps <= step_m.
  std::size_t steps_for(double length) const;
  void validate() const;
  bool operator==(const StepPolicy&) const = default;
};

class PropagationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrajectoryMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Gain-related scalars of one half step, evaluated at its input field.
struct HalfStepRecord {
  std::vector<cplx> spectrum;  // unnormalized DFT of the input envelope (active fiber only)
  double g = 0.0;
  double g2 = 0.0;
  double big_g = 0.0;   // G = (h/2)(g + (h/4) g2)
  double k_pair = 0.0;  // <K psi, psi>
  double l_pair = 0.0;  // <psi, L psi>, zero up to round-off
};

struct StepRecord {
  HalfStepRecord first;
  std::vector<cplx> kerr_input;  // time-domain envelope entering the Kerr step
  HalfStepRecord second;
};

struct LevelTrajectory {
  double h = 0.0;
  std::vector<StepRecord> steps;
  double gain_integral = 0.0;
  RealField output;
};

/// Everything the linearized and adjoint solvers need from one nonlinear pass.
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(FiberParams params, StepPolicy policy) : params_(std::move(params)), policy_(policy) {}

  const FiberParams& params() const noexcept { return params_; }
  const StepPolicy& policy() const noexcept { return policy_; }
  const std::vector<LevelTrajectory>& levels() const noexcept { return levels_; }
  std::vector<LevelTrajectory>& levels() noexcept { return levels_; }
  const RealField& input() const noexcept { return input_; }
  const RealField& output() const noexcept { return output_; }
  /// Integral of g over the segment, Richardson-combined when enabled.
  double gain_integral() const noexcept { return gain_integral_; }

  void set_input(RealField f) { input_ = std::move(f); }
  void set_output(RealField f) { output_ = std::move(f); }
  void set_gain_integral(double g) { gain_integral_ = g; }

  /// Finest-level envelope samples at each Kerr input (mid-step positions).
  std::vector<RealField> snapshots() const;

  void require_match(const FiberParams& p, const StepPolicy& policy) const;

 private:
  FiberParams params_;
  StepPolicy policy_;
  std::vector<LevelTrajectory> levels_;
  RealField input_;
  RealField output_;
  double gain_integral_ = 0.0;
};

/// g0 / (1 + E/E_sat); uses the bilinear energy for complexified fields.
double gain(const FiberParams& p, const RealField& psi);
cplx gain(const FiberParams& p, const ComplexField& psi);

/// dg/dt along the linear part of the flow at psi.
double gain_rate_g2(const FiberParams& p, const RealField& psi);

/// Pointwise psi <- R(gamma |psi|^2 h) psi.
template <FieldScalar S>
Field<S> kerr_step(const FiberParams& p, const Field<S>& psi, double h);

/// Frequency-domain multiply by e^{G a(w)} R(b(w) h / 2).
template <FieldScalar S>
Field<S> linear_half_step(const FiberParams& p, const Field<S>& psi, S big_g, double h);

template <FieldScalar S>
Field<S> propagate_nonlinear(const FiberParams& p, const Field<S>& psi_in, const StepPolicy& policy);

/// Real-mode propagation that also records the trajectory.
RealField propagate_nonlinear(const FiberParams& p, const RealField& psi_in, const StepPolicy& policy,
                              Trajectory& traj);

template <FieldScalar S>
Field<S> propagate_linearized(const FiberParams& p, const Trajectory& traj, const Field<S>& u_in,
                              const StepPolicy& policy);

template <FieldScalar S>
Field<S> propagate_adjoint(const FiberParams& p, const Trajectory& traj, const Field<S>& v_in,
                           const StepPolicy& policy);

}  // namespace modelock
