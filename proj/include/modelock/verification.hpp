#pragma once

// Numerical validation: step-size convergence, spectral (Cauchy-integral)
// differentiation of the round trip, finite-difference gradient check and
// adjoint pairing audits.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "modelock/roundtrip.hpp"

namespace modelock {

enum class StudyTarget { roundtrip, linearized, adjoint };
std::string to_string(StudyTarget t);
StudyTarget parse_study_target(const std::string& s);  // "R", "M", "M*"

struct ConvergencePoint {
  double dt = 0.0;  // m
  double abs_error = 0.0;  // sqrt(pJ)
  double rel_error = 0.0;  // abs_error / sqrt(E(reference))
  bool ok = true;
  std::string failure;
};

struct ConvergenceStudy {
  StudyTarget target = StudyTarget::roundtrip;
  double dt_ref = 0.0;
  std::vector<ConvergencePoint> points;
  double slope = 0.0;    // least-squares log-log over fitted points
  double fit_min = 0.0;  // dt range used by the fit
  double fit_max = 0.0;
};

/// Errors against a dt_ref solution for each dt. For M the direction is
/// `direction` (default J psi0, for which M u0 = J R(psi0) exactly) and the linearization is about each dt's own trajectory; for M*
/// the direction is v0 = R(psi0) - R(theta) psi0 computed at dt_ref. All
/// solves run in extended precision so round-off stays below truncation.
ConvergenceStudy convergence_study(const LaserConfig& cfg, const RealField& psi0, StudyTarget target,
                                   const std::vector<double>& dt_list, double dt_ref, double fit_min = 1e-3,
                                   double fit_max = 1.0, const RealField* direction = nullptr);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// (1/(r M)) sum_m R(psi0 + r w^m u0) w^{-m}, w = exp(2 pi i / M), with
/// complexified round trips.
ComplexField fornberg_derivative(const LaserConfig& cfg, const RealField& psi0, const RealField& u0, double r,
                                 std::size_t samples);

struct FornbergPoint {
  double r = 0.0;
  double abs_error = 0.0;  // sqrt(pJ)
  double abs_error_sqrt_joule = 0.0;
};
/// ||fornberg(r) - M u0|| for each radius.
std::vector<FornbergPoint> fornberg_scan(const LaserConfig& cfg, const RealField& psi0, const RealField& u0,
                                         const std::vector<double>& radii, std::size_t samples);

struct GradientCheck {
  std::vector<double> epsilon;
  std::vector<double> rel_error;
  double adjoint_derivative = 0.0;  // <dF/dpsi, u0>
  double slope = 0.0;
};

class DegenerateDirection : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite-difference check of the adjoint gradient of the unnormalized
/// Poincare functional (1/2)||R(psi) - R(theta) psi||^2.
GradientCheck gradient_fd_check(const LaserConfig& cfg, const RealField& psi0, const RealField& u0,
                                const std::vector<double>& eps_list);

struct PairingAudit {
  std::string component;
  double max_defect = 0.0;
};

struct AdjointAudit {
  std::uint64_t seed = 0;
  std::size_t trials = 0;
  double max_defect = 0.0;  // full round trip
  std::vector<PairingAudit> components;  // SA, fibers, DCF, OC
};

/// max |<v, M u> - <M* v, u>| / (||u|| ||v||) over random Gaussian (u, v).
AdjointAudit adjoint_pairing_audit(const LaserConfig& cfg, const RoundTripOutput& rt, std::size_t trials,
                                   std::uint64_t seed = 20240601);

/// Fixed-seed Gaussian random field.
RealField random_field(const GridPtr& grid, std::uint64_t seed);

}  // namespace modelock
