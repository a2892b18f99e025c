#pragma once

// One traversal of the laser loop: SA -> SMF1 -> FA -> SMF2 -> DCF -> OC.

#include <array>

#include "modelock/components.hpp"
#include "modelock/fiber.hpp"

namespace modelock {

struct GridSpec {
  double window_ps = 10.0;
  std::size_t samples = 512;
  void validate() const;
  bool operator==(const GridSpec&) const = default;
};

struct LaserConfig {
  SaturableAbsorberParams sa;
  FiberParams smf1{"smf1", 0.01, 2e-3, 0.0, 1.0, 1.0, 0.32};
  FiberParams fa{"fa", 0.025, 4.4e-3, 6.0, 200.0, 50.0, 0.22};
  FiberParams smf2{"smf2", 0.01, 2e-3, 0.0, 1.0, 1.0, 0.11};
  double beta_rt = -1e-3;  // ps^2, round-trip dispersion
  OutputCouplerParams oc;
  GridSpec grid;
  StepPolicy step;

  /// Lumped DCF dispersion that closes the loop at beta_rt.
  DispersionParams dcf() const;
  GridPtr make_grid() const { return FastTimeGrid::make(grid.window_ps, grid.samples); }
  void validate() const;
};

struct RoundTripOutput {
  RealField input;
  RealField after_sa;
  Trajectory smf1, fa, smf2;
  RealField after_dcf;
  RealField output;
  /// Integral of g over the amplifier.
  double gain_integral() const { return fa.gain_integral(); }
  /// Input and the output of each component, in loop order.
  std::array<const RealField*, 7> stages() const;
};

RoundTripOutput round_trip(const LaserConfig& cfg, const RealField& psi0);

/// Complexified round trip (bilinear squares throughout); no trajectories.
ComplexField round_trip_complex(const LaserConfig& cfg, const ComplexField& psi0);

/// Round trip without trajectory storage.
RealField round_trip_map(const LaserConfig& cfg, const RealField& psi0);

template <FieldScalar S>
Field<S> monodromy_apply(const LaserConfig& cfg, const RoundTripOutput& rt, const Field<S>& u0);

template <FieldScalar S>
Field<S> monodromy_adjoint_apply(const LaserConfig& cfg, const RoundTripOutput& rt, const Field<S>& v0);

/// R(-theta) o M.
template <FieldScalar S>
Field<S> modified_monodromy_apply(const LaserConfig& cfg, const RoundTripOutput& rt, double theta,
                                  const Field<S>& u0);

}  // namespace modelock
