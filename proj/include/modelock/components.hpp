#pragma once

// Discrete laser components: saturable absorber, dispersion compensation,
// output coupler. Each comes with its linearization and adjoint.

#include "modelock/field.hpp"

namespace modelock {

struct SaturableAbsorberParams {
  double l0 = 0.2;      // unsaturated loss
  double p_sat = 50.0;  // W
  void validate() const;
};

struct DispersionParams {
  double beta = 0.0;  // ps^2, lumped
  void validate() const;
};

struct OutputCouplerParams {
  double l_oc = 0.70710678118654752;  // amplitude transmission
  void validate() const;
};

/// Saturated loss l(psi) = l0 / (1 + |psi|^2 / P_sat) for a single sample.
template <FieldScalar S>
S sa_loss(const SaturableAbsorberParams& p, S power);

template <FieldScalar S>
Field<S> sa_apply(const SaturableAbsorberParams& p, const Field<S>& psi);

/// (1 - l + (2 l^2 / (l0 P_sat)) psi psi^T) u, pointwise; psi_in real.
/// The rank-one term enters with a plus sign: dl/d|psi|^2 = -l^2 / (l0 P_sat).
template <FieldScalar S>
Field<S> sa_linearized(const SaturableAbsorberParams& p, const RealField& psi_in, const Field<S>& u);

/// The pointwise matrix is symmetric, so this is sa_linearized.
template <FieldScalar S>
Field<S> sa_adjoint(const SaturableAbsorberParams& p, const RealField& psi_in, const Field<S>& v);

/// Fourier multiplier exp(i w^2 beta / 2).
template <FieldScalar S>
Field<S> dcf_apply(const DispersionParams& p, const Field<S>& psi);
template <FieldScalar S>
Field<S> dcf_adjoint(const DispersionParams& p, const Field<S>& v);

template <FieldScalar S>
Field<S> oc_apply(const OutputCouplerParams& p, const Field<S>& psi);
template <FieldScalar S>
Field<S> oc_adjoint(const OutputCouplerParams& p, const Field<S>& v);

/// Multiply each frequency bin by the rotation R(phi_k) (real phase per bin).
/// On complexified fields the rotation acts on the channel pair.
template <FieldScalar S>
Field<S> spectral_rotation(const Field<S>& f, std::span<const double> phase);

}  // namespace modelock
