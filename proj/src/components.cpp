#include "modelock/components.hpp"

#include <cmath>
#include <stdexcept>

namespace modelock {

void SaturableAbsorberParams::validate() const {
  if (!(l0 >= 0.0 && l0 < 1.0)) throw std::invalid_argument("sa l0 must lie in [0,1)");
  if (!(p_sat > 0.0)) throw std::invalid_argument("sa p_sat must be positive");
}

void DispersionParams::validate() const {
  if (!std::isfinite(beta)) throw std::invalid_argument("dcf beta must be finite");
}

void OutputCouplerParams::validate() const {
  if (!(l_oc > 0.0 && l_oc <= 1.0)) throw std::invalid_argument("oc l_oc must lie in (0,1]");
}

template <FieldScalar S>
S sa_loss(const SaturableAbsorberParams& p, S power) {
  return p.l0 / (1.0 + power / p.p_sat);
}

template <FieldScalar S>
Field<S> sa_apply(const SaturableAbsorberParams& p, const Field<S>& psi) {
  Field<S> out(psi.grid_ptr());
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const S a = psi.re()[j], b = psi.im()[j];
    const S factor = 1.0 - sa_loss<S>(p, a * a + b * b);
    out.re()[j] = factor * a;
    out.im()[j] = factor * b;
  }
  return out;
}

template <FieldScalar S>
Field<S> sa_linearized(const SaturableAbsorberParams& p, const RealField& psi_in, const Field<S>& u) {
  require_same_grid(psi_in.grid(), u.grid());
  Field<S> out(u.grid_ptr());
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double a = psi_in.re()[j], b = psi_in.im()[j];
    const double q = 1.0 / (1.0 + (a * a + b * b) / p.p_sat);
    const double l = p.l0 * q;
    const double rank1 = 2.0 * l * q / p.p_sat;
    const S ua = u.re()[j], ub = u.im()[j];
    const S proj = a * ua + b * ub;
    out.re()[j] = (1.0 - l) * ua + rank1 * a * proj;
    out.im()[j] = (1.0 - l) * ub + rank1 * b * proj;
  }
  return out;
}

template <FieldScalar S>
Field<S> sa_adjoint(const SaturableAbsorberParams& p, const RealField& psi_in, const Field<S>& v) {
  return sa_linearized(p, psi_in, v);
}

template <FieldScalar S>
Field<S> spectral_rotation(const Field<S>& f, std::span<const double> phase) {
  auto spec = forward_transform(f);
  if constexpr (is_real_v<S>) {
    auto z = spec.envelope();
    for (std::size_t k = 0; k < z.size(); ++k) z[k] *= std::polar(1.0, phase[k]);
  } else {
    auto f1 = spec.first(), f2 = spec.second();
    for (std::size_t k = 0; k < f1.size(); ++k) {
      const double c = std::cos(phase[k]), s = std::sin(phase[k]);
      const cplx a = f1[k], b = f2[k];
      f1[k] = c * a - s * b;
      f2[k] = s * a + c * b;
    }
  }
  return inverse_transform(spec);
}

namespace {

std::vector<double> dcf_phase(const FastTimeGrid& g, double beta) {
  std::vector<double> phase(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) phase[k] = 0.5 * beta * g.omega(k) * g.omega(k);
  return phase;
}

}  // namespace

template <FieldScalar S>
Field<S> dcf_apply(const DispersionParams& p, const Field<S>& psi) {
  if (p.beta == 0.0) return psi;
  return spectral_rotation(psi, dcf_phase(psi.grid(), p.beta));
}

template <FieldScalar S>
Field<S> dcf_adjoint(const DispersionParams& p, const Field<S>& v) {
  if (p.beta == 0.0) return v;
  return spectral_rotation(v, dcf_phase(v.grid(), -p.beta));
}

template <FieldScalar S>
Field<S> oc_apply(const OutputCouplerParams& p, const Field<S>& psi) {
  Field<S> out = psi;
  out *= S(p.l_oc);
  return out;
}

template <FieldScalar S>
Field<S> oc_adjoint(const OutputCouplerParams& p, const Field<S>& v) {
  return oc_apply(p, v);
}

template double sa_loss(const SaturableAbsorberParams&, double);
template cplx sa_loss(const SaturableAbsorberParams&, cplx);
template RealField sa_apply(const SaturableAbsorberParams&, const RealField&);
template ComplexField sa_apply(const SaturableAbsorberParams&, const ComplexField&);
template RealField sa_linearized(const SaturableAbsorberParams&, const RealField&, const RealField&);
template ComplexField sa_linearized(const SaturableAbsorberParams&, const RealField&, const ComplexField&);
template RealField sa_adjoint(const SaturableAbsorberParams&, const RealField&, const RealField&);
template ComplexField sa_adjoint(const SaturableAbsorberParams&, const RealField&, const ComplexField&);
template RealField spectral_rotation(const RealField&, std::span<const double>);
template ComplexField spectral_rotation(const ComplexField&, std::span<const double>);
template RealField dcf_apply(const DispersionParams&, const RealField&);
template ComplexField dcf_apply(const DispersionParams&, const ComplexField&);
template RealField dcf_adjoint(const DispersionParams&, const RealField&);
template ComplexField dcf_adjoint(const DispersionParams&, const ComplexField&);
template RealField oc_apply(const OutputCouplerParams&, const RealField&);
template ComplexField oc_apply(const OutputCouplerParams&, const ComplexField&);
template RealField oc_adjoint(const OutputCouplerParams&, const RealField&);
template ComplexField oc_adjoint(const OutputCouplerParams&, const ComplexField&);

}  // namespace modelock
