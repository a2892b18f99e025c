#include "modelock/roundtrip.hpp"

#include <cmath>

namespace modelock {

void GridSpec::validate() const {
  if (!(window_ps > 0.0)) throw std::invalid_argument("window_ps must be positive");
  if (samples < 8 || (samples & (samples - 1)) != 0) {
    throw std::invalid_argument("samples must be a power of two >= 8");
  }
}

DispersionParams LaserConfig::dcf() const {
  return {beta_rt - smf1.beta * smf1.length - fa.beta * fa.length - smf2.beta * smf2.length};
}

void LaserConfig::validate() const {
  sa.validate();
  smf1.validate();
  fa.validate();
  smf2.validate();
  dcf().validate();
  oc.validate();
  grid.validate();
  step.validate();
}

std::array<const RealField*, 7> RoundTripOutput::stages() const {
  return {&input, &after_sa, &smf1.output(), &fa.output(), &smf2.output(), &after_dcf, &output};
}

RoundTripOutput round_trip(const LaserConfig& cfg, const RealField& psi0) {
  RoundTripOutput rt;
  rt.input = psi0;
  rt.after_sa = sa_apply(cfg.sa, psi0);
  const RealField a = propagate_nonlinear(cfg.smf1, rt.after_sa, cfg.step, rt.smf1);
  const RealField b = propagate_nonlinear(cfg.fa, a, cfg.step, rt.fa);
  const RealField c = propagate_nonlinear(cfg.smf2, b, cfg.step, rt.smf2);
  rt.after_dcf = dcf_apply(cfg.dcf(), c);
  rt.output = oc_apply(cfg.oc, rt.after_dcf);
  return rt;
}

RealField round_trip_map(const LaserConfig& cfg, const RealField& psi0) {
  RealField f = sa_apply(cfg.sa, psi0);
  f = propagate_nonlinear(cfg.smf1, f, cfg.step);
  f = propagate_nonlinear(cfg.fa, f, cfg.step);
  f = propagate_nonlinear(cfg.smf2, f, cfg.step);
  f = dcf_apply(cfg.dcf(), f);
  return oc_apply(cfg.oc, f);
}

ComplexField round_trip_complex(const LaserConfig& cfg, const ComplexField& psi0) {
  ComplexField f = sa_apply(cfg.sa, psi0);
  f = propagate_nonlinear(cfg.smf1, f, cfg.step);
  f = propagate_nonlinear(cfg.fa, f, cfg.step);
  f = propagate_nonlinear(cfg.smf2, f, cfg.step);
  f = dcf_apply(cfg.dcf(), f);
  return oc_apply(cfg.oc, f);
}

template <FieldScalar S>
Field<S> monodromy_apply(const LaserConfig& cfg, const RoundTripOutput& rt, const Field<S>& u0) {
  Field<S> u = sa_linearized(cfg.sa, rt.input, u0);
  u = propagate_linearized(cfg.smf1, rt.smf1, u, cfg.step);
  u = propagate_linearized(cfg.fa, rt.fa, u, cfg.step);
  u = propagate_linearized(cfg.smf2, rt.smf2, u, cfg.step);
  u = dcf_apply(cfg.dcf(), u);
  return oc_apply(cfg.oc, u);
}

template <FieldScalar S>
Field<S> monodromy_adjoint_apply(const LaserConfig& cfg, const RoundTripOutput& rt, const Field<S>& v0) {
  Field<S> v = oc_adjoint(cfg.oc, v0);
  v = dcf_adjoint(cfg.dcf(), v);
  v = propagate_adjoint(cfg.smf2, rt.smf2, v, cfg.step);
  v = propagate_adjoint(cfg.fa, rt.fa, v, cfg.step);
  v = propagate_adjoint(cfg.smf1, rt.smf1, v, cfg.step);
  return sa_adjoint(cfg.sa, rt.input, v);
}

template <FieldScalar S>
Field<S> modified_monodromy_apply(const LaserConfig& cfg, const RoundTripOutput& rt, double theta,
                                  const Field<S>& u0) {
  auto u = monodromy_apply(cfg, rt, u0);
  return theta == 0.0 ? u : rotate(u, -theta);
}

template RealField monodromy_apply(const LaserConfig&, const RoundTripOutput&, const RealField&);
template ComplexField monodromy_apply(const LaserConfig&, const RoundTripOutput&, const ComplexField&);
template RealField monodromy_adjoint_apply(const LaserConfig&, const RoundTripOutput&, const RealField&);
template ComplexField monodromy_adjoint_apply(const LaserConfig&, const RoundTripOutput&, const ComplexField&);
template RealField modified_monodromy_apply(const LaserConfig&, const RoundTripOutput&, double, const RealField&);
template ComplexField modified_monodromy_apply(const LaserConfig&, const RoundTripOutput&, double,
                                               const ComplexField&);

}  // namespace modelock
