#include "modelock/fiber.hpp"

#include <cmath>
#include <string>
#include <type_traits>

namespace modelock {

void FiberParams::validate() const {
  if (!(length > 0.0)) throw std::invalid_argument(name + ": length must be positive");
  if (!std::isfinite(beta) || !std::isfinite(gamma)) {
    throw std::invalid_argument(name + ": beta and gamma must be finite");
  }
  if (g0 < 0.0) throw std::invalid_argument(name + ": g0 must be non-negative");
  if (active()) {
    if (!(e_sat > 0.0)) throw std::invalid_argument(name + ": e_sat must be positive");
    if (!(omega_g > 0.0)) throw std::invalid_argument(name + ": omega_g must be positive");
  }
}

std::size_t StepPolicy::steps_for(double length) const {
  const double ratio = length / step_m;
  return static_cast<std::size_t>(std::max(1.0, std::ceil(ratio - 1e-9)));
}

void StepPolicy::validate() const {
  if (!(step_m > 0.0) || !std::isfinite(step_m)) throw std::invalid_argument("step must be positive");
}

void Trajectory::require_match(const FiberParams& p, const StepPolicy& policy) const {
  if (levels_.empty()) throw TrajectoryMismatch(p.name + ": trajectory is empty");
  if (!(p == params_)) throw TrajectoryMismatch(p.name + ": trajectory recorded for different fiber");
  if (!(policy == policy_)) throw TrajectoryMismatch(p.name + ": trajectory recorded with different step policy");
}

std::vector<RealField> Trajectory::snapshots() const {
  std::vector<RealField> out;
  if (levels_.empty()) return out;
  const auto& fine = levels_.back();
  out.reserve(fine.steps.size());
  for (const auto& s : fine.steps) {
    RealField f(input_.grid_ptr());
    for (std::size_t j = 0; j < f.size(); ++j) {
      f.re()[j] = s.kerr_input[j].real();
      f.im()[j] = s.kerr_input[j].imag();
    }
    out.push_back(std::move(f));
  }
  return out;
}

namespace {

constexpr double kRichardson[3] = {1.0 / 21.0, -12.0 / 21.0, 32.0 / 21.0};

// Inside a fiber the spectra are raw DFTs: the exact factor 1/N (N a power
// of two) is folded into the multipliers and spectral pairings carry the
// weight dx/N. A normalized pair would scale by (dx/sqrt(2pi))(dw/sqrt(2pi))N,
// which is 1 only up to an ulp, and that bias compounds over ~1e5 half steps.
//
// T is the working precision of the real-mode state. In double, every step
// rounds a small and nearly constant rotation (dispersive in frequency, Kerr
// in time) of the same sample, so the rounding is coherent and the error
// grows linearly with the step count. Long double pushes that floor down by
// three orders of magnitude.
template <class T>
struct Kernel {
  using C = std::complex<T>;
  T h = 0;
  std::vector<T> a;         // (1 - w^2/Omega^2)/2
  std::vector<T> phase;     // b(w) h / 2
  std::vector<C> rotation;  // exp(i b h / 2) / N
  T inv_n = 1;
  T pair_w = 0;  // dx / N

  Kernel(const FiberParams& p, const FastTimeGrid& g, double step)
      : h(step), inv_n(T(1) / static_cast<T>(g.size())), pair_w(static_cast<T>(g.dx()) / static_cast<T>(g.size())) {
    const std::size_t n = g.size();
    a.resize(n);
    phase.resize(n);
    rotation.resize(n);
    const T beta = p.beta, og = p.omega_g;
    for (std::size_t k = 0; k < n; ++k) {
      const T w = g.omega(k);
      a[k] = p.active() ? T(0.5) * (T(1) - w * w / (og * og)) : T(0);
      phase[k] = T(0.25) * beta * w * w * h;
      rotation[k] = std::polar(inv_n, phase[k]);
    }
  }
};

template <class T>
void raw_forward(const FastTimeGrid& g, std::vector<std::complex<T>>& z) {
  thread_local std::vector<std::complex<T>> buf;
  buf.assign(z.begin(), z.end());
  g.dft(buf, z);
}

// Unnormalized: the caller supplies the 1/N.
template <class T>
void raw_inverse(const FastTimeGrid& g, std::vector<std::complex<T>>& z) {
  thread_local std::vector<std::complex<T>> buf;
  buf.assign(z.begin(), z.end());
  g.idft(buf, z);
}

std::vector<double> level_steps(const FiberParams& p, const StepPolicy& policy) {
  const std::size_t n = policy.steps_for(p.length);
  const double h = p.length / static_cast<double>(n);
  if (!policy.richardson) return {h};
  return {h, h / 2.0, h / 4.0};
}

template <class T>
std::vector<std::complex<T>> envelope_of(const RealField& f) {
  std::vector<std::complex<T>> z(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) z[j] = {f.re()[j], f.im()[j]};
  return z;
}

template <class T>
RealField field_of(const GridPtr& grid, const std::vector<std::complex<T>>& z) {
  RealField f(grid);
  for (std::size_t j = 0; j < z.size(); ++j) {
    f.re()[j] = static_cast<double>(z[j].real());
    f.im()[j] = static_cast<double>(z[j].imag());
  }
  return f;
}

template <class T>
std::vector<cplx> rounded(const std::vector<std::complex<T>>& z) {
  if constexpr (std::is_same_v<T, double>) {
    return z;
  } else {
    std::vector<cplx> out(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) {
      out[j] = {static_cast<double>(z[j].real()), static_cast<double>(z[j].imag())};
    }
    return out;
  }
}

template <class T>
bool all_finite(std::span<const std::complex<T>> z) {
  T acc = 0;
  for (const auto& v : z) acc += v.real() + v.imag();
  return std::isfinite(acc);
}

template <class T>
void check_finite(const std::vector<std::complex<T>>& z, const FiberParams& p, std::size_t step, double h) {
  if (!all_finite<T>(z)) {
    throw PropagationError(p.name + ": non-finite field at step " + std::to_string(step) +
                           " (h = " + std::to_string(h) + " m)");
  }
}

// weight * sum w_k Re(conj(x_k) y_k)
template <class T, class X, class Y>
T weighted_pair(T weight, std::span<const T> w, std::span<const X> x, std::span<const Y> y) {
  T acc = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += w[k] * (T(x[k].real()) * T(y[k].real()) + T(x[k].imag()) * T(y[k].imag()));
  }
  return acc * weight;
}

template <class T, class X, class Y>
T plain_pair(T weight, std::span<const X> x, std::span<const Y> y) {
  T acc = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    acc += T(x[k].real()) * T(y[k].real()) + T(x[k].imag()) * T(y[k].imag());
  }
  return acc * weight;
}

// <psi, L psi> with L = b(w) J in the frequency domain; J is i on the envelope.
template <class T>
T l_pairing(const Kernel<T>& ker, std::span<const std::complex<T>> z) {
  T acc = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    const std::complex<T> jz = std::complex<T>(0, 1) * z[k];
    acc += (2 * ker.phase[k] / ker.h) * (z[k].real() * jz.real() + z[k].imag() * jz.imag());
  }
  return acc * ker.pair_w;
}

template <class T>
struct GainState {
  T g = 0, g2 = 0, big_g = 0, k_pair = 0, l_pair = 0;
};

// g, g2 and the half-step gain integral from the input spectrum z.
template <class T>
GainState<T> half_step_gain(const FiberParams& p, const Kernel<T>& ker, std::span<const std::complex<T>> z) {
  using C = std::complex<T>;
  GainState<T> s;
  const T g0 = p.g0, e_sat = p.e_sat;
  const T e = plain_pair<T, C, C>(ker.pair_w, z, z);
  s.g = g0 / (1 + e / e_sat);
  s.k_pair = weighted_pair<T, C, C>(ker.pair_w, ker.a, z, z);
  s.l_pair = l_pairing(ker, z);
  s.g2 = -2 * s.g * s.g / (g0 * e_sat) * (s.l_pair + s.g * s.k_pair);
  s.big_g = T(0.5) * ker.h * (s.g + T(0.25) * ker.h * s.g2);
  return s;
}

// In-place real-mode half step on a time-domain envelope. Returns G.
template <class T>
T nonlinear_half(const FiberParams& p, const Kernel<T>& ker, const FastTimeGrid& grid,
                 std::vector<std::complex<T>>& psi, HalfStepRecord* rec) {
  raw_forward(grid, psi);
  T big_g = 0;
  if (p.active()) {
    const GainState<T> s = half_step_gain<T>(p, ker, psi);
    big_g = s.big_g;
    if (rec) {
      rec->spectrum = rounded(psi);
      rec->g = static_cast<double>(s.g);
      rec->g2 = static_cast<double>(s.g2);
      rec->big_g = static_cast<double>(s.big_g);
      rec->k_pair = static_cast<double>(s.k_pair);
      rec->l_pair = static_cast<double>(s.l_pair);
    }
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= std::exp(ker.a[k] * big_g) * ker.rotation[k];
  } else {
    for (std::size_t k = 0; k < psi.size(); ++k) psi[k] *= ker.rotation[k];
  }
  raw_inverse(grid, psi);
  return big_g;
}

template <class T>
void nonlinear_kerr(const FiberParams& p, T h, std::vector<std::complex<T>>& psi) {
  if (p.gamma == 0.0) return;
  const T gamma = p.gamma;
  for (auto& v : psi) v *= std::polar(T(1), gamma * std::norm(v) * h);
}

template <class T>
RealField run_level(const FiberParams& p, const RealField& psi_in, double h, std::size_t steps,
                    LevelTrajectory* rec) {
  const auto& grid = psi_in.grid();
  const Kernel<T> ker(p, grid, h);
  auto psi = envelope_of<T>(psi_in);
  T total_gain = 0;
  if (rec) {
    rec->h = h;
    rec->steps.resize(steps);
  }
  for (std::size_t s = 0; s < steps; ++s) {
    StepRecord* sr = rec ? &rec->steps[s] : nullptr;
    total_gain += nonlinear_half(p, ker, grid, psi, sr ? &sr->first : nullptr);
    if (sr) sr->kerr_input = rounded(psi);
    nonlinear_kerr<T>(p, h, psi);
    total_gain += nonlinear_half(p, ker, grid, psi, sr ? &sr->second : nullptr);
    check_finite(psi, p, s, h);
  }
  RealField out = field_of(psi_in.grid_ptr(), psi);
  if (rec) {
    rec->gain_integral = static_cast<double>(total_gain);
    rec->output = out;
  }
  return out;
}

RealField run_level(const FiberParams& p, const RealField& psi_in, double h, std::size_t steps, bool extended,
                    LevelTrajectory* rec) {
  return extended ? run_level<long double>(p, psi_in, h, steps, rec) : run_level<double>(p, psi_in, h, steps, rec);
}

// Complexified nonlinear propagation: channels are complex, every square is
// bilinear.
struct ComplexGain {
  cplx g, big_g;
};

cplx bilinear_weighted(double domega, std::span<const double> w, const FastTimeGrid& grid,
                       std::span<const cplx> f1, std::span<const cplx> f2) {
  cplx acc{};
  for (std::size_t k = 0; k < f1.size(); ++k) {
    const std::size_t m = grid.mirror(k);
    acc += w[k] * (f1[m] * f1[k] + f2[m] * f2[k]);
  }
  return acc * domega;
}

void complex_half(const FiberParams& p, const Kernel<double>& ker, const FastTimeGrid& grid, std::vector<cplx>& c1,
                  std::vector<cplx>& c2) {
  raw_forward(grid, c1);
  raw_forward(grid, c2);
  cplx big_g{};
  if (p.active()) {
    cplx e{};
    for (std::size_t k = 0; k < c1.size(); ++k) {
      const std::size_t m = grid.mirror(k);
      e += c1[m] * c1[k] + c2[m] * c2[k];
    }
    e *= ker.pair_w;
    const cplx g = p.g0 / (1.0 + e / p.e_sat);
    const cplx k_pair = bilinear_weighted(ker.pair_w, ker.a, grid, c1, c2);
    // The bilinear L pairing vanishes identically (L is antisymmetric).
    const cplx g2 = -2.0 * g * g / (p.g0 * p.e_sat) * (g * k_pair);
    big_g = 0.5 * ker.h * (g + 0.25 * ker.h * g2);
  }
  for (std::size_t k = 0; k < c1.size(); ++k) {
    const double c = std::cos(ker.phase[k]), s = std::sin(ker.phase[k]);
    const cplx amp = (p.active() ? std::exp(ker.a[k] * big_g) : cplx(1.0)) * ker.inv_n;
    const cplx a = c1[k], b = c2[k];
    c1[k] = amp * (c * a - s * b);
    c2[k] = amp * (s * a + c * b);
  }
  raw_inverse(grid, c1);
  raw_inverse(grid, c2);
}

void complex_kerr(const FiberParams& p, double h, std::vector<cplx>& c1, std::vector<cplx>& c2) {
  if (p.gamma == 0.0) return;
  for (std::size_t j = 0; j < c1.size(); ++j) {
    const cplx phi = p.gamma * (c1[j] * c1[j] + c2[j] * c2[j]) * h;
    const cplx c = std::cos(phi), s = std::sin(phi);
    const cplx a = c1[j], b = c2[j];
    c1[j] = c * a - s * b;
    c2[j] = s * a + c * b;
  }
}

ComplexField run_level_complex(const FiberParams& p, const ComplexField& psi_in, double h, std::size_t steps) {
  const auto& grid = psi_in.grid();
  const Kernel<double> ker(p, grid, h);
  std::vector<cplx> c1(psi_in.re().begin(), psi_in.re().end());
  std::vector<cplx> c2(psi_in.im().begin(), psi_in.im().end());
  for (std::size_t s = 0; s < steps; ++s) {
    complex_half(p, ker, grid, c1, c2);
    complex_kerr(p, h, c1, c2);
    complex_half(p, ker, grid, c1, c2);
    if (!all_finite<double>(c1) || !all_finite<double>(c2)) {
      throw PropagationError(p.name + ": non-finite complexified field at step " + std::to_string(s));
    }
  }
  return ComplexField(psi_in.grid_ptr(), std::move(c1), std::move(c2));
}

// ---------------------------------------------------------------------------
// Linearized and adjoint half steps on real-mode envelopes.

struct GainCoefficients {
  double alpha1 = 0.0, alpha2 = 0.0, alpha3 = 0.0;
};

GainCoefficients coefficients(const FiberParams& p, const HalfStepRecord& r) {
  GainCoefficients c;
  c.alpha1 = -2.0 * r.g * r.g / (p.g0 * p.e_sat);
  c.alpha2 = 2.0 * r.g * c.alpha1;
  c.alpha3 = (-2.0 * r.g / (p.g0 * p.e_sat)) * (3.0 * r.g * r.k_pair + 2.0 * r.l_pair) * c.alpha1;
  return c;
}

template <class T>
void linear_half(const FiberParams& p, const Kernel<T>& ker, const FastTimeGrid& grid, const HalfStepRecord& r,
                 std::vector<std::complex<T>>& u) {
  using C = std::complex<T>;
  raw_forward(grid, u);
  if (p.active()) {
    const std::span<const cplx> z = r.spectrum;
    const auto c = coefficients(p, r);
    const T dg = T(c.alpha1) * plain_pair<T, cplx, C>(ker.pair_w, z, u);
    const T dg2 = T(-2.0 * r.g / (p.g0 * p.e_sat)) *
                  (T(2.0 * r.g * r.g) * weighted_pair<T, cplx, C>(ker.pair_w, ker.a, z, u) +
                   T(3.0 * r.g * r.k_pair + 2.0 * r.l_pair) * dg);
    const T dbig_g = T(0.5) * ker.h * (dg + T(0.25) * ker.h * dg2);
    const T big_g = r.big_g;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const C zk(z[k].real(), z[k].imag());
      u[k] = std::exp(ker.a[k] * big_g) * ker.rotation[k] * (ker.a[k] * zk * dbig_g + u[k]);
    }
  } else {
    for (std::size_t k = 0; k < u.size(); ++k) u[k] *= ker.rotation[k];
  }
  raw_inverse(grid, u);
}

template <class T>
void adjoint_half(const FiberParams& p, const Kernel<T>& ker, const FastTimeGrid& grid, const HalfStepRecord& r,
                  std::vector<std::complex<T>>& v) {
  using C = std::complex<T>;
  raw_forward(grid, v);
  if (p.active()) {
    const std::span<const cplx> z = r.spectrum;
    const T big_g = r.big_g;
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= std::exp(ker.a[k] * big_g) * std::conj(ker.rotation[k]);
    const T kw = weighted_pair<T, cplx, C>(ker.pair_w, ker.a, z, v);
    const auto c = coefficients(p, r);
    const T pre = T(0.5) * ker.h;
    const T q = T(0.25) * ker.h;
    const T a1 = c.alpha1, a2 = c.alpha2, a3 = c.alpha3;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const C zk(z[k].real(), z[k].imag());
      const C grad = pre * (a1 * zk + q * (a2 * ker.a[k] * zk + a3 * zk));
      v[k] += grad * kw;
    }
  } else {
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= std::conj(ker.rotation[k]);
  }
  raw_inverse(grid, v);
}

template <class T>
void linear_kerr(const FiberParams& p, T h, std::span<const cplx> psi, std::vector<std::complex<T>>& u) {
  using C = std::complex<T>;
  if (p.gamma == 0.0) return;
  const T gamma = p.gamma;
  const T c = 2 * gamma * h;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const C s(psi[j].real(), psi[j].imag());
    const T proj = s.real() * u[j].real() + s.imag() * u[j].imag();
    const C t = u[j] + c * proj * C(-s.imag(), s.real());
    u[j] = std::polar(T(1), gamma * std::norm(s) * h) * t;
  }
}

template <class T>
void adjoint_kerr(const FiberParams& p, T h, std::span<const cplx> psi, std::vector<std::complex<T>>& v) {
  using C = std::complex<T>;
  if (p.gamma == 0.0) return;
  const T gamma = p.gamma;
  const T c = 2 * gamma * h;
  for (std::size_t j = 0; j < v.size(); ++j) {
    const C s(psi[j].real(), psi[j].imag());
    const C w = std::polar(T(1), -gamma * std::norm(s) * h) * v[j];
    // psi^T J w = psi2 w1 - psi1 w2
    const T pj = s.imag() * w.real() - s.real() * w.imag();
    v[j] = w - c * pj * s;
  }
}

template <class T>
RealField linearized_level(const FiberParams& p, const LevelTrajectory& lev, const RealField& u_in) {
  const auto& grid = u_in.grid();
  const Kernel<T> ker(p, grid, lev.h);
  auto u = envelope_of<T>(u_in);
  for (std::size_t s = 0; s < lev.steps.size(); ++s) {
    const auto& st = lev.steps[s];
    linear_half(p, ker, grid, st.first, u);
    linear_kerr<T>(p, lev.h, st.kerr_input, u);
    linear_half(p, ker, grid, st.second, u);
    check_finite(u, p, s, lev.h);
  }
  return field_of(u_in.grid_ptr(), u);
}

template <class T>
RealField adjoint_level(const FiberParams& p, const LevelTrajectory& lev, const RealField& v_in) {
  const auto& grid = v_in.grid();
  const Kernel<T> ker(p, grid, lev.h);
  auto v = envelope_of<T>(v_in);
  for (std::size_t s = lev.steps.size(); s-- > 0;) {
    const auto& st = lev.steps[s];
    adjoint_half(p, ker, grid, st.second, v);
    adjoint_kerr<T>(p, lev.h, st.kerr_input, v);
    adjoint_half(p, ker, grid, st.first, v);
    check_finite(v, p, s, lev.h);
  }
  return field_of(v_in.grid_ptr(), v);
}

RealField linearized_level(const FiberParams& p, const LevelTrajectory& lev, const RealField& u_in, bool extended) {
  return extended ? linearized_level<long double>(p, lev, u_in) : linearized_level<double>(p, lev, u_in);
}

RealField adjoint_level(const FiberParams& p, const LevelTrajectory& lev, const RealField& v_in, bool extended) {
  return extended ? adjoint_level<long double>(p, lev, v_in) : adjoint_level<double>(p, lev, v_in);
}

template <class F>
RealField combine_levels(std::size_t count, F&& level) {
  if (count == 1) return level(0);
  RealField out = level(0);
  out *= kRichardson[0];
  for (std::size_t l = 1; l < count; ++l) out.add_scaled(kRichardson[l], level(l));
  return out;
}

template <class F>
ComplexField split_real(const ComplexField& u, F&& op) {
  return combine(op(real_part(u)), op(imag_part(u)));
}

}  // namespace

// ---------------------------------------------------------------------------
// Public API

double gain(const FiberParams& p, const RealField& psi) {
  return p.g0 / (1.0 + energy(psi) / p.e_sat);
}

cplx gain(const FiberParams& p, const ComplexField& psi) {
  return p.g0 / (1.0 + bilinear_energy(psi) / p.e_sat);
}

double gain_rate_g2(const FiberParams& p, const RealField& psi) {
  if (!p.active()) return 0.0;
  const Kernel<double> ker(p, psi.grid(), 1.0);
  auto z = envelope_of<double>(psi);
  raw_forward(psi.grid(), z);
  return half_step_gain<double>(p, ker, z).g2;
}

template <FieldScalar S>
Field<S> kerr_step(const FiberParams& p, const Field<S>& psi, double h) {
  if constexpr (is_real_v<S>) {
    auto z = envelope_of<double>(psi);
    nonlinear_kerr<double>(p, h, z);
    return field_of(psi.grid_ptr(), z);
  } else {
    std::vector<cplx> c1(psi.re().begin(), psi.re().end());
    std::vector<cplx> c2(psi.im().begin(), psi.im().end());
    complex_kerr(p, h, c1, c2);
    return ComplexField(psi.grid_ptr(), std::move(c1), std::move(c2));
  }
}

template <FieldScalar S>
Field<S> linear_half_step(const FiberParams& p, const Field<S>& psi, S big_g, double h) {
  const Kernel<double> ker(p, psi.grid(), h);
  auto spec = forward_transform(psi);
  auto apply = [&](std::size_t k) { return p.active() ? std::exp(ker.a[k] * big_g) : S(1.0); };
  if constexpr (is_real_v<S>) {
    auto z = spec.envelope();
    for (std::size_t k = 0; k < z.size(); ++k) z[k] *= apply(k) * std::polar(1.0, ker.phase[k]);
  } else {
    auto f1 = spec.first(), f2 = spec.second();
    for (std::size_t k = 0; k < f1.size(); ++k) {
      const double c = std::cos(ker.phase[k]), s = std::sin(ker.phase[k]);
      const cplx a = f1[k], b = f2[k];
      f1[k] = apply(k) * (c * a - s * b);
      f2[k] = apply(k) * (s * a + c * b);
    }
  }
  return inverse_transform(spec);
}

RealField propagate_nonlinear(const FiberParams& p, const RealField& psi_in, const StepPolicy& policy,
                              Trajectory& traj) {
  p.validate();
  policy.validate();
  traj = Trajectory(p, policy);
  traj.set_input(psi_in);
  const auto hs = level_steps(p, policy);
  const std::size_t n = policy.steps_for(p.length);
  traj.levels().resize(hs.size());
  double gain_total = 0.0;
  RealField out = combine_levels(hs.size(), [&](std::size_t l) {
    auto& lev = traj.levels()[l];
    RealField r = run_level(p, psi_in, hs[l], n << l, policy.extended_precision, &lev);
    gain_total += (hs.size() == 1 ? 1.0 : kRichardson[l]) * lev.gain_integral;
    return r;
  });
  traj.set_gain_integral(gain_total);
  traj.set_output(out);
  return out;
}

template <FieldScalar S>
Field<S> propagate_nonlinear(const FiberParams& p, const Field<S>& psi_in, const StepPolicy& policy) {
  p.validate();
  policy.validate();
  const auto hs = level_steps(p, policy);
  const std::size_t n = policy.steps_for(p.length);
  if constexpr (is_real_v<S>) {
    return combine_levels(hs.size(), [&](std::size_t l) {
      return run_level(p, psi_in, hs[l], n << l, policy.extended_precision, nullptr);
    });
  } else {
    ComplexField out = run_level_complex(p, psi_in, hs[0], n);
    if (hs.size() == 1) return out;
    out *= cplx(kRichardson[0]);
    for (std::size_t l = 1; l < hs.size(); ++l) {
      out.add_scaled(cplx(kRichardson[l]), run_level_complex(p, psi_in, hs[l], n << l));
    }
    return out;
  }
}

template <FieldScalar S>
Field<S> propagate_linearized(const FiberParams& p, const Trajectory& traj, const Field<S>& u_in,
                              const StepPolicy& policy) {
  traj.require_match(p, policy);
  require_same_grid(traj.input().grid(), u_in.grid());
  if constexpr (is_real_v<S>) {
    const auto& levels = traj.levels();
    return combine_levels(levels.size(), [&](std::size_t l) {
      return linearized_level(p, levels[l], u_in, policy.extended_precision);
    });
  } else {
    return split_real(u_in, [&](const RealField& part) { return propagate_linearized(p, traj, part, policy); });
  }
}

template <FieldScalar S>
Field<S> propagate_adjoint(const FiberParams& p, const Trajectory& traj, const Field<S>& v_in,
                           const StepPolicy& policy) {
  traj.require_match(p, policy);
  require_same_grid(traj.input().grid(), v_in.grid());
  if constexpr (is_real_v<S>) {
    const auto& levels = traj.levels();
    return combine_levels(levels.size(), [&](std::size_t l) {
      return adjoint_level(p, levels[l], v_in, policy.extended_precision);
    });
  } else {
    return split_real(v_in, [&](const RealField& part) { return propagate_adjoint(p, traj, part, policy); });
  }
}

template RealField kerr_step(const FiberParams&, const RealField&, double);
template ComplexField kerr_step(const FiberParams&, const ComplexField&, double);
template RealField linear_half_step(const FiberParams&, const RealField&, double, double);
template ComplexField linear_half_step(const FiberParams&, const ComplexField&, cplx, double);
template RealField propagate_nonlinear(const FiberParams&, const RealField&, const StepPolicy&);
template ComplexField propagate_nonlinear(const FiberParams&, const ComplexField&, const StepPolicy&);
template RealField propagate_linearized(const FiberParams&, const Trajectory&, const RealField&, const StepPolicy&);
template ComplexField propagate_linearized(const FiberParams&, const Trajectory&, const ComplexField&,
                                           const StepPolicy&);
template RealField propagate_adjoint(const FiberParams&, const Trajectory&, const RealField&, const StepPolicy&);
template ComplexField propagate_adjoint(const FiberParams&, const Trajectory&, const ComplexField&,
                                        const StepPolicy&);

}  // namespace modelock
