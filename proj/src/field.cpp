#include "modelock/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

namespace modelock {

namespace {

// The FFTW planner is not thread-safe; execution with the new-array
// interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

thread_local std::vector<cplx> scratch_in;
thread_local std::vector<cplx> scratch_out;

std::span<cplx> scratch(std::vector<cplx>& buf, std::size_t n) {
  if (buf.size() < n) buf.resize(n);
  return {buf.data(), n};
}

}  // namespace

struct FastTimeGrid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  // Long-double plans, created on first use.
  std::once_flag extended_once;
  fftwl_plan forward_l = nullptr;
  fftwl_plan backward_l = nullptr;
};


FastTimeGrid::FastTimeGrid(double window_ps, std::size_t samples)
    : n_(samples), window_(window_ps), plans_(std::make_unique<Plans>()) {
  if (!is_power_of_two(samples) || samples < 8) {
    throw std::invalid_argument("sample count must be a power of two >= 8, got " +
                                std::to_string(samples));
  }
  if (!(window_ps > 0.0) || !std::isfinite(window_ps)) {
    throw std::invalid_argument("window length must be positive");
  }
  dx_ = window_ / static_cast<double>(n_);
  domega_ = 2.0 * std::numbers::pi / window_;
  x_.resize(n_);
  omega_.resize(n_);
  const long half = static_cast<long>(n_ / 2);
  for (std::size_t j = 0; j < n_; ++j) {
    x_[j] = -0.5 * window_ + static_cast<double>(j) * dx_;
    const long signed_k = static_cast<long>(j) < half ? static_cast<long>(j)
                                                      : static_cast<long>(j) - static_cast<long>(n_);
    omega_[j] = static_cast<double>(signed_k) * domega_;
  }

  std::vector<cplx> a(n_), b(n_);
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  const int n = static_cast<int>(n_);
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->backward = fftw_plan_dft_1d(n, in, out, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
}

FastTimeGrid::~FastTimeGrid() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->backward) fftw_destroy_plan(plans_->backward);
  if (plans_->forward_l) fftwl_destroy_plan(plans_->forward_l);
  if (plans_->backward_l) fftwl_destroy_plan(plans_->backward_l);
}

std::shared_ptr<const FastTimeGrid> FastTimeGrid::make(double window_ps, std::size_t samples) {
  return std::make_shared<const FastTimeGrid>(window_ps, samples);
}

void FastTimeGrid::dft(std::span<const cplx> in, std::span<cplx> out) const {
  // FFTW does not write to the input of an out-of-place complex plan.
  fftw_execute_dft(plans_->forward,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

void FastTimeGrid::idft(std::span<const cplx> in, std::span<cplx> out) const {
  fftw_execute_dft(plans_->backward,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

namespace {

void make_extended_plans(std::once_flag& once, fftwl_plan& fwd, fftwl_plan& bwd, std::size_t n) {
  std::call_once(once, [&] {
    std::vector<lcplx> a(n), b(n);
    auto* pa = reinterpret_cast<fftwl_complex*>(a.data());
    auto* pb = reinterpret_cast<fftwl_complex*>(b.data());
    std::lock_guard lock(planner_mutex());
    const int ni = static_cast<int>(n);
    fwd = fftwl_plan_dft_1d(ni, pa, pb, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd = fftwl_plan_dft_1d(ni, pa, pb, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  });
}

}  // namespace

void FastTimeGrid::dft(std::span<const lcplx> in, std::span<lcplx> out) const {
  make_extended_plans(plans_->extended_once, plans_->forward_l, plans_->backward_l, n_);
  fftwl_execute_dft(plans_->forward_l, reinterpret_cast<fftwl_complex*>(const_cast<lcplx*>(in.data())),
                    reinterpret_cast<fftwl_complex*>(out.data()));
}

void FastTimeGrid::idft(std::span<const lcplx> in, std::span<lcplx> out) const {
  make_extended_plans(plans_->extended_once, plans_->forward_l, plans_->backward_l, n_);
  fftwl_execute_dft(plans_->backward_l, reinterpret_cast<fftwl_complex*>(const_cast<lcplx*>(in.data())),
                    reinterpret_cast<fftwl_complex*>(out.data()));
}

void require_same_grid(const FastTimeGrid& a, const FastTimeGrid& b) {
  if (!a.same_as(b)) throw GridMismatch("fields live on different grids");
}

// ---------------------------------------------------------------------------
// Field

template <FieldScalar S>
Field<S>::Field(GridPtr grid)
    : grid_(std::move(grid)), re_(grid_->size(), S{}), im_(grid_->size(), S{}) {}

template <FieldScalar S>
Field<S>::Field(GridPtr grid, std::vector<S> re, std::vector<S> im)
    : grid_(std::move(grid)), re_(std::move(re)), im_(std::move(im)) {
  if (re_.size() != grid_->size() || im_.size() != grid_->size()) {
    throw std::invalid_argument("field sample count does not match grid");
  }
}

template <FieldScalar S>
Field<S>& Field<S>::operator+=(const Field& other) {
  require_same_grid(*grid_, other.grid());
  for (std::size_t j = 0; j < re_.size(); ++j) {
    re_[j] += other.re_[j];
    im_[j] += other.im_[j];
  }
  return *this;
}

template <FieldScalar S>
Field<S>& Field<S>::operator-=(const Field& other) {
  require_same_grid(*grid_, other.grid());
  for (std::size_t j = 0; j < re_.size(); ++j) {
    re_[j] -= other.re_[j];
    im_[j] -= other.im_[j];
  }
  return *this;
}

template <FieldScalar S>
Field<S>& Field<S>::operator*=(S factor) {
  for (std::size_t j = 0; j < re_.size(); ++j) {
    re_[j] *= factor;
    im_[j] *= factor;
  }
  return *this;
}

template <FieldScalar S>
Field<S>& Field<S>::add_scaled(S factor, const Field& other) {
  require_same_grid(*grid_, other.grid());
  for (std::size_t j = 0; j < re_.size(); ++j) {
    re_[j] += factor * other.re_[j];
    im_[j] += factor * other.im_[j];
  }
  return *this;
}

SpectralField<double>::SpectralField(GridPtr grid)
    : grid_(std::move(grid)), env_(grid_->size()) {}

SpectralField<cplx>::SpectralField(GridPtr grid)
    : grid_(std::move(grid)), first_(grid_->size()), second_(grid_->size()) {}

// ---------------------------------------------------------------------------
// Functionals

double energy(const RealField& f) {
  double acc = 0.0;
  const auto re = f.re(), im = f.im();
  for (std::size_t j = 0; j < f.size(); ++j) acc += re[j] * re[j] + im[j] * im[j];
  return acc * f.grid().dx();
}

template <FieldScalar S>
S bilinear_energy(const Field<S>& f) {
  S acc{};
  const auto re = f.re(), im = f.im();
  for (std::size_t j = 0; j < f.size(); ++j) acc += re[j] * re[j] + im[j] * im[j];
  return acc * f.grid().dx();
}

template <FieldScalar S>
double norm(const Field<S>& f) {
  double acc = 0.0;
  const auto re = f.re(), im = f.im();
  for (std::size_t j = 0; j < f.size(); ++j) acc += std::norm(re[j]) + std::norm(im[j]);
  return std::sqrt(acc * f.grid().dx());
}

template <FieldScalar S>
double distance(const Field<S>& a, const Field<S>& b) {
  require_same_grid(a.grid(), b.grid());
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    acc += std::norm(a.re()[j] - b.re()[j]) + std::norm(a.im()[j] - b.im()[j]);
  }
  return std::sqrt(acc * a.grid().dx());
}

// ---------------------------------------------------------------------------
// Pointwise maps

template <FieldScalar S>
Field<S> rotate(const Field<S>& f, double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Field<S> out(f.grid_ptr());
  const auto re = f.re(), im = f.im();
  auto ore = out.re(), oim = out.im();
  for (std::size_t j = 0; j < f.size(); ++j) {
    ore[j] = c * re[j] - s * im[j];
    oim[j] = s * re[j] + c * im[j];
  }
  return out;
}

template <FieldScalar S>
Field<S> apply_j(const Field<S>& f) {
  Field<S> out(f.grid_ptr());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.re()[j] = -f.im()[j];
    out.im()[j] = f.re()[j];
  }
  return out;
}

template <FieldScalar S>
Field<S> circular_shift(const Field<S>& f, long m) {
  const long n = static_cast<long>(f.size());
  const long shift = ((m % n) + n) % n;
  Field<S> out(f.grid_ptr());
  for (long j = 0; j < n; ++j) {
    const auto dst = static_cast<std::size_t>((j + shift) % n);
    out.re()[dst] = f.re()[static_cast<std::size_t>(j)];
    out.im()[dst] = f.im()[static_cast<std::size_t>(j)];
  }
  return out;
}

ComplexField complexify(const RealField& f) {
  ComplexField out(f.grid_ptr());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.re()[j] = f.re()[j];
    out.im()[j] = f.im()[j];
  }
  return out;
}

RealField real_part(const ComplexField& f) {
  RealField out(f.grid_ptr());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.re()[j] = f.re()[j].real();
    out.im()[j] = f.im()[j].real();
  }
  return out;
}

RealField imag_part(const ComplexField& f) {
  RealField out(f.grid_ptr());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.re()[j] = f.re()[j].imag();
    out.im()[j] = f.im()[j].imag();
  }
  return out;
}

ComplexField combine(const RealField& f, const RealField& g) {
  require_same_grid(f.grid(), g.grid());
  ComplexField out(f.grid_ptr());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.re()[j] = {f.re()[j], g.re()[j]};
    out.im()[j] = {f.im()[j], g.im()[j]};
  }
  return out;
}

template <FieldScalar S>
std::vector<S> to_coordinates(const Field<S>& f) {
  std::vector<S> out(2 * f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out[2 * j] = f.re()[j];
    out[2 * j + 1] = f.im()[j];
  }
  return out;
}

template <FieldScalar S>
Field<S> from_coordinates(GridPtr grid, std::span<const S> coords) {
  if (coords.size() != 2 * grid->size()) {
    throw std::invalid_argument("coordinate vector length must be 2N");
  }
  Field<S> out(std::move(grid));
  for (std::size_t j = 0; j < out.size(); ++j) {
    out.re()[j] = coords[2 * j];
    out.im()[j] = coords[2 * j + 1];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transforms
//
// With x_0 = -L/2 the continuum phase exp(-i w_k x_0) reduces to (-1)^k.

void fourier_forward(const FastTimeGrid& g, std::span<const cplx> in, std::span<cplx> out) {
  if (in.data() == out.data()) {
    auto buf = scratch(scratch_in, in.size());
    std::copy(in.begin(), in.end(), buf.begin());
    g.dft(buf, out);
  } else {
    g.dft(in, out);
  }
  const double scale = g.dx() / std::sqrt(2.0 * std::numbers::pi);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= (k & 1U) ? -scale : scale;
}

void fourier_inverse(const FastTimeGrid& g, std::span<const cplx> in, std::span<cplx> out) {
  auto buf = scratch(scratch_in, in.size());
  for (std::size_t k = 0; k < in.size(); ++k) buf[k] = (k & 1U) ? -in[k] : in[k];
  g.idft(buf, out);
  const double scale = g.domega() / std::sqrt(2.0 * std::numbers::pi);
  for (auto& v : out) v *= scale;
}

template <>
SpectralField<double> forward_transform(const RealField& f) {
  SpectralField<double> out(f.grid_ptr());
  auto z = out.envelope();
  for (std::size_t j = 0; j < f.size(); ++j) z[j] = {f.re()[j], f.im()[j]};
  fourier_forward(f.grid(), z, z);
  return out;
}

template <>
SpectralField<cplx> forward_transform(const ComplexField& f) {
  const auto& g = f.grid();
  SpectralField<cplx> out(f.grid_ptr());
  fourier_forward(g, f.re(), out.first());
  fourier_forward(g, f.im(), out.second());
  return out;
}

template <>
RealField inverse_transform(const SpectralField<double>& f) {
  auto buf = scratch(scratch_out, f.size());
  fourier_inverse(f.grid(), f.envelope(), buf);
  RealField out(f.grid_ptr());
  for (std::size_t j = 0; j < f.size(); ++j) {
    out.re()[j] = buf[j].real();
    out.im()[j] = buf[j].imag();
  }
  return out;
}

template <>
ComplexField inverse_transform(const SpectralField<cplx>& f) {
  ComplexField out(f.grid_ptr());
  fourier_inverse(f.grid(), f.first(), out.re());
  fourier_inverse(f.grid(), f.second(), out.im());
  return out;
}

SpectralField<cplx> to_channels(const SpectralField<double>& f) {
  SpectralField<cplx> out(f.grid_ptr());
  const auto z = f.envelope();
  const auto& g = f.grid();
  for (std::size_t k = 0; k < f.size(); ++k) {
    const cplx zm = std::conj(z[g.mirror(k)]);
    out.first()[k] = 0.5 * (z[k] + zm);
    out.second()[k] = cplx(0.0, -0.5) * (z[k] - zm);
  }
  return out;
}

template <FieldScalar S>
Field<S> spectral_derivative(const Field<S>& f) {
  auto spec = forward_transform(f);
  const auto& g = f.grid();
  const std::size_t nyquist = g.size() / 2;
  auto apply = [&](std::span<cplx> z) {
    for (std::size_t k = 0; k < z.size(); ++k) {
      z[k] = (k == nyquist) ? cplx{} : z[k] * cplx(0.0, g.omega(k));
    }
  };
  if constexpr (is_real_v<S>) {
    apply(spec.envelope());
  } else {
    apply(spec.first());
    apply(spec.second());
  }
  return inverse_transform(spec);
}

// ---------------------------------------------------------------------------
// Instantiations

template class Field<double>;
template class Field<cplx>;

template cplx bilinear_energy(const ComplexField&);
template double bilinear_energy(const RealField&);
template double norm(const RealField&);
template double norm(const ComplexField&);
template double distance(const RealField&, const RealField&);
template double distance(const ComplexField&, const ComplexField&);
template RealField rotate(const RealField&, double);
template ComplexField rotate(const ComplexField&, double);
template RealField apply_j(const RealField&);
template ComplexField apply_j(const ComplexField&);
template RealField circular_shift(const RealField&, long);
template ComplexField circular_shift(const ComplexField&, long);
template std::vector<double> to_coordinates(const RealField&);
template std::vector<cplx> to_coordinates(const ComplexField&);
template RealField from_coordinates(GridPtr, std::span<const double>);
template ComplexField from_coordinates(GridPtr, std::span<const cplx>);
template RealField spectral_derivative(const RealField&);
template ComplexField spectral_derivative(const ComplexField&);

}  // namespace modelock
