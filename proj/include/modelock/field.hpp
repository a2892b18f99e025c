#pragma once

// Fast-time grid, sampled optical fields and the Fourier transforms used by
// every propagation stage.
//
// A field is stored as two channels (psi1, psi2) = (Re psi, Im psi) of the
// optical envelope in sqrt(W). In "real mode" the channels are doubles. In
// "complexified mode" each channel is itself complex; this is the analytic
// continuation used when a nonlinear map is evaluated at a complex
// perturbation parameter. Every |.|^2 and every L2 pairing then becomes the
// bilinear form psi^T phi (no conjugation).
//
// Transform convention (documented once, asserted in tests):
//
//   F(w_k) = dx / sqrt(2 pi) * sum_j f(x_j) exp(-i w_k x_j)
//   f(x_j) = dw / sqrt(2 pi) * sum_k F(w_k) exp(+i w_k x_j)
//
// so that  dx * sum_j |f_j|^2 == dw * sum_k |F_k|^2  (discrete Parseval).

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace modelock {

using cplx = std::complex<double>;
using lcplx = std::complex<long double>;

template <class S>
concept FieldScalar = std::is_same_v<S, double> || std::is_same_v<S, cplx>;

template <class S>
inline constexpr bool is_real_v = std::is_same_v<S, double>;

/// Uniform periodic grid x_j = -L/2 + j dx on [-L/2, L/2) with angular
/// frequencies in FFT order (DC, positive, then negative; the single Nyquist
/// bin carries -pi/dx).
class FastTimeGrid {
 public:
  FastTimeGrid(double window_ps, std::size_t samples);
  ~FastTimeGrid();
  FastTimeGrid(const FastTimeGrid&) = delete;
  FastTimeGrid& operator=(const FastTimeGrid&) = delete;

  static std::shared_ptr<const FastTimeGrid> make(double window_ps, std::size_t samples);

  std::size_t size() const noexcept { return n_; }
  double window() const noexcept { return window_; }
  double dx() const noexcept { return dx_; }
  double domega() const noexcept { return domega_; }
  double x(std::size_t j) const { return x_[j]; }
  double omega(std::size_t k) const { return omega_[k]; }
  std::span<const double> xs() const noexcept { return x_; }
  std::span<const double> omegas() const noexcept { return omega_; }

  /// Bin holding -omega_k (the Nyquist bin maps to itself).
  std::size_t mirror(std::size_t k) const noexcept { return (n_ - k) & (n_ - 1); }

  bool same_as(const FastTimeGrid& other) const noexcept {
    return this == &other || (n_ == other.n_ && window_ == other.window_);
  }

  // Unnormalized DFTs: out[k] = sum_j in[j] exp(-+2 pi i j k / N).
  // Thread-safe; `in` and `out` must not alias.
  void dft(std::span<const cplx> in, std::span<cplx> out) const;
  void idft(std::span<const cplx> in, std::span<cplx> out) const;
  /// Long-double transforms (plans created on first use; much slower).
  void dft(std::span<const lcplx> in, std::span<lcplx> out) const;
  void idft(std::span<const lcplx> in, std::span<lcplx> out) const;

 private:
  std::size_t n_;
  double window_;
  double dx_;
  double domega_;
  std::vector<double> x_;
  std::vector<double> omega_;
  struct Plans;
  std::unique_ptr<Plans> plans_;
};

using GridPtr = std::shared_ptr<const FastTimeGrid>;

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <FieldScalar S>
class Field {
 public:
  using scalar_type = S;

  Field() = default;
  explicit Field(GridPtr grid);
  Field(GridPtr grid, std::vector<S> re, std::vector<S> im);

  const FastTimeGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return re_.size(); }
  bool empty() const noexcept { return re_.empty(); }

  std::span<S> re() noexcept { return re_; }
  std::span<const S> re() const noexcept { return re_; }
  std::span<S> im() noexcept { return im_; }
  std::span<const S> im() const noexcept { return im_; }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(S factor);
  /// this += factor * other
  Field& add_scaled(S factor, const Field& other);

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(S factor, Field a) { return a *= factor; }

  bool operator==(const Field& other) const {
    return re_ == other.re_ && im_ == other.im_;
  }

 private:
  GridPtr grid_;
  std::vector<S> re_;
  std::vector<S> im_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

template <FieldScalar S>
class SpectralField;

/// Real-mode spectrum. Stores the transform Z of the complex envelope
/// psi1 + i psi2; the per-channel spectra are recoverable from Hermitian
/// symmetry (see to_channels).
template <>
class SpectralField<double> {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid);
  const FastTimeGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return env_.size(); }
  std::span<cplx> envelope() noexcept { return env_; }
  std::span<const cplx> envelope() const noexcept { return env_; }

 private:
  GridPtr grid_;
  std::vector<cplx> env_;
};

/// Complexified spectrum: one transform per channel.
template <>
class SpectralField<cplx> {
 public:
  SpectralField() = default;
  explicit SpectralField(GridPtr grid);
  const FastTimeGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const noexcept { return grid_; }
  std::size_t size() const noexcept { return first_.size(); }
  std::span<cplx> first() noexcept { return first_; }
  std::span<const cplx> first() const noexcept { return first_; }
  std::span<cplx> second() noexcept { return second_; }
  std::span<const cplx> second() const noexcept { return second_; }

 private:
  GridPtr grid_;
  std::vector<cplx> first_;
  std::vector<cplx> second_;
};

// ---------------------------------------------------------------------------
// Functionals

void require_same_grid(const FastTimeGrid& a, const FastTimeGrid& b);

/// dx * sum_j |psi(x_j)|^2 in pJ.
double energy(const RealField& f);

/// dx * sum_j psi^T psi. Equals energy() in real mode.
template <FieldScalar S>
S bilinear_energy(const Field<S>& f);

/// Real-bilinear L2 pairing dx * sum_j f(x_j)^T g(x_j).
template <FieldScalar S, FieldScalar T>
auto inner(const Field<S>& f, const Field<T>& g) -> decltype(S{} * T{}) {
  require_same_grid(f.grid(), g.grid());
  using R = decltype(S{} * T{});
  R acc{};
  const auto fr = f.re(), fi = f.im();
  const auto gr = g.re(), gi = g.im();
  for (std::size_t j = 0; j < f.size(); ++j) acc += fr[j] * gr[j] + fi[j] * gi[j];
  return acc * f.grid().dx();
}

/// Hermitian L2 norm sqrt(dx sum |psi1|^2 + |psi2|^2), in sqrt(pJ).
template <FieldScalar S>
double norm(const Field<S>& f);

/// Absolute L2 distance between two fields on the same grid.
template <FieldScalar S>
double distance(const Field<S>& a, const Field<S>& b);

// ---------------------------------------------------------------------------
// Pointwise maps

/// Pointwise rotation R(theta) = multiplication of the envelope by e^{i theta}.
template <FieldScalar S>
Field<S> rotate(const Field<S>& f, double theta);

/// J psi: rotation by pi/2, exact (no trig round-off).
template <FieldScalar S>
Field<S> apply_j(const Field<S>& f);

/// Cyclic shift: out(x_j) = f(x_{j-m}), m taken modulo N.
template <FieldScalar S>
Field<S> circular_shift(const Field<S>& f, long m);

ComplexField complexify(const RealField& f);
RealField real_part(const ComplexField& f);
RealField imag_part(const ComplexField& f);
/// f + i g
ComplexField combine(const RealField& f, const RealField& g);

/// Interleaved coordinates [psi1(x_0), psi2(x_0), psi1(x_1), ...].
template <FieldScalar S>
std::vector<S> to_coordinates(const Field<S>& f);
template <FieldScalar S>
Field<S> from_coordinates(GridPtr grid, std::span<const S> coords);

// ---------------------------------------------------------------------------
// Transforms

/// Normalized transforms on raw sample arrays; `in` and `out` may alias.
void fourier_forward(const FastTimeGrid& g, std::span<const cplx> in, std::span<cplx> out);
void fourier_inverse(const FastTimeGrid& g, std::span<const cplx> in, std::span<cplx> out);

template <FieldScalar S>
SpectralField<S> forward_transform(const Field<S>& f);
template <FieldScalar S>
Field<S> inverse_transform(const SpectralField<S>& f);

/// Per-channel spectra of a real-mode field (Hermitian pairs).
SpectralField<cplx> to_channels(const SpectralField<double>& f);

/// d/dx by multiplication with i*omega; the Nyquist bin is zeroed.
template <FieldScalar S>
Field<S> spectral_derivative(const Field<S>& f);

}  // namespace modelock
