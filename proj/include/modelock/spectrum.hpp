#pragma once

// Dense spectral analysis of the modified monodromy operator R(-theta) o M.

#include <array>
#include <string>
#include <vector>

#include "modelock/roundtrip.hpp"

namespace modelock {

struct MonodromyMatrix {
  GridPtr grid;
  RealField base;  // psi0
  double theta = 0.0;
  std::size_t dim = 0;       // 2N
  std::vector<double> data;  // column-major dim x dim, interleaved coordinates

  double operator()(std::size_t row, std::size_t col) const { return data[col * dim + row]; }
  std::vector<double> apply(const std::vector<double>& u) const;
};

class AssemblyError : public std::runtime_error {
 public:
  AssemblyError(std::size_t column, const std::string& what);
  std::size_t column() const { return column_; }

 private:
  std::size_t column_;
};

/// Column k is R(-theta) M e_k. Columns are independent OpenMP tasks;
/// tasks == 0 uses the OpenMP default.
MonodromyMatrix assemble_matrix(const LaserConfig& cfg, const RoundTripOutput& rt, double theta,
                                std::size_t tasks = 0);
/// Single-threaded reference assembly.
MonodromyMatrix assemble_matrix_serial(const LaserConfig& cfg, const RoundTripOutput& rt, double theta);

struct EssentialSpectrumCurve {
  std::vector<double> omega;  // rad/ps, ascending, >= 0
  std::vector<cplx> plus, minus;
  double gain_integral = 0.0;
  double theta = 0.0;
};

/// lambda_pm(w) = l_oc (1 - l0) exp{(1 - w^2/Omega_g^2) G / 2} exp{+-i (beta_rt w^2 / 2 - theta)}
EssentialSpectrumCurve essential_curve(const LaserConfig& cfg, double gain_integral, double theta,
                                       std::vector<double> omegas);
/// Curve sampled on the non-negative frequencies of the grid.
EssentialSpectrumCurve essential_curve(const LaserConfig& cfg, double gain_integral, double theta);

enum class SpectralClass { unit_pair, discrete, essential_adjacent };
std::string to_string(SpectralClass c);

struct SpectrumReport {
  std::vector<cplx> eigenvalues;          // decreasing magnitude
  std::vector<ComplexField> eigenvectors;  // first top_k, unit L2, largest sample real-positive
  std::vector<SpectralClass> classes;      // empty until classify()
  EssentialSpectrumCurve curve;
  std::size_t discrete_count = 0;  // eigenvalues off the essential spectrum, unit pair included
  double stability_margin = 0.0;   // sup |lambda| outside the unit pair
};

/// Full dense eigendecomposition (LAPACK dgeev).
SpectrumReport eigendecompose(const MonodromyMatrix& m, std::size_t top_k);

/// Phase and translation eigenfunctions J psi0 and d psi0/dx, unit L2.
struct TheoreticalPair {
  RealField phase;
  RealField translation;
};
TheoreticalPair theoretical_eigenpairs(const RealField& psi0);

/// Pointwise amplitude ||u(x)|| of a complexified eigenvector.
std::vector<double> amplitude(const ComplexField& u);

/// min_c ||c u - target|| / ||target|| over complex scalars c.
double aligned_error(const ComplexField& u, const RealField& target);

/// min ||w - target|| / ||target|| over w in the complex span of basis.
double span_aligned_error(const std::vector<ComplexField>& basis, const RealField& target);

/// The unit eigenvalue is double (numerically two eigenvalues ~1e-11 apart),
/// so the solver's basis of its eigenspace is arbitrary. The check compares
/// the theoretical pair with the eigenspace; `raw_*` compares them with the
/// individual solver vectors.
struct UnitPairCheck {
  std::array<std::size_t, 2> index{};  // positions in the eigenvalue list
  std::array<double, 2> eigen_error{};  // |lambda - 1|
  double phase_error = 0.0;
  double translation_error = 0.0;
  double raw_phase_error = 0.0;
  double raw_translation_error = 0.0;
  ComplexField phase_vector;  // eigenspace member closest to J psi0, unit L2
  ComplexField translation_vector;
};
UnitPairCheck check_unit_pair(const SpectrumReport& report, const TheoreticalPair& theory);

/// Distance from z to the sampled curve (both branches and the origin) and
/// the curve's local sample spacing there.
struct CurveProximity {
  double distance = 0.0;
  double spacing = 0.0;
};
CurveProximity curve_proximity(const EssentialSpectrumCurve& curve, cplx z);

/// Negative dist_tol selects the default: twice the local curve spacing.
void classify(SpectrumReport& report, const EssentialSpectrumCurve& curve, double dist_tol = -1.0);

/// Assemble, decompose and classify at a converged pulse.
SpectrumReport analyze_spectrum(const LaserConfig& cfg, const RealField& psi0, double theta, std::size_t top_k,
                                std::size_t tasks = 0);

}  // namespace modelock
