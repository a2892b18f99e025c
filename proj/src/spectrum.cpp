#include "modelock/spectrum.hpp"

#include <lapacke.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace modelock {

std::vector<double> MonodromyMatrix::apply(const std::vector<double>& u) const {
  if (u.size() != dim) throw std::invalid_argument("vector length does not match matrix dimension");
  std::vector<double> out(dim, 0.0);
  for (std::size_t c = 0; c < dim; ++c) {
    const double uc = u[c];
    if (uc == 0.0) continue;
    const double* col = &data[c * dim];
    for (std::size_t r = 0; r < dim; ++r) out[r] += col[r] * uc;
  }
  return out;
}

AssemblyError::AssemblyError(std::size_t column, const std::string& what)
    : std::runtime_error("monodromy column " + std::to_string(column) + ": " + what), column_(column) {}

namespace {

MonodromyMatrix empty_matrix(const RoundTripOutput& rt, double theta) {
  MonodromyMatrix m;
  m.grid = rt.input.grid_ptr();
  m.base = rt.input;
  m.theta = theta;
  m.dim = 2 * m.grid->size();
  m.data.assign(m.dim * m.dim, 0.0);
  return m;
}

void fill_column(const LaserConfig& cfg, const RoundTripOutput& rt, MonodromyMatrix& m, std::size_t k) {
  RealField e(m.grid);
  (k % 2 == 0 ? e.re() : e.im())[k / 2] = 1.0;
  const RealField col = modified_monodromy_apply(cfg, rt, m.theta, e);
  double* dst = &m.data[k * m.dim];
  for (std::size_t j = 0; j < col.size(); ++j) {
    dst[2 * j] = col.re()[j];
    dst[2 * j + 1] = col.im()[j];
  }
  for (std::size_t r = 0; r < m.dim; ++r) {
    if (!std::isfinite(dst[r])) throw AssemblyError(k, "non-finite entry");
  }
}

}  // namespace

MonodromyMatrix assemble_matrix(const LaserConfig& cfg, const RoundTripOutput& rt, double theta, std::size_t tasks) {
  MonodromyMatrix m = empty_matrix(rt, theta);
  const long n = static_cast<long>(m.dim);
  const int threads = tasks == 0 ? omp_get_max_threads() : static_cast<int>(tasks);
  long failed = -1;
  std::string message;
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (long k = 0; k < n; ++k) {
    try {
      fill_column(cfg, rt, m, static_cast<std::size_t>(k));
    } catch (const std::exception& ex) {
#pragma omp critical(modelock_assembly_error)
      if (failed < 0 || k < failed) {
        failed = k;
        message = ex.what();
      }
    }
  }
  if (failed >= 0) throw AssemblyError(static_cast<std::size_t>(failed), message);
  return m;
}

MonodromyMatrix assemble_matrix_serial(const LaserConfig& cfg, const RoundTripOutput& rt, double theta) {
  MonodromyMatrix m = empty_matrix(rt, theta);
  for (std::size_t k = 0; k < m.dim; ++k) {
    try {
      fill_column(cfg, rt, m, k);
    } catch (const AssemblyError&) {
      throw;
    } catch (const std::exception& ex) {
      throw AssemblyError(k, ex.what());
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Essential spectrum

EssentialSpectrumCurve essential_curve(const LaserConfig& cfg, double gain_integral, double theta,
                                       std::vector<double> omegas) {
  EssentialSpectrumCurve c;
  c.gain_integral = gain_integral;
  c.theta = theta;
  c.omega = std::move(omegas);
  const double scale = cfg.oc.l_oc * (1.0 - cfg.sa.l0);
  const double og2 = cfg.fa.omega_g * cfg.fa.omega_g;
  c.plus.reserve(c.omega.size());
  c.minus.reserve(c.omega.size());
  for (const double w : c.omega) {
    const double mag = scale * std::exp(0.5 * (1.0 - w * w / og2) * gain_integral);
    const double arg = 0.5 * cfg.beta_rt * w * w - theta;
    c.plus.push_back(std::polar(mag, arg));
    c.minus.push_back(std::polar(mag, -arg));
  }
  return c;
}

EssentialSpectrumCurve essential_curve(const LaserConfig& cfg, double gain_integral, double theta) {
  const auto grid = cfg.make_grid();
  std::vector<double> w;
  for (std::size_t k = 0; k <= grid->size() / 2; ++k) w.push_back(k * grid->domega());
  return essential_curve(cfg, gain_integral, theta, std::move(w));
}

std::string to_string(SpectralClass c) {
  switch (c) {
    case SpectralClass::unit_pair: return "unit-pair";
    case SpectralClass::discrete: return "discrete";
    case SpectralClass::essential_adjacent: return "essential-adjacent";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Eigendecomposition

SpectrumReport eigendecompose(const MonodromyMatrix& m, std::size_t top_k) {
  const lapack_int n = static_cast<lapack_int>(m.dim);
  std::vector<double> a = m.data;
  std::vector<double> wr(n), wi(n), vr(static_cast<std::size_t>(n) * n);
  const lapack_int info =
      LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, wr.data(), wi.data(), nullptr, 1, vr.data(), n);
  if (info != 0) {
    throw std::runtime_error("dgeev failed with info = " + std::to_string(info) +
                             (info > 0 ? " (QR iteration did not converge)" : " (illegal argument)"));
  }

  // Column index holding the real part for eigenvalue i, and the sign of
  // the imaginary part column.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const double ai = std::hypot(wr[i], wi[i]), aj = std::hypot(wr[j], wi[j]);
    if (ai != aj) return ai > aj;
    return wi[i] > wi[j];
  });

  SpectrumReport rep;
  rep.eigenvalues.reserve(n);
  for (const auto i : order) rep.eigenvalues.emplace_back(wr[i], wi[i]);

  const std::size_t k = std::min<std::size_t>(top_k, n);
  for (std::size_t t = 0; t < k; ++t) {
    const std::size_t i = order[t];
    // dgeev stores a conjugate pair as (Re, Im) in columns i, i+1 of the
    // first member (positive imaginary part).
    std::size_t re_col = i;
    double im_sign = 0.0;
    if (wi[i] > 0.0) {
      im_sign = 1.0;
    } else if (wi[i] < 0.0) {
      re_col = i - 1;
      im_sign = -1.0;
    }
    std::vector<cplx> coords(m.dim);
    for (std::size_t r = 0; r < m.dim; ++r) {
      const double re = vr[re_col * m.dim + r];
      const double im = im_sign == 0.0 ? 0.0 : im_sign * vr[(re_col + 1) * m.dim + r];
      coords[r] = {re, im};
    }
    ComplexField u = from_coordinates<cplx>(m.grid, coords);
    const double nrm = norm(u);
    std::size_t peak = 0;
    for (std::size_t r = 0; r < m.dim; ++r) {
      if (std::abs(coords[r]) > std::abs(coords[peak])) peak = r;
    }
    const cplx phase = std::conj(coords[peak]) / std::abs(coords[peak]);
    u *= phase / nrm;
    rep.eigenvectors.push_back(std::move(u));
  }
  return rep;
}

TheoreticalPair theoretical_eigenpairs(const RealField& psi0) {
  TheoreticalPair p{apply_j(psi0), spectral_derivative(psi0)};
  const double np = norm(p.phase), nt = norm(p.translation);
  if (!(np > 0.0) || !(nt > 0.0)) throw std::invalid_argument("theoretical eigenfunctions need a nonzero pulse");
  p.phase *= 1.0 / np;
  p.translation *= 1.0 / nt;
  return p;
}

std::vector<double> amplitude(const ComplexField& u) {
  std::vector<double> a(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) a[j] = std::sqrt(std::norm(u.re()[j]) + std::norm(u.im()[j]));
  return a;
}

double aligned_error(const ComplexField& u, const RealField& target) {
  require_same_grid(u.grid(), target.grid());
  cplx ut{};
  double uu = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    ut += std::conj(u.re()[j]) * target.re()[j] + std::conj(u.im()[j]) * target.im()[j];
    uu += std::norm(u.re()[j]) + std::norm(u.im()[j]);
  }
  const cplx c = ut / uu;
  ComplexField diff = u;
  diff *= c;
  diff -= complexify(target);
  return norm(diff) / norm(target);
}

namespace {

cplx hermitian(const ComplexField& a, const ComplexField& b) {
  cplx acc{};
  for (std::size_t j = 0; j < a.size(); ++j) {
    acc += std::conj(a.re()[j]) * b.re()[j] + std::conj(a.im()[j]) * b.im()[j];
  }
  return acc * a.grid().dx();
}

// Orthogonal projection of target onto span(basis), via modified Gram-Schmidt.
ComplexField project(const std::vector<ComplexField>& basis, const ComplexField& target) {
  std::vector<ComplexField> q;
  for (const auto& b : basis) {
    ComplexField v = b;
    for (const auto& e : q) v.add_scaled(-hermitian(e, v), e);
    const double n = norm(v);
    if (n > 0.0) {
      v *= cplx(1.0 / n);
      q.push_back(std::move(v));
    }
  }
  ComplexField out(target.grid_ptr());
  for (const auto& e : q) out.add_scaled(hermitian(e, target), e);
  return out;
}

ComplexField normalized(ComplexField u) {
  const double n = norm(u);
  if (n > 0.0) u *= cplx(1.0 / n);
  return u;
}

}  // namespace

double span_aligned_error(const std::vector<ComplexField>& basis, const RealField& target) {
  if (basis.empty()) throw std::invalid_argument("empty basis");
  require_same_grid(basis.front().grid(), target.grid());
  const ComplexField t = complexify(target);
  return distance(project(basis, t), t) / norm(t);
}

UnitPairCheck check_unit_pair(const SpectrumReport& report, const TheoreticalPair& theory) {
  UnitPairCheck c;
  std::size_t found = 0;
  for (std::size_t i = 0; i < report.classes.size() && found < 2; ++i) {
    if (report.classes[i] == SpectralClass::unit_pair) c.index[found++] = i;
  }
  if (found < 2) throw std::invalid_argument("report has no classified unit pair");
  if (c.index[1] >= report.eigenvectors.size()) {
    throw std::invalid_argument("unit-pair eigenvectors are outside the stored top-k");
  }
  const std::vector<ComplexField> basis{report.eigenvectors[c.index[0]], report.eigenvectors[c.index[1]]};
  for (std::size_t i = 0; i < 2; ++i) c.eigen_error[i] = std::abs(report.eigenvalues[c.index[i]] - 1.0);

  c.phase_error = span_aligned_error(basis, theory.phase);
  c.translation_error = span_aligned_error(basis, theory.translation);
  c.raw_phase_error = std::min(aligned_error(basis[0], theory.phase), aligned_error(basis[1], theory.phase));
  c.raw_translation_error =
      std::min(aligned_error(basis[0], theory.translation), aligned_error(basis[1], theory.translation));
  c.phase_vector = normalized(project(basis, complexify(theory.phase)));
  c.translation_vector = normalized(project(basis, complexify(theory.translation)));
  return c;
}

// ---------------------------------------------------------------------------
// Classification

CurveProximity curve_proximity(const EssentialSpectrumCurve& curve, cplx z) {
  CurveProximity best{std::abs(z), 0.0};  // the origin belongs to the essential spectrum
  bool origin = true;
  for (const auto* branch : {&curve.plus, &curve.minus}) {
    const auto& pts = *branch;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const cplx a = pts[i], b = pts[i + 1];
      const cplx ab = b - a;
      const double len2 = std::norm(ab);
      double t = len2 > 0.0 ? ((z - a) * std::conj(ab)).real() / len2 : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      const double d = std::abs(z - (a + t * ab));
      if (d < best.distance) {
        best = {d, std::sqrt(len2)};
        origin = false;
      }
    }
  }
  if (origin && !curve.plus.empty()) {
    best.spacing = std::abs(curve.plus.back() - curve.plus[curve.plus.size() - 2]);
  }
  return best;
}

void classify(SpectrumReport& report, const EssentialSpectrumCurve& curve, double dist_tol) {
  const auto& ev = report.eigenvalues;
  report.curve = curve;
  report.classes.assign(ev.size(), SpectralClass::discrete);

  // The two eigenvalues nearest 1 form the unit pair.
  std::vector<std::size_t> idx(ev.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t unit = std::min<std::size_t>(2, ev.size());
  std::partial_sort(idx.begin(), idx.begin() + unit, idx.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(ev[a] - 1.0) < std::abs(ev[b] - 1.0);
  });
  for (std::size_t i = 0; i < unit; ++i) report.classes[idx[i]] = SpectralClass::unit_pair;

  report.discrete_count = 0;
  report.stability_margin = 0.0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (report.classes[i] == SpectralClass::unit_pair) {
      ++report.discrete_count;
      continue;
    }
    report.stability_margin = std::max(report.stability_margin, std::abs(ev[i]));
    const auto prox = curve_proximity(curve, ev[i]);
    const double tol = dist_tol < 0.0 ? 2.0 * prox.spacing : dist_tol;
    if (prox.distance < tol) {
      report.classes[i] = SpectralClass::essential_adjacent;
    } else {
      ++report.discrete_count;
    }
  }
}

SpectrumReport analyze_spectrum(const LaserConfig& cfg, const RealField& psi0, double theta, std::size_t top_k,
                                std::size_t tasks) {
  const auto rt = round_trip(cfg, psi0);
  const auto m = assemble_matrix(cfg, rt, theta, tasks);
  auto rep = eigendecompose(m, top_k);
  classify(rep, essential_curve(cfg, rt.gain_integral(), theta));
  return rep;
}

}  // namespace modelock
