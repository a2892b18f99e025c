#include "modelock/verification.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "modelock/optimizer.hpp"

namespace modelock {

std::string to_string(StudyTarget t) {
  switch (t) {
    case StudyTarget::roundtrip: return "R";
    case StudyTarget::linearized: return "M";
    case StudyTarget::adjoint: return "M*";
  }
  return "?";
}

StudyTarget parse_study_target(const std::string& s) {
  if (s == "R") return StudyTarget::roundtrip;
  if (s == "M") return StudyTarget::linearized;
  if (s == "M*" || s == "Mstar" || s == "adjoint") return StudyTarget::adjoint;
  throw std::invalid_argument("unknown study target '" + s + "' (expected R, M or M*)");
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("slope fit needs matching samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceStudy convergence_study(const LaserConfig& cfg, const RealField& psi0, StudyTarget target,
                                   const std::vector<double>& dt_list, double dt_ref, double fit_min,
                                   double fit_max, const RealField* direction) {
  for (const double dt : dt_list) {
    if (!(dt_ref < dt / 5.0)) throw std::invalid_argument("reference step must be below a fifth of every step");
  }
  ConvergenceStudy study;
  study.target = target;
  study.dt_ref = dt_ref;
  study.fit_min = fit_min;
  study.fit_max = fit_max;

  auto at_step = [&](double dt) {
    LaserConfig c = cfg;
    c.step.step_m = dt;
    c.step.extended_precision = true;
    return c;
  };
  const RealField u0 = direction ? *direction : apply_j(psi0);

  // The adjoint direction is fixed once, from the reference solution.
  RealField v0;
  const LaserConfig ref_cfg = at_step(dt_ref);
  if (target == StudyTarget::adjoint) {
    const auto ev = evaluate_poincare(ref_cfg, psi0, false);
    v0 = ev.residual;
  }

  auto solve = [&](const LaserConfig& c) -> RealField {
    switch (target) {
      case StudyTarget::roundtrip: return round_trip_map(c, psi0);
      case StudyTarget::linearized: return monodromy_apply(c, round_trip(c, psi0), u0);
      case StudyTarget::adjoint: return monodromy_adjoint_apply(c, round_trip(c, psi0), v0);
    }
    throw std::logic_error("unreachable");
  };

  const RealField reference = solve(ref_cfg);
  const double ref_scale = norm(reference);

  study.points.resize(dt_list.size());
  const auto count = static_cast<std::ptrdiff_t>(dt_list.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    ConvergencePoint& pt = study.points[static_cast<std::size_t>(i)];
    pt.dt = dt_list[static_cast<std::size_t>(i)];
    try {
      const RealField approx = solve(at_step(pt.dt));
      pt.abs_error = distance(approx, reference);
      pt.rel_error = pt.abs_error / ref_scale;
      if (!std::isfinite(pt.abs_error)) throw PropagationError("non-finite error");
    } catch (const std::exception& ex) {
      pt.ok = false;
      pt.failure = ex.what();
    }
  }
  std::vector<double> fx, fy;
  for (const auto& pt : study.points) {
    if (pt.ok && pt.abs_error > 0.0 && pt.dt >= fit_min && pt.dt <= fit_max) {
      fx.push_back(pt.dt);
      fy.push_back(pt.abs_error);
    }
  }
  study.slope = fx.size() >= 3 ? loglog_slope(fx, fy) : std::numeric_limits<double>::quiet_NaN();
  return study;
}

// ---------------------------------------------------------------------------
// Spectral differentiation on a complex circle

ComplexField fornberg_derivative(const LaserConfig& cfg, const RealField& psi0, const RealField& u0, double r,
                                 std::size_t samples) {
  if (samples < 4) throw std::invalid_argument("fornberg needs at least 4 samples");
  if (!(r > 0.0)) throw std::invalid_argument("fornberg radius must be positive");
  const ComplexField base = complexify(psi0);
  const ComplexField dir = complexify(u0);
  ComplexField acc(psi0.grid_ptr());
  for (std::size_t m = 0; m < samples; ++m) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(samples);
    const cplx z = std::polar(r, t);
    ComplexField arg = base;
    arg.add_scaled(z, dir);
    const ComplexField f = round_trip_complex(cfg, arg);
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (!std::isfinite(std::abs(f.re()[j])) || !std::isfinite(std::abs(f.im()[j]))) {
        throw PropagationError("complexified round trip produced NaN; radius too large");
      }
    }
    acc.add_scaled(std::polar(1.0, -t), f);
  }
  acc *= cplx(1.0 / (r * static_cast<double>(samples)));
  return acc;
}

std::vector<FornbergPoint> fornberg_scan(const LaserConfig& cfg, const RealField& psi0, const RealField& u0,
                                         const std::vector<double>& radii, std::size_t samples) {
  const ComplexField exact = complexify(monodromy_apply(cfg, round_trip(cfg, psi0), u0));
  std::vector<FornbergPoint> out;
  for (const double r : radii) {
    FornbergPoint p;
    p.r = r;
    p.abs_error = distance(fornberg_derivative(cfg, psi0, u0, r, samples), exact);
    p.abs_error_sqrt_joule = p.abs_error * 1e-6;  // sqrt(pJ) -> sqrt(J)
    out.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient check

GradientCheck gradient_fd_check(const LaserConfig& cfg, const RealField& psi0, const RealField& u0,
                                const std::vector<double>& eps_list) {
  const auto base = evaluate_poincare(cfg, psi0, true);
  // dF/dpsi = E grad(E~) + 2 E~ psi0
  RealField grad = base.gradient;
  grad *= base.energy;
  grad.add_scaled(2.0 * base.objective, psi0);

  GradientCheck out;
  out.adjoint_derivative = inner(grad, u0);
  if (std::abs(out.adjoint_derivative) <= 1e-14 * norm(u0)) {
    throw DegenerateDirection("direction is orthogonal to the gradient");
  }
  out.epsilon = eps_list;
  for (const double eps : eps_list) {
    RealField p = psi0;
    p.add_scaled(eps, u0);
    const double f = evaluate_poincare(cfg, p, false).e_val;
    const double fd = (f - base.e_val) / eps;
    out.rel_error.push_back(std::abs(fd - out.adjoint_derivative) / std::abs(out.adjoint_derivative));
  }
  out.slope = loglog_slope(out.epsilon, out.rel_error);
  return out;
}

// ---------------------------------------------------------------------------
// Adjoint pairing

RealField random_field(const GridPtr& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  RealField f(grid);
  for (std::size_t j = 0; j < f.size(); ++j) {
    f.re()[j] = nd(rng);
    f.im()[j] = nd(rng);
  }
  return f;
}

namespace {

using LinearMap = std::function<RealField(const RealField&)>;

double pairing_defect(const LinearMap& fwd, const LinearMap& adj, const RealField& u, const RealField& v) {
  return std::abs(inner(v, fwd(u)) - inner(adj(v), u)) / (norm(u) * norm(v));
}

}  // namespace

AdjointAudit adjoint_pairing_audit(const LaserConfig& cfg, const RoundTripOutput& rt, std::size_t trials,
                                   std::uint64_t seed) {
  AdjointAudit audit;
  audit.seed = seed;
  audit.trials = trials;
  const auto dcf = cfg.dcf();
  const std::vector<std::pair<std::string, std::pair<LinearMap, LinearMap>>> parts{
      {"sa",
       {[&](const RealField& u) { return sa_linearized(cfg.sa, rt.input, u); },
        [&](const RealField& v) { return sa_adjoint(cfg.sa, rt.input, v); }}},
      {cfg.smf1.name,
       {[&](const RealField& u) { return propagate_linearized(cfg.smf1, rt.smf1, u, cfg.step); },
        [&](const RealField& v) { return propagate_adjoint(cfg.smf1, rt.smf1, v, cfg.step); }}},
      {cfg.fa.name,
       {[&](const RealField& u) { return propagate_linearized(cfg.fa, rt.fa, u, cfg.step); },
        [&](const RealField& v) { return propagate_adjoint(cfg.fa, rt.fa, v, cfg.step); }}},
      {cfg.smf2.name,
       {[&](const RealField& u) { return propagate_linearized(cfg.smf2, rt.smf2, u, cfg.step); },
        [&](const RealField& v) { return propagate_adjoint(cfg.smf2, rt.smf2, v, cfg.step); }}},
      {"dcf",
       {[&](const RealField& u) { return dcf_apply(dcf, u); },
        [&](const RealField& v) { return dcf_adjoint(dcf, v); }}},
      {"oc",
       {[&](const RealField& u) { return oc_apply(cfg.oc, u); },
        [&](const RealField& v) { return oc_adjoint(cfg.oc, v); }}},
  };
  for (const auto& [name, maps] : parts) audit.components.push_back({name, 0.0});

  const LinearMap full = [&](const RealField& u) { return monodromy_apply(cfg, rt, u); };
  const LinearMap full_adj = [&](const RealField& v) { return monodromy_adjoint_apply(cfg, rt, v); };
  const GridPtr grid = rt.input.grid_ptr();
  for (std::size_t t = 0; t < trials; ++t) {
    const RealField u = random_field(grid, seed + 2 * t);
    const RealField v = random_field(grid, seed + 2 * t + 1);
    audit.max_defect = std::max(audit.max_defect, pairing_defect(full, full_adj, u, v));
    for (std::size_t c = 0; c < parts.size(); ++c) {
      const auto& maps = parts[c].second;
      audit.components[c].max_defect =
          std::max(audit.components[c].max_defect, pairing_defect(maps.first, maps.second, u, v));
    }
  }
  return audit;
}

}  // namespace modelock
