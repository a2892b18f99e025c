#include "modelock/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <numeric>

namespace modelock {

// ---------------------------------------------------------------------------
// Poincare functional

PoincareEvaluation evaluate_poincare(const LaserConfig& cfg, const RealField& psi0, bool with_gradient) {
  PoincareEvaluation ev;
  ev.energy = energy(psi0);
  if (!(ev.energy > 0.0)) throw DegenerateInput("phase is undefined for the zero pulse");

  RoundTripOutput rt;
  if (with_gradient) {
    rt = round_trip(cfg, psi0);
    ev.image = rt.output;
  } else {
    ev.image = round_trip_map(cfg, psi0);
  }
  ev.f_val = 0.5 * (energy(ev.image) + ev.energy);
  ev.g_val = inner(ev.image, psi0);
  ev.h_val = inner(ev.image, apply_j(psi0));
  ev.theta = std::atan2(ev.h_val, ev.g_val);
  if (ev.theta < 0.0) ev.theta += 2.0 * std::numbers::pi;
  if (ev.theta >= 2.0 * std::numbers::pi) ev.theta = 0.0;

  // F - sqrt(G^2 + H^2) cancels catastrophically near a periodic pulse; the
  // residual norm carries the same value without the cancellation.
  ev.residual = ev.image - rotate(psi0, ev.theta);
  ev.e_val = 0.5 * energy(ev.residual);
  ev.objective = ev.e_val / ev.energy;

  if (with_gradient) {
    RealField grad = monodromy_adjoint_apply(cfg, rt, ev.residual);
    grad -= rotate(ev.residual, -ev.theta);
    grad.add_scaled(-2.0 * ev.objective, psi0);
    grad *= 1.0 / ev.energy;
    ev.gradient = std::move(grad);
  }
  return ev;
}

RealField gaussian_seed(double peak_power_w, double fwhm_ps, const GridPtr& grid) {
  if (!(peak_power_w > 0.0) || !(fwhm_ps > 0.0)) {
    throw std::invalid_argument("seed peak power and width must be positive");
  }
  const double sigma = fwhm_ps / (2.0 * std::sqrt(std::log(2.0)));
  const double amp = std::sqrt(peak_power_w);
  RealField f(grid);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double x = grid->x(j) / sigma;
    f.re()[j] = amp * std::exp(-x * x);
  }
  return f;
}

RealField evolve_stage(const LaserConfig& cfg, const RealField& seed, std::size_t n_roundtrips) {
  RealField psi = seed;
  for (std::size_t i = 0; i < n_roundtrips; ++i) psi = round_trip_map(cfg, psi);
  return psi;
}

PulseMetrics pulse_metrics(const RealField& psi) {
  PulseMetrics m;
  const auto& g = psi.grid();
  double e = 0.0, m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < psi.size(); ++j) {
    const double p = psi.re()[j] * psi.re()[j] + psi.im()[j] * psi.im()[j];
    m.peak_power = std::max(m.peak_power, p);
    e += p;
    m1 += g.x(j) * p;
    m2 += g.x(j) * g.x(j) * p;
  }
  m.energy = e * g.dx();
  if (e > 0.0) {
    const double mean = m1 / e;
    m.rms_width = std::sqrt(std::max(0.0, m2 / e - mean * mean));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Quasi-Newton minimizer

std::string to_string(MinimizerStatus s) {
  switch (s) {
    case MinimizerStatus::objective_tolerance: return "objective_tolerance";
    case MinimizerStatus::gradient_tolerance: return "gradient_tolerance";
    case MinimizerStatus::max_iterations: return "max_iterations";
    case MinimizerStatus::line_search_failed: return "line_search_failed";
    case MinimizerStatus::diverged: return "diverged";
  }
  return "unknown";
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  std::vector<double> x, g;
};

class LineSearch {
 public:
  LineSearch(const ObjectiveFn& fn, const MinimizerOptions& opts, std::size_t& evals)
      : fn_(fn), opts_(opts), evals_(evals) {}

  // Strong Wolfe line search (bracketing + cubic zoom). Returns false on failure.
  bool run(const std::vector<double>& x, double f0, const std::vector<double>& g0, const std::vector<double>& p,
           double alpha0, Point& out) {
    x0_ = &x;
    p_ = &p;
    f0_ = f0;
    d0_ = dot(g0, p);
    Point prev{0.0, f0, d0_, {}, {}};
    double alpha = alpha0;
    for (std::size_t i = 0; i < opts_.max_line_search; ++i) {
      Point cur = evaluate(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opts_.c1 * alpha * d0_ || (i > 0 && cur.f >= prev.f)) {
        return zoom(prev, cur, out);
      }
      if (std::abs(cur.d) <= -opts_.c2 * d0_) {
        out = std::move(cur);
        return true;
      }
      if (cur.d >= 0.0) return zoom(cur, prev, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return false;
  }

 private:
  Point evaluate(double alpha) {
    Point pt;
    pt.alpha = alpha;
    pt.x = *x0_;
    for (std::size_t i = 0; i < pt.x.size(); ++i) pt.x[i] += alpha * (*p_)[i];
    try {
      pt.f = fn_(pt.x, pt.g);
    } catch (const std::runtime_error&) {
      pt.f = std::numeric_limits<double>::infinity();
    }
    ++evals_;
    pt.d = std::isfinite(pt.f) ? dot(pt.g, *p_) : 0.0;
    return pt;
  }

  static double cubic_min(const Point& a, const Point& b) {
    const double d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
    const double disc = d1 * d1 - a.d * b.d;
    if (!(disc >= 0.0) || !std::isfinite(b.f)) return 0.5 * (a.alpha + b.alpha);
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double denom = b.d - a.d + 2.0 * d2;
    if (denom == 0.0) return 0.5 * (a.alpha + b.alpha);
    return b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / denom;
  }

  bool zoom(Point lo, Point hi, Point& out) {
    for (std::size_t i = 0; i < opts_.max_line_search; ++i) {
      const double left = std::min(lo.alpha, hi.alpha), right = std::max(lo.alpha, hi.alpha);
      const double width = right - left;
      if (width <= 1e-16 * std::max(1.0, right)) break;
      double alpha = cubic_min(lo, hi);
      alpha = std::clamp(alpha, left + 0.1 * width, right - 0.1 * width);
      Point cur = evaluate(alpha);
      if (!std::isfinite(cur.f) || cur.f > f0_ + opts_.c1 * alpha * d0_ || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (std::abs(cur.d) <= -opts_.c2 * d0_) {
          out = std::move(cur);
          return true;
        }
        if (cur.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
    }
    // Accept a sufficient-decrease point when curvature cannot be met.
    if (lo.alpha > 0.0 && lo.f < f0_) {
      out = std::move(lo);
      return true;
    }
    return false;
  }

  const ObjectiveFn& fn_;
  const MinimizerOptions& opts_;
  std::size_t& evals_;
  const std::vector<double>* x0_ = nullptr;
  const std::vector<double>* p_ = nullptr;
  double f0_ = 0.0, d0_ = 0.0;
};

// Inverse-Hessian approximation: dense BFGS or limited memory.
class InverseHessian {
 public:
  InverseHessian(std::size_t n, const MinimizerOptions& opts)
      : n_(n), dense_(n <= opts.dense_limit), memory_(opts.lbfgs_memory) {}

  std::vector<double> direction(const std::vector<double>& g) const {
    std::vector<double> p(n_);
    if (dense_ && !h_.empty()) {
      for (std::size_t i = 0; i < n_; ++i) {
        const double* row = &h_[i * n_];
        double acc = 0.0;
        for (std::size_t j = 0; j < n_; ++j) acc += row[j] * g[j];
        p[i] = -acc;
      }
      return p;
    }
    if (dense_) {
      for (std::size_t i = 0; i < n_; ++i) p[i] = -scale_ * g[i];
      return p;
    }
    // L-BFGS two-loop recursion.
    std::vector<double> q = g;
    std::vector<double> a(s_.size());
    for (std::size_t k = s_.size(); k-- > 0;) {
      a[k] = rho_[k] * dot(s_[k], q);
      for (std::size_t i = 0; i < n_; ++i) q[i] -= a[k] * y_[k][i];
    }
    for (auto& v : q) v *= scale_;
    for (std::size_t k = 0; k < s_.size(); ++k) {
      const double b = rho_[k] * dot(y_[k], q);
      for (std::size_t i = 0; i < n_; ++i) q[i] += s_[k][i] * (a[k] - b);
    }
    for (std::size_t i = 0; i < n_; ++i) p[i] = -q[i];
    return p;
  }

  void update(const std::vector<double>& s, const std::vector<double>& y) {
    const double sy = dot(s, y);
    if (!(sy > 0.0)) return;
    const double rho = 1.0 / sy;
    if (!dense_) {
      scale_ = sy / dot(y, y);
      s_.push_back(s);
      y_.push_back(y);
      rho_.push_back(rho);
      if (s_.size() > memory_) {
        s_.pop_front();
        y_.pop_front();
        rho_.pop_front();
      }
      return;
    }
    if (h_.empty()) {
      // First update: scale the identity by s^T y / y^T y.
      scale_ = sy / dot(y, y);
      h_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) h_[i * n_ + i] = scale_;
    }
    // H <- H - rho (s (Hy)^T + (Hy) s^T) + (rho^2 y^T H y + rho) s s^T
    std::vector<double> hy(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = &h_[i * n_];
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += row[j] * y[j];
      hy[i] = acc;
    }
    const double yhy = dot(y, hy);
    const double c = rho * rho * yhy + rho;
    for (std::size_t i = 0; i < n_; ++i) {
      double* row = &h_[i * n_];
      const double si = s[i], hyi = hy[i];
      for (std::size_t j = 0; j < n_; ++j) {
        row[j] += -rho * (si * hy[j] + hyi * s[j]) + c * si * s[j];
      }
    }
  }

  void reset() {
    h_.clear();
    s_.clear();
    y_.clear();
    rho_.clear();
    scale_ = 1.0;
  }

  bool fresh() const { return dense_ ? h_.empty() : s_.empty(); }

 private:
  std::size_t n_;
  bool dense_;
  std::size_t memory_;
  double scale_ = 1.0;
  std::vector<double> h_;
  std::deque<std::vector<double>> s_, y_;
  std::deque<double> rho_;
};

}  // namespace

MinimizerResult minimize_bfgs(const ObjectiveFn& fn, std::vector<double> x0, const MinimizerOptions& opts,
                              const IterationFn& on_iter, const GradNormFn& grad_norm) {
  const auto norm_of = [&](const std::vector<double>& g) {
    return grad_norm ? grad_norm(g) : std::sqrt(dot(g, g));
  };
  MinimizerResult res;
  res.x = std::move(x0);
  res.f = fn(res.x, res.g);
  res.evaluations = 1;
  if (!std::isfinite(res.f)) {
    res.status = MinimizerStatus::diverged;
    return res;
  }
  if (on_iter) on_iter(0, res.x, res.f, res.g);

  InverseHessian hinv(res.x.size(), opts);
  LineSearch ls(fn, opts, res.evaluations);
  for (;;) {
    if (res.f <= opts.obj_tol) {
      res.status = MinimizerStatus::objective_tolerance;
      break;
    }
    if (norm_of(res.g) <= opts.grad_tol) {
      res.status = MinimizerStatus::gradient_tolerance;
      break;
    }
    if (res.iterations >= opts.max_iters) {
      res.status = MinimizerStatus::max_iterations;
      break;
    }
    std::vector<double> p = hinv.direction(res.g);
    if (!(dot(p, res.g) < 0.0)) {
      hinv.reset();
      p = hinv.direction(res.g);
    }
    const double gg = dot(res.g, res.g);
    const double alpha0 = hinv.fresh() ? std::min(1.0, 2.0 * res.f / gg) : 1.0;
    Point next;
    if (!ls.run(res.x, res.f, res.g, p, alpha0, next)) {
      if (hinv.fresh()) {
        res.status = MinimizerStatus::line_search_failed;
        break;
      }
      // Retry once from steepest descent before giving up.
      hinv.reset();
      continue;
    }
    std::vector<double> s(res.x.size()), y(res.x.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = next.x[i] - res.x[i];
      y[i] = next.g[i] - res.g[i];
    }
    hinv.update(s, y);
    res.x = std::move(next.x);
    res.g = std::move(next.g);
    res.f = next.f;
    ++res.iterations;
    if (on_iter) on_iter(res.iterations, res.x, res.f, res.g);
    if (!std::isfinite(res.f)) {
      res.status = MinimizerStatus::diverged;
      break;
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Pulse optimization

OptimizerReport optimize(const LaserConfig& cfg, const RealField& psi_init, const MinimizerOptions& opts) {
  if (energy(psi_init) < 1e-12) {
    throw DegenerateInput("initial pulse energy below 1e-12 pJ; the zero pulse is a spurious minimum");
  }
  const GridPtr grid = psi_init.grid_ptr();
  const double dx = grid->dx();
  OptimizerReport rep;
  double last_theta = 0.0;

  // The coordinate gradient is dx times the L2 gradient.
  const ObjectiveFn fn = [&](const std::vector<double>& x, std::vector<double>& g) {
    const RealField psi = from_coordinates<double>(grid, x);
    const auto ev = evaluate_poincare(cfg, psi, true);
    g = to_coordinates(ev.gradient);
    for (auto& v : g) v *= dx;
    last_theta = ev.theta;
    return ev.objective;
  };
  // Dimensionless gradient size: the L2 gradient of E~ times the pulse norm
  // (E~ itself is dimensionless). The trace hook keeps the norm current.
  double pulse_norm = norm(psi_init);
  const GradNormFn l2_norm = [&](const std::vector<double>& g) {
    return pulse_norm * std::sqrt(dot(g, g) / dx);
  };
  const IterationFn trace = [&](std::size_t iter, const std::vector<double>& x, double f,
                                const std::vector<double>& g) {
    const auto m = pulse_metrics(from_coordinates<double>(grid, x));
    pulse_norm = std::sqrt(m.energy);
    rep.history.push_back({iter, f, l2_norm(g), last_theta, m.peak_power, m.rms_width});
  };

  auto res = minimize_bfgs(fn, to_coordinates(psi_init), opts, trace, l2_norm);
  rep.psi = from_coordinates<double>(grid, res.x);
  // Re-evaluate so theta belongs to the returned iterate, not the last trial.
  const auto final_ev = evaluate_poincare(cfg, rep.psi, false);
  rep.theta = final_ev.theta;
  rep.objective = res.f;
  rep.grad_norm = l2_norm(res.g);
  rep.iterations = res.iterations;
  rep.evaluations = res.evaluations;
  rep.status = res.status;
  rep.converged = res.converged();
  if (!rep.history.empty()) rep.history.back().theta = rep.theta;
  return rep;
}

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::g0: return "g0";
    case SweepParameter::e_sat: return "e_sat";
    case SweepParameter::omega_g: return "omega_g";
  }
  return "?";
}

SweepParameter parse_sweep_parameter(const std::string& s) {
  if (s == "g0") return SweepParameter::g0;
  if (s == "e_sat") return SweepParameter::e_sat;
  if (s == "omega_g") return SweepParameter::omega_g;
  throw std::invalid_argument("unknown sweep parameter '" + s + "' (expected g0, e_sat or omega_g)");
}

std::vector<double> sweep_values(double from, double to, double step) {
  if (!(step != 0.0) || !std::isfinite(step) || (to - from) / step < 0.0) {
    throw std::invalid_argument("sweep step does not lead from start to end");
  }
  const auto n = static_cast<std::size_t>(std::floor((to - from) / step + 1e-3));
  std::vector<double> out;
  for (std::size_t i = 0; i <= n; ++i) out.push_back(from + static_cast<double>(i) * step);
  return out;
}

LaserConfig with_parameter(const LaserConfig& cfg, SweepParameter p, double value) {
  LaserConfig c = cfg;
  switch (p) {
    case SweepParameter::g0: c.fa.g0 = value; break;
    case SweepParameter::e_sat: c.fa.e_sat = value; break;
    case SweepParameter::omega_g: c.fa.omega_g = value; break;
  }
  return c;
}

double parameter_value(const LaserConfig& cfg, SweepParameter p) {
  switch (p) {
    case SweepParameter::g0: return cfg.fa.g0;
    case SweepParameter::e_sat: return cfg.fa.e_sat;
    case SweepParameter::omega_g: return cfg.fa.omega_g;
  }
  return 0.0;
}

SweepResult continuation_sweep(const std::vector<LaserConfig>& path, const std::vector<double>& values,
                               const RealField& psi_init, const MinimizerOptions& opts) {
  if (values.size() != path.size()) throw std::invalid_argument("sweep values and path differ in length");
  SweepResult out;
  RealField psi = psi_init;
  for (std::size_t i = 0; i < path.size(); ++i) {
    SweepStep step;
    step.value = values[i];
    step.report = optimize(path[i], psi, opts);
    step.metrics = pulse_metrics(step.report.psi);
    step.gain_integral = round_trip(path[i], step.report.psi).gain_integral();
    const bool ok = step.report.converged;
    psi = step.report.psi;
    out.steps.push_back(std::move(step));
    if (!ok) return out;
  }
  out.completed = true;
  return out;
}

}  // namespace modelock
