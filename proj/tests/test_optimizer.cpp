#include <numbers>

#include "doctest.h"
#include "support.hpp"

using namespace modelock;
using testing::gaussian;

namespace {

double rosenbrock(const std::vector<double>& x, std::vector<double>& g) {
  g.assign(x.size(), 0.0);
  double f = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
    f += 100.0 * a * a + b * b;
    g[i] += -400.0 * a * x[i] - 2.0 * b;
    g[i + 1] += 200.0 * a;
  }
  return f;
}

}  // namespace

TEST_CASE("BFGS minimizes Rosenbrock, dense and limited-memory") {
  for (const std::size_t limit : {std::size_t{100}, std::size_t{1}}) {
    MinimizerOptions opts;
    opts.dense_limit = limit;
    opts.obj_tol = 1e-24;
    opts.grad_tol = 1e-10;
    opts.max_iters = 500;
    const auto res = minimize_bfgs(rosenbrock, {-1.2, 1.0, -0.5, 0.8}, opts);
    CAPTURE(limit);
    CHECK(res.converged());
    for (const double v : res.x) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("BFGS solves a diagonal quadratic and reports each iteration") {
  const std::size_t n = 40;
  auto fn = [&](const std::vector<double>& x, std::vector<double>& g) {
    g.resize(n);
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = 1.0 + static_cast<double>(i);
      f += 0.5 * d * (x[i] - 1.0) * (x[i] - 1.0);
      g[i] = d * (x[i] - 1.0);
    }
    return f;
  };
  std::size_t calls = 0, last = 0;
  MinimizerOptions opts;
  opts.obj_tol = 1e-26;
  opts.dense_limit = 10;
  const auto res = minimize_bfgs(fn, std::vector<double>(n, 0.0), opts,
                                 [&](std::size_t it, const auto&, double, const auto&) { ++calls, last = it; });
  CHECK(res.converged());
  CHECK(res.f <= 1e-20);
  CHECK(calls == res.iterations + 1);
  CHECK(last == res.iterations);
}

TEST_CASE("gaussian seed has the requested peak and amplitude FWHM") {
  const auto g = FastTimeGrid::make(10.0, 4096);
  const RealField s = gaussian_seed(400.0, 0.3, g);
  const auto m = pulse_metrics(s);
  CHECK(m.peak_power == doctest::Approx(400.0).epsilon(1e-12));
  // |psi|^2 = P exp(-2 x^2/s^2), so E = P s sqrt(pi/2) and rms width s/2.
  const double sigma = 0.3 / (2.0 * std::sqrt(std::log(2.0)));
  CHECK(m.energy == doctest::Approx(400.0 * sigma * std::sqrt(std::numbers::pi / 2)).epsilon(1e-10));
  CHECK(m.rms_width == doctest::Approx(sigma / 2).epsilon(1e-8));
  CHECK_THROWS_AS(gaussian_seed(0.0, 0.3, g), std::invalid_argument);
}

TEST_CASE("theta minimizes the residual over all phases") {
  const LaserConfig cfg = testing::small_config();
  const RealField psi = gaussian(cfg.make_grid(), 18.0, 0.15, 0.5);
  const auto ev = evaluate_poincare(cfg, psi, false);
  CHECK(ev.theta >= 0.0);
  CHECK(ev.theta < 2 * std::numbers::pi);
  CHECK(ev.e_val == doctest::Approx(0.5 * energy(ev.image - rotate(psi, ev.theta))).epsilon(1e-14));
  // closed form: E = F - sqrt(G^2 + H^2)
  CHECK(ev.e_val == doctest::Approx(ev.f_val - std::hypot(ev.g_val, ev.h_val)).epsilon(1e-9));
  for (const double d : {-0.3, -1e-3, 1e-3, 0.3}) {
    CHECK(0.5 * energy(ev.image - rotate(psi, ev.theta + d)) > ev.e_val);
  }
}

TEST_CASE("objective gradient matches central differences") {
  const LaserConfig cfg = testing::small_config();
  const auto g = cfg.make_grid();
  const RealField psi = gaussian(g, 18.0, 0.15, 0.5);
  const RealField u = testing::windowed_random(g, 9, 0.4);
  const auto ev = evaluate_poincare(cfg, psi, true);
  const double eps = 1e-5;
  RealField p = psi, m = psi;
  p.add_scaled(eps, u);
  m.add_scaled(-eps, u);
  const double fd =
      (evaluate_poincare(cfg, p, false).objective - evaluate_poincare(cfg, m, false).objective) / (2 * eps);
  CHECK(testing::rel(inner(ev.gradient, u), fd) < 1e-6);
}

TEST_CASE("zero pulse is rejected") {
  const LaserConfig cfg = testing::small_config();
  const RealField zero(cfg.make_grid());
  CHECK_THROWS_AS(evaluate_poincare(cfg, zero), DegenerateInput);
  CHECK_THROWS_AS(optimize(cfg, zero), DegenerateInput);
}

TEST_CASE("optimizer converges on a coarse cavity and restarts cheaply") {
  const LaserConfig cfg = testing::small_config();
  const RealField seed = evolve_stage(cfg, gaussian_seed(400.0, 0.3, cfg.make_grid()), 10);
  MinimizerOptions opts;
  const auto rep = optimize(cfg, seed, opts);
  REQUIRE(rep.converged);
  CHECK(rep.objective <= 1e-20);
  CHECK(rep.history.size() == rep.iterations + 1);
  CHECK(rep.history.front().objective > rep.history.back().objective);
  CHECK(pulse_metrics(rep.psi).peak_power > 100.0);

  const auto again = optimize(cfg, rep.psi, opts);
  CHECK(again.converged);
  CHECK(again.iterations <= 2);
  CHECK(again.objective <= rep.objective * 1.0001);
}

TEST_CASE("sweep values and parameter substitution") {
  const auto v = sweep_values(6.0, 7.0, 0.1);
  REQUIRE(v.size() == 11);
  CHECK(v.front() == 6.0);
  CHECK(v.back() == doctest::Approx(7.0).epsilon(1e-14));
  CHECK(sweep_values(260.0, 200.0, -5.0).size() == 13);
  CHECK(sweep_values(1.0, 1.0, 0.5).size() == 1);
  CHECK_THROWS_AS(sweep_values(1.0, 2.0, -0.5), std::invalid_argument);
  CHECK_THROWS_AS(sweep_values(1.0, 2.0, 0.0), std::invalid_argument);

  const LaserConfig base;
  for (const auto p : {SweepParameter::g0, SweepParameter::e_sat, SweepParameter::omega_g}) {
    const LaserConfig c = with_parameter(base, p, 3.5);
    CHECK(parameter_value(c, p) == 3.5);
    CHECK(parse_sweep_parameter(to_string(p)) == p);
    CHECK(c.smf1 == base.smf1);
  }
  CHECK_THROWS_AS(parse_sweep_parameter("gamma"), std::invalid_argument);
}
