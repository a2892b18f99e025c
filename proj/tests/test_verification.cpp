#include "doctest.h"
#include "support.hpp"

using namespace modelock;
using testing::gaussian;

TEST_CASE("log-log slope of a power law") {
  const std::vector<double> x{1e-3, 2e-3, 5e-3, 1e-2};
  std::vector<double> y;
  for (const double v : x) y.push_back(3.0 * std::pow(v, 4));
  CHECK(loglog_slope(x, y) == doctest::Approx(4.0).epsilon(1e-12));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("study target names") {
  for (const auto t : {StudyTarget::roundtrip, StudyTarget::linearized, StudyTarget::adjoint}) {
    CHECK(parse_study_target(to_string(t)) == t);
  }
  CHECK_THROWS_AS(parse_study_target("Q"), std::invalid_argument);
}

TEST_CASE("reference step must be well below every step") {
  const LaserConfig cfg = testing::small_config(64);
  const RealField psi = gaussian(cfg.make_grid(), 18.0, 0.3);
  CHECK_THROWS_AS(convergence_study(cfg, psi, StudyTarget::roundtrip, {1e-2, 5e-3}, 2e-3), std::invalid_argument);
}

TEST_CASE("random fields are deterministic per seed") {
  const auto g = FastTimeGrid::make(10.0, 64);
  CHECK(random_field(g, 3) == random_field(g, 3));
  CHECK(!(random_field(g, 3) == random_field(g, 4)));
}

TEST_CASE("Fornberg derivative of a linear cavity is exact") {
  const LaserConfig cfg = testing::linear_config();
  const auto g = cfg.make_grid();
  const RealField psi = gaussian(g, 3.0, 0.3);
  const RealField u = random_field(g, 2);
  const auto scan = fornberg_scan(cfg, psi, u, {0.5, 1e-3}, 4);
  for (const auto& p : scan) {
    // exact up to cancellation of R(psi0)/r
    CHECK(p.abs_error < 1e-13 * (norm(u) + norm(psi) / p.r));
    CHECK(p.abs_error_sqrt_joule == doctest::Approx(p.abs_error * 1e-6));
  }
  CHECK_THROWS_AS(fornberg_derivative(cfg, psi, u, 0.1, 3), std::invalid_argument);
  CHECK_THROWS_AS(fornberg_derivative(cfg, psi, u, 0.0, 4), std::invalid_argument);
}

TEST_CASE("Fornberg derivative approaches the monodromy operator") {
  const LaserConfig cfg = testing::small_config(64);
  const auto g = cfg.make_grid();
  const RealField psi = gaussian(g, 18.0, 0.3, 0.5);
  const RealField u = testing::windowed_random(g, 8, 0.5);
  const auto scan = fornberg_scan(cfg, psi, u, {0.5, 0.0625, 1.0 / 1024}, 4);
  CHECK(scan[1].abs_error < scan[0].abs_error);
  CHECK(scan[2].abs_error < 1e-9 * norm(u) * 18.0);
}

TEST_CASE("gradient finite differences converge linearly") {
  const LaserConfig cfg = testing::small_config(64);
  const auto g = cfg.make_grid();
  const RealField psi = gaussian(g, 18.0, 0.3, 0.5);
  const RealField u = testing::windowed_random(g, 1, 0.5);
  const auto chk = gradient_fd_check(cfg, psi, u, {1e-2, 5e-3, 2e-3, 1e-3});
  CHECK(chk.slope == doctest::Approx(1.0).epsilon(0.1));
  CHECK_THROWS_AS(gradient_fd_check(cfg, psi, RealField(g), {1e-3, 1e-4}), DegenerateDirection);
}

TEST_CASE("adjoint audit on nonlinear and linear cavities") {
  for (const LaserConfig& cfg : {testing::small_config(64), testing::linear_config()}) {
    const auto rt = round_trip(cfg, gaussian(cfg.make_grid(), 18.0, 0.3, 0.5));
    const auto audit = adjoint_pairing_audit(cfg, rt, 5, 11);
    CHECK(audit.trials == 5);
    CHECK(audit.seed == 11);
    CHECK(audit.max_defect < 1e-12);
    CHECK(audit.components.size() >= 5);
    for (const auto& c : audit.components) CHECK(c.max_defect < 1e-12);
  }
}

TEST_CASE("round-trip convergence is fourth order") {
  LaserConfig cfg = testing::small_config(64);
  const RealField psi = gaussian(cfg.make_grid(), 18.0, 0.3, 0.5);
  const auto s = convergence_study(cfg, psi, StudyTarget::roundtrip, {4e-2, 2e-2, 1e-2}, 1e-3, 1e-3, 1.0);
  REQUIRE(s.points.size() == 3);
  for (const auto& p : s.points) CHECK(p.ok);
  CHECK(s.slope == doctest::Approx(4.0).epsilon(0.05));
}
