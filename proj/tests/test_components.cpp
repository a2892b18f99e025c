#include "doctest.h"
#include "support.hpp"

using namespace modelock;
using testing::gaussian;

TEST_CASE("saturable absorber follows the saturated loss law") {
  const SaturableAbsorberParams p;
  CHECK(sa_loss(p, 0.0) == doctest::Approx(0.2));
  CHECK(sa_loss(p, 50.0) == doctest::Approx(0.1));
  const auto g = FastTimeGrid::make(10.0, 32);
  const RealField f = gaussian(g, 10.0, 0.5, 0.3);
  const RealField out = sa_apply(p, f);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double pw = f.re()[j] * f.re()[j] + f.im()[j] * f.im()[j];
    const double expect = 1.0 - 0.2 / (1.0 + pw / 50.0);
    CHECK(out.re()[j] == doctest::Approx(expect * f.re()[j]).epsilon(1e-14));
    CHECK(out.im()[j] == doctest::Approx(expect * f.im()[j]).epsilon(1e-14));
  }
}

TEST_CASE("absorber linearization matches directional finite differences") {
  const SaturableAbsorberParams p;
  const auto g = FastTimeGrid::make(10.0, 64);
  const RealField psi = gaussian(g, 12.0, 0.6, 0.4);
  const RealField u = testing::windowed_random(g, 5, 1.0);
  const RealField lin = sa_linearized(p, psi, u);
  std::vector<double> eps, err;
  for (double e = 1e-2; e > 1e-5; e /= 4) {
    RealField q = psi;
    q.add_scaled(e, u);
    RealField fd = sa_apply(p, q) - sa_apply(p, psi);
    fd *= 1.0 / e;
    eps.push_back(e);
    err.push_back(distance(fd, lin) / norm(lin));
  }
  CHECK(loglog_slope(eps, err) == doctest::Approx(1.0).epsilon(0.05));
  CHECK(err.back() < 1e-4);
}

TEST_CASE("absorber linearization is symmetric") {
  const SaturableAbsorberParams p;
  const auto g = FastTimeGrid::make(10.0, 64);
  const RealField psi = gaussian(g, 12.0, 0.6, 0.4);
  const RealField u = random_field(g, 1), v = random_field(g, 2);
  CHECK(inner(v, sa_linearized(p, psi, u)) ==
        doctest::Approx(inner(sa_adjoint(p, psi, v), u)).epsilon(1e-13));
}

TEST_CASE("complexified absorber reduces to the real one") {
  const SaturableAbsorberParams p;
  const auto g = FastTimeGrid::make(10.0, 32);
  const RealField f = gaussian(g, 9.0, 0.5, 0.2);
  const ComplexField c = sa_apply(p, complexify(f));
  CHECK(distance(real_part(c), sa_apply(p, f)) < 1e-14);
  CHECK(norm(imag_part(c)) == 0.0);
}

TEST_CASE("dispersion broadens a Gaussian at the analytic rate") {
  // exp(i beta w^2 / 2) on exp(-x^2 / 2T^2): peak power P0 / sqrt(1 + (beta/T^2)^2)
  const auto g = FastTimeGrid::make(40.0, 512);
  const double t0 = 0.5, beta = 0.7;
  const RealField f = gaussian(g, 1.0, t0);
  const RealField out = dcf_apply(DispersionParams{beta}, f);
  const double expect = 1.0 / std::sqrt(1.0 + std::pow(beta / (t0 * t0), 2));
  CHECK(pulse_metrics(out).peak_power == doctest::Approx(expect).epsilon(1e-10));
  CHECK(energy(out) == doctest::Approx(energy(f)).epsilon(1e-13));
}

TEST_CASE("dispersion adjoint is its inverse") {
  const auto g = FastTimeGrid::make(10.0, 64);
  const DispersionParams d{-0.02};
  const RealField u = random_field(g, 7), v = random_field(g, 8);
  CHECK(distance(dcf_adjoint(d, dcf_apply(d, u)), u) / norm(u) < 1e-14);
  CHECK(inner(v, dcf_apply(d, u)) == doctest::Approx(inner(dcf_adjoint(d, v), u)).epsilon(1e-13));
}

TEST_CASE("output coupler scales the amplitude") {
  const auto g = FastTimeGrid::make(10.0, 16);
  const OutputCouplerParams oc;
  const RealField f = random_field(g, 3);
  CHECK(energy(oc_apply(oc, f)) == doctest::Approx(0.5 * energy(f)).epsilon(1e-14));
  CHECK(oc_adjoint(oc, f) == oc_apply(oc, f));
}

TEST_CASE("component parameter validation") {
  CHECK_THROWS(SaturableAbsorberParams{1.2, 50.0}.validate());
  CHECK_THROWS(SaturableAbsorberParams{0.2, 0.0}.validate());
  CHECK_NOTHROW(SaturableAbsorberParams{0.0, 50.0}.validate());
  CHECK_THROWS(OutputCouplerParams{0.0}.validate());
  CHECK_THROWS(OutputCouplerParams{1.5}.validate());
}
