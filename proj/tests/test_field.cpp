#include <numbers>
#include <random>

#include "doctest.h"
#include "support.hpp"

using namespace modelock;
using testing::gaussian;

TEST_CASE("grid rejects sizes that are not powers of two") {
  CHECK_THROWS_AS(FastTimeGrid(10.0, 500), std::invalid_argument);
  CHECK_THROWS_AS(FastTimeGrid(10.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(FastTimeGrid(-1.0, 64), std::invalid_argument);
  CHECK_NOTHROW(FastTimeGrid(10.0, 64));
}

TEST_CASE("grid abscissae and frequencies") {
  const auto g = FastTimeGrid::make(10.0, 64);
  CHECK(g->x(0) == doctest::Approx(-5.0));
  CHECK(g->dx() == doctest::Approx(10.0 / 64));
  CHECK(g->omega(1) == doctest::Approx(2 * std::numbers::pi / 10.0));
  CHECK(g->omega(63) == doctest::Approx(-2 * std::numbers::pi / 10.0));
  CHECK(g->mirror(1) == 63);
  CHECK(g->mirror(32) == 32);
  CHECK(g->mirror(0) == 0);
}

TEST_CASE("transform of a Gaussian matches the analytic transform") {
  // (1/sqrt(2pi)) int exp(-x^2/2) exp(-i w x) dx = exp(-w^2/2)
  const auto g = FastTimeGrid::make(40.0, 256);
  const RealField f = gaussian(g, 1.0, 1.0);
  const auto spec = forward_transform(f);
  double err = 0.0;
  for (std::size_t k = 0; k < g->size(); ++k) {
    const double w = g->omega(k);
    err = std::max(err, std::abs(spec.envelope()[k] - cplx(std::exp(-0.5 * w * w))));
  }
  CHECK(err < 1e-13);
}

TEST_CASE("Parseval identity") {
  const auto g = FastTimeGrid::make(10.0, 512);
  const RealField f = testing::windowed_random(g, 11, 1.0);
  const auto spec = forward_transform(f);
  double s = 0.0;
  for (const auto& z : spec.envelope()) s += std::norm(z);
  CHECK(testing::rel(s * g->domega(), energy(f)) < 1e-12);
}

TEST_CASE("forward and inverse transforms are inverse") {
  const auto g = FastTimeGrid::make(10.0, 128);
  const RealField f = random_field(g, 3);
  CHECK(distance(inverse_transform(forward_transform(f)), f) / norm(f) < 1e-14);
  const ComplexField c = combine(random_field(g, 4), random_field(g, 5));
  CHECK(distance(inverse_transform(forward_transform(c)), c) / norm(c) < 1e-14);
}

TEST_CASE("long-double transforms agree with double transforms") {
  const auto g = FastTimeGrid::make(10.0, 64);
  std::mt19937 rng(1);
  std::normal_distribution<double> nd;
  std::vector<cplx> a(64), b(64);
  std::vector<lcplx> al(64), bl(64);
  for (std::size_t j = 0; j < 64; ++j) {
    a[j] = {nd(rng), nd(rng)};
    al[j] = {a[j].real(), a[j].imag()};
  }
  g->dft(a, b);
  g->dft(al, bl);
  double err = 0.0;
  for (std::size_t k = 0; k < 64; ++k) err = std::max(err, std::abs(b[k] - cplx(double(bl[k].real()), double(bl[k].imag()))));
  CHECK(err < 1e-13);
  g->idft(bl, al);
  for (std::size_t j = 0; j < 64; ++j) al[j] /= 64.0L;
  double back = 0.0;
  for (std::size_t j = 0; j < 64; ++j) back = std::max(back, double(std::abs(al[j] - lcplx(a[j].real(), a[j].imag()))));
  CHECK(back < 1e-17);
}

TEST_CASE("spectral derivative of a Gaussian") {
  const auto g = FastTimeGrid::make(30.0, 256);
  const RealField f = gaussian(g, 2.0, 1.0);
  const RealField d = spectral_derivative(f);
  double err = 0.0;
  for (std::size_t j = 0; j < g->size(); ++j) {
    const double x = g->x(j);
    err = std::max(err, std::abs(d.re()[j] - (-x) * 2.0 * std::exp(-0.5 * x * x)));
  }
  CHECK(err < 1e-12);
}

TEST_CASE("J is an exact quarter rotation") {
  const auto g = FastTimeGrid::make(10.0, 32);
  const RealField f = random_field(g, 9);
  const RealField jf = apply_j(f);
  for (std::size_t j = 0; j < f.size(); ++j) {
    CHECK(jf.re()[j] == -f.im()[j]);
    CHECK(jf.im()[j] == f.re()[j]);
  }
  CHECK(inner(f, jf) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(distance(rotate(f, std::numbers::pi / 2), jf) < 1e-14);
}

TEST_CASE("coordinates round trip and pairing") {
  const auto g = FastTimeGrid::make(10.0, 32);
  const RealField f = random_field(g, 21);
  const auto c = to_coordinates(f);
  REQUIRE(c.size() == 64);
  CHECK(c[0] == f.re()[0]);
  CHECK(c[1] == f.im()[0]);
  CHECK(from_coordinates<double>(g, c) == f);
  CHECK(energy(f) == doctest::Approx(inner(f, f)));
  CHECK(norm(f) == doctest::Approx(std::sqrt(energy(f))));
}

TEST_CASE("fields on different grids do not mix") {
  const RealField a(FastTimeGrid::make(10.0, 32));
  const RealField b(FastTimeGrid::make(20.0, 32));
  CHECK_THROWS_AS(inner(a, b), GridMismatch);
}

TEST_CASE("circular shift moves samples") {
  const auto g = FastTimeGrid::make(10.0, 16);
  const RealField f = random_field(g, 2);
  const RealField s = circular_shift(f, 3);
  CHECK(s.re()[3] == f.re()[0]);
  CHECK(s.im()[0] == f.im()[13]);
  CHECK(circular_shift(s, -3) == f);
}
