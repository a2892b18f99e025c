#pragma once

#include <cmath>
#include <vector>

#include "modelock/optimizer.hpp"
#include "modelock/verification.hpp"

namespace testing {

using namespace modelock;

// Coarse default cavity for fast tests.
inline LaserConfig small_config(std::size_t samples = 128) {
  LaserConfig cfg;
  cfg.grid.samples = samples;
  cfg.step.step_m = 2e-2;
  return cfg;
}

// Linear cavity: no Kerr, no gain saturation dynamics, no absorber.
inline LaserConfig linear_config(std::size_t samples = 64) {
  LaserConfig cfg = small_config(samples);
  cfg.sa.l0 = 0.0;
  for (FiberParams* f : {&cfg.smf1, &cfg.fa, &cfg.smf2}) {
    f->gamma = 0.0;
    f->g0 = 0.0;
  }
  return cfg;
}

inline RealField gaussian(const GridPtr& grid, double amp, double width, double chirp = 0.0, double shift = 0.0) {
  RealField f(grid);
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double x = (grid->x(j) - shift) / width;
    const double a = amp * std::exp(-0.5 * x * x);
    f.re()[j] = a * std::cos(chirp * x * x);
    f.im()[j] = a * std::sin(chirp * x * x);
  }
  return f;
}

// Gaussian-windowed random field: random, but well resolved on the grid.
inline RealField windowed_random(const GridPtr& grid, std::uint64_t seed, double width = 0.5) {
  RealField u = random_field(grid, seed);
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double w = std::exp(-std::pow(grid->x(j) / width, 2));
    u.re()[j] *= w;
    u.im()[j] *= w;
  }
  return u;
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace testing
