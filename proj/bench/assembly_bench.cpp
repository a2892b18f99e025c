// Serial vs OpenMP assembly of the modified monodromy matrix.
//
//   assembly_bench [--samples N] [--window PS] [--threads T ...] [--repeat R]
//
// The base point is the evolved seed pulse (assembly cost does not depend on
// whether the pulse is stationary). Prints wall times, speedups and the
// largest entrywise difference between the two assemblies.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "CLI11.hpp"
#include "modelock/optimizer.hpp"
#include "modelock/spectrum.hpp"

using namespace modelock;

namespace {

template <class F>
double best_of(std::size_t repeat, F&& f) {
  double best = 1e300;
  for (std::size_t r = 0; r < repeat; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"monodromy assembly benchmark"};
  std::size_t samples = 128;
  double window = 10.0;
  std::size_t repeat = 1;
  std::vector<int> threads;
  app.add_option("--samples", samples, "grid size (power of two)")->capture_default_str();
  app.add_option("--window", window, "window [ps]")->capture_default_str();
  app.add_option("--repeat", repeat, "repetitions (best time is reported)")->capture_default_str();
  app.add_option("--threads", threads, "thread counts for the parallel runs (default: 1..max)");
  CLI11_PARSE(app, argc, argv);

  LaserConfig cfg;
  cfg.grid.samples = samples;
  cfg.grid.window_ps = window;
  const auto grid = cfg.make_grid();
  const RealField psi = evolve_stage(cfg, gaussian_seed(400.0, 0.3, grid), 10);
  const double theta = evaluate_poincare(cfg, psi, false).theta;
  const auto rt = round_trip(cfg, psi);

  if (threads.empty()) {
    for (int t = 1; t <= omp_get_max_threads(); t *= 2) threads.push_back(t);
    if (threads.back() != omp_get_max_threads()) threads.push_back(omp_get_max_threads());
  }

  MonodromyMatrix serial;
  const double t_serial = best_of(repeat, [&] { serial = assemble_matrix_serial(cfg, rt, theta); });
  std::printf("N = %zu, dim = %zu, cores = %d\n", samples, serial.dim, omp_get_num_procs());
  std::printf("%-10s %10s %9s %12s\n", "variant", "seconds", "speedup", "max |diff|");
  std::printf("%-10s %10.3f %9.2f %12s\n", "serial", t_serial, 1.0, "-");
  for (const int t : threads) {
    MonodromyMatrix par;
    const double secs = best_of(repeat, [&] { par = assemble_matrix(cfg, rt, theta, static_cast<std::size_t>(t)); });
    double diff = 0.0;
    for (std::size_t i = 0; i < par.data.size(); ++i) diff = std::max(diff, std::abs(par.data[i] - serial.data[i]));
    char label[32];
    std::snprintf(label, sizeof label, "omp x%d", t);
    std::printf("%-10s %10.3f %9.2f %12.3g\n", label, secs, t_serial / secs, diff);
  }
  return 0;
}
