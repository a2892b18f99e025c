#pragma once

// Configuration files, CSV artifacts and run manifests.
//
// Config format: one `key = value` per line, `#` starts a comment. Keys carry
// their unit in the name (e_sat_pj, omega_g_radps, ...). Unspecified keys
// keep their defaults; unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "modelock/optimizer.hpp"
#include "modelock/spectrum.hpp"
#include "modelock/verification.hpp"

namespace modelock {

/// Everything a run needs: the laser plus the workflow knobs.
struct RunConfig {
  LaserConfig laser;
  double seed_peak_power_w = 400.0;
  double seed_fwhm_ps = 0.3;
  std::size_t evolve_roundtrips = 10;
  double obj_tol = 1e-20;
  double grad_tol = 1e-10;
  std::size_t max_iters = 200;
  std::size_t top_k_eigenvectors = 6;
  std::uint64_t seed = 20240601;

  MinimizerOptions minimizer() const;
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }  // 0 when not tied to a line

 private:
  std::size_t line_;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, const std::string& source = "<config>");
/// Canonical text; parse_config_text(emit_config(c)) reproduces c exactly.
std::string emit_config(const RunConfig& cfg);

/// 17 significant digits, the shortest form that round-trips a double.
std::string format_full(double v);

// ---------------------------------------------------------------------------
// CSV artifacts (header line, comma separated, 17 significant digits)

/// x_ps, re, im
void write_pulse_csv(const std::filesystem::path& path, const RealField& psi);
/// Reads a pulse written by write_pulse_csv; the abscissae must match grid.
RealField read_pulse_csv(const std::filesystem::path& path, const GridPtr& grid);

/// x_ps, then power_W of every stage in loop order.
void write_stages_csv(const std::filesystem::path& path, const RoundTripOutput& rt);
/// iter, objective, grad_norm, theta, peak_power_w, rms_width_ps
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& history);
/// index, re, im, abs, class
void write_eigenvalues_csv(const std::filesystem::path& path, const SpectrumReport& report);
/// omega_radps, re_plus, im_plus, re_minus, im_minus
void write_essential_curve_csv(const std::filesystem::path& path, const EssentialSpectrumCurve& curve);
/// x_ps, re1, im1, re2, im2, amplitude
void write_eigenfunction_csv(const std::filesystem::path& path, const ComplexField& u);
/// dt_m, abs_error, rel_error
void write_convergence_csv(const std::filesystem::path& path, const ConvergenceStudy& study);
/// r, error, error_sqrt_joule
void write_fornberg_csv(const std::filesystem::path& path, const std::vector<FornbergPoint>& scan);
/// epsilon, rel_error
void write_gradient_csv(const std::filesystem::path& path, const GradientCheck& check);
/// value, converged, iterations, objective, theta, peak_power_w, rms_width_ps, energy_pj, gain_integral
void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep);

// ---------------------------------------------------------------------------
// Run directory and manifest

std::string sha256_file(const std::filesystem::path& path);

struct ArtifactEntry {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

/// Collects the files a command writes and, at the end, a manifest.json
/// listing each with its checksum.
class RunDirectory {
 public:
  RunDirectory(std::filesystem::path root, std::string command, const RunConfig& cfg);

  const std::filesystem::path& root() const noexcept { return root_; }
  /// Absolute path for a new artifact; the name is recorded for the manifest.
  std::filesystem::path file(const std::string& name);
  /// Writes manifest.json. Call once, after every artifact is closed.
  std::vector<ArtifactEntry> finalize(double wall_seconds);

 private:
  std::filesystem::path root_;
  std::string command_;
  std::string config_text_;
  std::uint64_t seed_;
  std::string started_;
  std::vector<std::string> names_;
};

constexpr std::string_view kToolVersion = "1.0.0";

}  // namespace modelock
