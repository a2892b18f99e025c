#include "modelock/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <sstream>

#include "json.hpp"

namespace modelock {

MinimizerOptions RunConfig::minimizer() const {
  MinimizerOptions o;
  o.obj_tol = obj_tol;
  o.grad_tol = grad_tol;
  o.max_iters = max_iters;
  return o;
}

void RunConfig::validate() const {
  laser.validate();
  if (!(seed_peak_power_w > 0.0)) throw std::invalid_argument("seed peak power must be positive");
  if (!(seed_fwhm_ps > 0.0)) throw std::invalid_argument("seed width must be positive");
  if (!(obj_tol >= 0.0) || !(grad_tol >= 0.0)) throw std::invalid_argument("tolerances must be non-negative");
}

ConfigError::ConfigError(std::string source, std::size_t line, const std::string& what)
    : std::runtime_error(line ? source + ":" + std::to_string(line) + ": " + what : source + ": " + what),
      line_(line) {}

std::string format_full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

// ---------------------------------------------------------------------------
// Config keys

enum class Kind { real, count, flag, u64 };

struct Key {
  const char* name;
  Kind kind;
  std::function<double&(RunConfig&)> real;
  std::function<std::size_t&(RunConfig&)> count;
  std::function<bool&(RunConfig&)> flag;
  std::function<std::uint64_t&(RunConfig&)> u64;
  std::function<std::string(double)> check;  // empty string when the value is acceptable
};

std::string positive(double v) { return v > 0.0 && std::isfinite(v) ? "" : "must be positive"; }
std::string non_negative(double v) { return v >= 0.0 && std::isfinite(v) ? "" : "must be non-negative"; }
std::string finite(double v) { return std::isfinite(v) ? "" : "must be finite"; }
std::string unit_interval(double v) { return v >= 0.0 && v < 1.0 ? "" : "must lie in [0, 1)"; }
std::string transmission(double v) { return v > 0.0 && v <= 1.0 ? "" : "must lie in (0, 1]"; }

Key real_key(const char* name, std::function<double&(RunConfig&)> f, std::string (*check)(double)) {
  return {name, Kind::real, std::move(f), {}, {}, {}, check};
}

Key count_key(const char* name, std::function<std::size_t&(RunConfig&)> f, std::string (*check)(double)) {
  return {name, Kind::count, {}, std::move(f), {}, {}, check};
}

std::string power_of_two(double v) {
  const auto n = static_cast<std::size_t>(v);
  return n >= 8 && (n & (n - 1)) == 0 ? "" : "must be a power of two >= 8";
}

std::string any(double) { return ""; }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(real_key("sa_l0", [](RunConfig& c) -> double& { return c.laser.sa.l0; }, unit_interval));
    k.push_back(real_key("sa_p_sat_w", [](RunConfig& c) -> double& { return c.laser.sa.p_sat; }, positive));
    auto fiber = [&](const char* beta, const char* gamma, const char* length, FiberParams LaserConfig::*f) {
      k.push_back(real_key(beta, [f](RunConfig& c) -> double& { return (c.laser.*f).beta; }, finite));
      k.push_back(real_key(gamma, [f](RunConfig& c) -> double& { return (c.laser.*f).gamma; }, finite));
      k.push_back(real_key(length, [f](RunConfig& c) -> double& { return (c.laser.*f).length; }, positive));
    };
    fiber("smf1_beta_ps2_per_m", "smf1_gamma_per_w_m", "smf1_length_m", &LaserConfig::smf1);
    fiber("fa_beta_ps2_per_m", "fa_gamma_per_w_m", "fa_length_m", &LaserConfig::fa);
    k.push_back(real_key("g0_per_m", [](RunConfig& c) -> double& { return c.laser.fa.g0; }, positive));
    k.push_back(real_key("e_sat_pj", [](RunConfig& c) -> double& { return c.laser.fa.e_sat; }, positive));
    k.push_back(real_key("omega_g_radps", [](RunConfig& c) -> double& { return c.laser.fa.omega_g; }, positive));
    fiber("smf2_beta_ps2_per_m", "smf2_gamma_per_w_m", "smf2_length_m", &LaserConfig::smf2);
    k.push_back(real_key("beta_rt_ps2", [](RunConfig& c) -> double& { return c.laser.beta_rt; }, finite));
    k.push_back(real_key("l_oc", [](RunConfig& c) -> double& { return c.laser.oc.l_oc; }, transmission));
    k.push_back(real_key("window_ps", [](RunConfig& c) -> double& { return c.laser.grid.window_ps; }, positive));
    k.push_back(count_key("samples_n", [](RunConfig& c) -> std::size_t& { return c.laser.grid.samples; },
                          power_of_two));
    k.push_back(real_key("step_m", [](RunConfig& c) -> double& { return c.laser.step.step_m; }, positive));
    k.push_back({"richardson", Kind::flag, {}, {}, [](RunConfig& c) -> bool& { return c.laser.step.richardson; },
                 {}, any});
    k.push_back(real_key("seed_peak_power_w", [](RunConfig& c) -> double& { return c.seed_peak_power_w; },
                         positive));
    k.push_back(real_key("seed_fwhm_ps", [](RunConfig& c) -> double& { return c.seed_fwhm_ps; }, positive));
    k.push_back(count_key("evolve_roundtrips", [](RunConfig& c) -> std::size_t& { return c.evolve_roundtrips; },
                          any));
    k.push_back(real_key("obj_tol", [](RunConfig& c) -> double& { return c.obj_tol; }, non_negative));
    k.push_back(real_key("grad_tol", [](RunConfig& c) -> double& { return c.grad_tol; }, non_negative));
    k.push_back(count_key("max_iters", [](RunConfig& c) -> std::size_t& { return c.max_iters; }, any));
    k.push_back(count_key("top_k_eigenvectors",
                          [](RunConfig& c) -> std::size_t& { return c.top_k_eigenvectors; }, any));
    k.push_back({"seed", Kind::u64, {}, {}, {}, [](RunConfig& c) -> std::uint64_t& { return c.seed; }, any});
    return k;
  }();
  return table;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_real(std::string_view v, bool& ok) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  ok = res.ec == std::errc() && res.ptr == end;
  return out;
}

std::uint64_t parse_unsigned(std::string_view v, bool& ok) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  ok = res.ec == std::errc() && res.ptr == end;
  return out;
}

}  // namespace

RunConfig parse_config_text(std::string_view text, const std::string& source) {
  RunConfig cfg;
  std::map<std::string, std::size_t> seen;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const std::string name(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError(source, line_no, "missing value for '" + name + "'");

    const auto& table = keys();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return name == k.name; });
    if (it == table.end()) throw ConfigError(source, line_no, "unknown key '" + name + "'");
    if (const auto prev = seen.find(name); prev != seen.end()) {
      throw ConfigError(source, line_no, "'" + name + "' already set on line " + std::to_string(prev->second));
    }
    seen[name] = line_no;

    bool ok = false;
    double as_real = 0.0;
    switch (it->kind) {
      case Kind::real:
        as_real = parse_real(value, ok);
        if (ok) it->real(cfg) = as_real;
        break;
      case Kind::count: {
        const auto n = parse_unsigned(value, ok);
        as_real = static_cast<double>(n);
        if (ok) it->count(cfg) = static_cast<std::size_t>(n);
        break;
      }
      case Kind::u64: {
        const auto n = parse_unsigned(value, ok);
        if (ok) it->u64(cfg) = n;
        break;
      }
      case Kind::flag:
        ok = value == "true" || value == "false" || value == "1" || value == "0";
        if (ok) it->flag(cfg) = value == "true" || value == "1";
        break;
    }
    if (!ok) throw ConfigError(source, line_no, "bad value '" + std::string(value) + "' for '" + name + "'");
    if (const std::string why = it->check(as_real); !why.empty()) {
      throw ConfigError(source, line_no, name + " " + why);
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(source, 0, ex.what());
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string emit_config(const RunConfig& cfg) {
  RunConfig c = cfg;
  std::ostringstream out;
  for (const auto& k : keys()) {
    out << k.name << " = ";
    switch (k.kind) {
      case Kind::real: out << format_full(k.real(c)); break;
      case Kind::count: out << k.count(c); break;
      case Kind::u64: out << k.u64(c); break;
      case Kind::flag: out << (k.flag(c) ? "true" : "false"); break;
    }
    out << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << header << '\n';
  return out;
}

class Row {
 public:
  explicit Row(std::ostream& os) : os_(os) {}
  ~Row() { os_ << '\n'; }
  Row& operator<<(double v) { return put(format_full(v)); }
  Row& operator<<(std::size_t v) { return put(std::to_string(v)); }
  Row& operator<<(const std::string& v) { return put(v); }

 private:
  Row& put(const std::string& s) {
    if (!first_) os_ << ',';
    first_ = false;
    os_ << s;
    return *this;
  }
  std::ostream& os_;
  bool first_ = true;
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::string(trim(cell)));
  return out;
}

}  // namespace

void write_pulse_csv(const std::filesystem::path& path, const RealField& psi) {
  auto out = open_csv(path, "x_ps,re,im");
  for (std::size_t j = 0; j < psi.size(); ++j) Row(out) << psi.grid().x(j) << psi.re()[j] << psi.im()[j];
}

RealField read_pulse_csv(const std::filesystem::path& path, const GridPtr& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pulse file " + path.string());
  std::string line;
  if (!std::getline(in, line) || split(line) != std::vector<std::string>{"x_ps", "re", "im"}) {
    throw std::runtime_error(path.string() + ": expected header 'x_ps,re,im'");
  }
  RealField psi(grid);
  std::size_t j = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    bool ok = cells.size() == 3;
    double v[3] = {};
    for (std::size_t c = 0; ok && c < 3; ++c) v[c] = parse_real(cells[c], ok);
    if (!ok) throw std::runtime_error(path.string() + ":" + std::to_string(j + 2) + ": malformed row");
    if (j >= grid->size()) throw std::runtime_error(path.string() + ": more rows than grid samples");
    if (std::abs(v[0] - grid->x(j)) > 1e-9 * grid->dx()) {
      throw std::runtime_error(path.string() + ": abscissa of row " + std::to_string(j + 2) +
                               " does not match the configured grid");
    }
    psi.re()[j] = v[1];
    psi.im()[j] = v[2];
    ++j;
  }
  if (j != grid->size()) throw std::runtime_error(path.string() + ": fewer rows than grid samples");
  return psi;
}

void write_stages_csv(const std::filesystem::path& path, const RoundTripOutput& rt) {
  auto out = open_csv(path, "x_ps,input_w,sa_w,smf1_w,fa_w,smf2_w,dcf_w,oc_w");
  const auto stages = rt.stages();
  const auto& grid = rt.input.grid();
  for (std::size_t j = 0; j < grid.size(); ++j) {
    Row row(out);
    row << grid.x(j);
    for (const RealField* f : stages) row << (f->re()[j] * f->re()[j] + f->im()[j] * f->im()[j]);
  }
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& history) {
  auto out = open_csv(path, "iter,objective,grad_norm,theta,peak_power_w,rms_width_ps");
  for (const auto& r : history) Row(out) << r.iter << r.objective << r.grad_norm << r.theta << r.peak_power << r.rms_width;
}

void write_eigenvalues_csv(const std::filesystem::path& path, const SpectrumReport& report) {
  auto out = open_csv(path, "index,re,im,abs,class");
  for (std::size_t i = 0; i < report.eigenvalues.size(); ++i) {
    const cplx z = report.eigenvalues[i];
    const std::string cls = i < report.classes.size() ? to_string(report.classes[i]) : "";
    Row(out) << i << z.real() << z.imag() << std::abs(z) << cls;
  }
}

void write_essential_curve_csv(const std::filesystem::path& path, const EssentialSpectrumCurve& curve) {
  auto out = open_csv(path, "omega_radps,re_plus,im_plus,re_minus,im_minus");
  for (std::size_t i = 0; i < curve.omega.size(); ++i) {
    Row(out) << curve.omega[i] << curve.plus[i].real() << curve.plus[i].imag() << curve.minus[i].real()
             << curve.minus[i].imag();
  }
}

void write_eigenfunction_csv(const std::filesystem::path& path, const ComplexField& u) {
  auto out = open_csv(path, "x_ps,re1,im1,re2,im2,amplitude");
  const auto amp = amplitude(u);
  for (std::size_t j = 0; j < u.size(); ++j) {
    Row(out) << u.grid().x(j) << u.re()[j].real() << u.re()[j].imag() << u.im()[j].real() << u.im()[j].imag()
             << amp[j];
  }
}

void write_convergence_csv(const std::filesystem::path& path, const ConvergenceStudy& study) {
  auto out = open_csv(path, "dt_m,abs_error,rel_error");
  for (const auto& p : study.points) {
    if (p.ok) Row(out) << p.dt << p.abs_error << p.rel_error;
  }
}

void write_fornberg_csv(const std::filesystem::path& path, const std::vector<FornbergPoint>& scan) {
  auto out = open_csv(path, "r,error,error_sqrt_joule");
  for (const auto& p : scan) Row(out) << p.r << p.abs_error << p.abs_error_sqrt_joule;
}

void write_gradient_csv(const std::filesystem::path& path, const GradientCheck& check) {
  auto out = open_csv(path, "epsilon,rel_error");
  for (std::size_t i = 0; i < check.epsilon.size(); ++i) Row(out) << check.epsilon[i] << check.rel_error[i];
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& sweep) {
  auto out = open_csv(path,
                      "value,converged,iterations,objective,theta,peak_power_w,rms_width_ps,energy_pj,gain_integral");
  for (const auto& s : sweep.steps) {
    Row(out) << s.value << std::string(s.report.converged ? "1" : "0") << s.report.iterations << s.report.objective
             << s.report.theta << s.metrics.peak_power << s.metrics.rms_width << s.metrics.energy << s.gain_integral;
  }
}

// ---------------------------------------------------------------------------
// Manifest

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

RunDirectory::RunDirectory(std::filesystem::path root, std::string command, const RunConfig& cfg)
    : root_(std::move(root)), command_(std::move(command)), config_text_(emit_config(cfg)), seed_(cfg.seed),
      started_(utc_now()) {
  std::filesystem::create_directories(root_);
  std::ofstream(file("config.cfg")) << config_text_;
}

std::filesystem::path RunDirectory::file(const std::string& name) {
  if (std::find(names_.begin(), names_.end(), name) == names_.end()) names_.push_back(name);
  return root_ / name;
}

std::vector<ArtifactEntry> RunDirectory::finalize(double wall_seconds) {
  std::vector<ArtifactEntry> entries;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& name : names_) {
    const auto p = root_ / name;
    if (!std::filesystem::exists(p)) continue;
    ArtifactEntry e{name, sha256_file(p), std::filesystem::file_size(p)};
    files.push_back({{"path", e.path}, {"sha256", e.sha256}, {"bytes", e.bytes}});
    entries.push_back(std::move(e));
  }
  nlohmann::ordered_json m;
  m["tool"] = "modelock";
  m["version"] = kToolVersion;
  m["command"] = command_;
  m["started_utc"] = started_;
  m["wall_seconds"] = wall_seconds;
  m["seed"] = seed_;
  m["config"] = config_text_;
  m["artifacts"] = files;
  std::ofstream(root_ / "manifest.json") << m.dump(2) << '\n';
  return entries;
}

}  // namespace modelock
