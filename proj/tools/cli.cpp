#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "robustspin/calibration.hpp"
#include "robustspin/dd.hpp"
#include "robustspin/errors.hpp"
#include "robustspin/family.hpp"
#include "robustspin/landscape.hpp"
#include "robustspin/rb.hpp"
#include "robustspin/readout.hpp"
#include "robustspin/roc.hpp"
#include "robustspin/units.hpp"

#ifndef ROBUSTSPIN_VERSION
#define ROBUSTSPIN_VERSION "0.0.0"
#endif

namespace robustspin::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Reads a flat config file as if every key belonged to the subcommand named
// on the command line, so "n = 61" in a file passed to `scan` sets --n.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(std::string sub) : sub_(std::move(sub)) {}
  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    auto items = CLI::ConfigTOML::from_config(in);
    for (auto& it : items)
      if (it.parents.empty() && !sub_.empty()) it.parents = {sub_};
    return items;
  }

 private:
  std::string sub_;
};

// Files written by one command. Unless commit() is called, everything
// written so far is deleted when the object goes away.
class Outputs {
 public:
  explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& p : written_) fs::remove(p, ec);
  }

  fs::path write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    const fs::path p = dir_ / name;
    std::ofstream os(p);
    if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
    written_.push_back(p);
    body(os);
    os.flush();
    if (!os) throw IoError("write failed for '" + p.string() + "'");
    return p;
  }

  void write_json(const std::string& name, const json& j) {
    write(name, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  }

  void commit() { committed_ = true; }
  const std::vector<fs::path>& written() const { return written_; }

 private:
  fs::path dir_;
  std::vector<fs::path> written_;
  bool committed_ = false;
};

struct Common {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  unsigned threads = 0;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--out_dir", c.out_dir, "Directory for all artifacts")->capture_default_str();
  sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores")->capture_default_str();
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_manifest(Outputs& out, CLI::App* sub, const Common& c, const std::string& stem = "") {
  json m;
  m["command"] = sub->get_name();
  m["version"] = ROBUSTSPIN_VERSION;
  m["seed"] = c.seed;
  m["config"] = sub->config_to_str(true, false);
  json files = json::array();
  for (const auto& p : out.written()) files.push_back(p.filename().string());
  m["artifacts"] = files;
  m["timestamp"] = timestamp();
  out.write_json((stem.empty() ? sub->get_name() : stem) + "_manifest.json", m);
}

double mhz_to_rad(double f) { return units::mhz(f); }

Waveform load_or_throw(const std::string& path, const char* what) {
  if (path.empty()) throw InvalidArgument(std::string(what) + " waveform path is required for the roc family");
  return load_waveform(path);
}

PulseFamily make_family(const std::string& name, double omega, double dt, const std::string& roc_pi,
                        const std::string& roc_half_pi) {
  if (name == "square") return PulseFamily::square(omega, dt);
  if (name == "corpse") return PulseFamily::corpse(omega, dt);
  if (name == "bb1") return PulseFamily::bb1(omega, dt);
  if (name == "ideal") return PulseFamily::instantaneous();
  if (name == "roc") {
    auto pi = std::make_shared<Waveform>(load_or_throw(roc_pi, "--roc_pi"));
    std::shared_ptr<Waveform> half;
    if (!roc_half_pi.empty()) half = std::make_shared<Waveform>(load_waveform(roc_half_pi));
    return PulseFamily::from_waveforms("roc", pi, half);
  }
  throw InvalidArgument("unknown pulse family '" + name + "'");
}

// ---- optimize ------------------------------------------------------------

struct OptimizeOpts {
  Common common;
  std::string target = "pi";
  double target_phase_deg = 0.0;
  std::size_t slices = RocConfig{}.slices;
  double dt_ns = 1.0;
  double omega_mhz = 10.0;
  double epsilon1_mhz = 1.0;
  double epsilon2 = 0.1;
  int m_max = 2;
  double mu1_detuning = 1.0, mu1_rabi = 1.0, mu1_mixed = 0.0;
  double mu2_detuning = RocConfig{}.mu2[0][0], mu2_rabi = RocConfig{}.mu2[1][1],
         mu2_mixed = RocConfig{}.mu2[0][1];
  int max_iters = RocConfig{}.max_iters;
  double fitness_goal = 1.0;
  int stall_window = RocConfig{}.stall_window;
  double smooth_weight = 0.0;
  bool clamp_ends = false;
  double init_amplitude = 0.1;
  std::string direction = "lbfgs";
  std::string initial;
  std::string name = "roc_pi";
};

void add_optimize(CLI::App& app, OptimizeOpts& o) {
  auto* s = app.add_subcommand("optimize", "Synthesize a robust pulse; writes <name>.txt and <name>_trace.csv");
  add_common(s, o.common);
  s->add_option("--target", o.target, "Target rotation: pi or half_pi")
      ->check(CLI::IsMember({"pi", "half_pi"}))
      ->capture_default_str();
  s->add_option("--target_phase_deg", o.target_phase_deg)->capture_default_str();
  s->add_option("--slices", o.slices)->capture_default_str();
  s->add_option("--dt_ns", o.dt_ns)->capture_default_str();
  s->add_option("--omega_mhz", o.omega_mhz, "Maximum Rabi frequency")->capture_default_str();
  s->add_option("--epsilon1_mhz", o.epsilon1_mhz, "Detuning noise scale")->capture_default_str();
  s->add_option("--epsilon2", o.epsilon2, "Fractional Rabi noise scale")->capture_default_str();
  s->add_option("--m_max", o.m_max)->check(CLI::Range(1, 2))->capture_default_str();
  s->add_option("--mu1_detuning", o.mu1_detuning)->capture_default_str();
  s->add_option("--mu1_rabi", o.mu1_rabi)->capture_default_str();
  s->add_option("--mu1_mixed", o.mu1_mixed)->capture_default_str();
  s->add_option("--mu2_detuning", o.mu2_detuning)->capture_default_str();
  s->add_option("--mu2_rabi", o.mu2_rabi)->capture_default_str();
  s->add_option("--mu2_mixed", o.mu2_mixed)->capture_default_str();
  s->add_option("--max_iters", o.max_iters)->capture_default_str();
  s->add_option("--fitness_goal", o.fitness_goal, "Stop once reached; below 1 a miss exits with status 3")
      ->capture_default_str();
  s->add_option("--stall_window", o.stall_window)->capture_default_str();
  s->add_option("--smooth_weight", o.smooth_weight)->capture_default_str();
  s->add_option("--clamp_ends", o.clamp_ends)->capture_default_str();
  s->add_option("--init_amplitude", o.init_amplitude)->capture_default_str();
  s->add_option("--direction", o.direction)->check(CLI::IsMember({"lbfgs", "gradient"}))->capture_default_str();
  s->add_option("--initial", o.initial, "Start from this waveform file instead of a random pulse");
  s->add_option("--name", o.name, "Base name of the output files")->capture_default_str();
}

int run_optimize(CLI::App* sub, const OptimizeOpts& o, std::ostream& out) {
  RocConfig cfg;
  const double theta = o.target == "pi" ? units::kPi : units::kPi / 2;
  cfg.target = ideal_rotation(theta, units::deg(o.target_phase_deg));
  cfg.slices = o.slices;
  cfg.dt = units::ns(o.dt_ns);
  cfg.omega_max = mhz_to_rad(o.omega_mhz);
  cfg.epsilon1 = mhz_to_rad(o.epsilon1_mhz);
  cfg.epsilon2 = o.epsilon2;
  cfg.m_max = o.m_max;
  cfg.mu1 = {{{o.mu1_detuning, o.mu1_mixed}, {o.mu1_mixed, o.mu1_rabi}}};
  cfg.mu2 = {{{o.mu2_detuning, o.mu2_mixed}, {o.mu2_mixed, o.mu2_rabi}}};
  cfg.max_iters = o.max_iters;
  cfg.fitness_goal = o.fitness_goal;
  cfg.stall_window = o.stall_window;
  cfg.smooth_weight = o.smooth_weight;
  cfg.clamp_ends = o.clamp_ends;
  cfg.init_amplitude = o.init_amplitude;
  cfg.seed = o.common.seed;
  cfg.direction = o.direction == "lbfgs" ? SearchDirection::Lbfgs : SearchDirection::Gradient;
  cfg.validate();

  std::optional<Waveform> init;
  if (!o.initial.empty()) init = load_waveform(o.initial);
  const RocResult r = optimize(cfg, init);
  if (!std::isfinite(r.final_fitness)) throw NumericalError("optimize: fitness became non-finite");

  Outputs files(o.common.out_dir);
  files.write(o.name + ".txt", [&](std::ostream& os) { write_waveform(os, r.waveform); });
  files.write(o.name + "_trace.csv", [&](std::ostream& os) {
    os << "iteration,fitness\n" << std::setprecision(12);
    for (std::size_t i = 0; i < r.fitness_trace.size(); ++i) os << i << ',' << r.fitness_trace[i] << '\n';
  });
  // one manifest per pulse so a pi and a pi/2 run can share a directory
  write_manifest(files, sub, o.common, o.name);
  files.commit();

  out << "fitness " << std::setprecision(10) << r.final_fitness << " after " << r.iterations << " iterations"
      << (r.converged ? " (goal reached)" : "") << '\n';
  if (!r.converged && o.fitness_goal < 1.0) return kNumericalError;
  return kOk;
}

// ---- scan ------------------------------------------------------------------

struct ScanOpts {
  Common common;
  std::vector<std::string> pulses{"square", "corpse", "bb1"};
  std::string roc_pi;
  double omega_mhz = 10.0;
  double dt_ns = 1.0;
  double detuning_range_frac = 0.3;
  double rabi_range_frac = 0.3;
  std::size_t n = 61;
  double level = 0.9;
  std::size_t cut_points = 201;
};

void add_scan(CLI::App& app, ScanOpts& o) {
  auto* s = app.add_subcommand("scan", "Fidelity landscapes of pi pulses; one CSV per family");
  add_common(s, o.common);
  s->add_option("--pulses", o.pulses, "Families among square, corpse, bb1, roc")
      ->check(CLI::IsMember({"square", "corpse", "bb1", "roc"}))
      ->capture_default_str();
  s->add_option("--roc_pi", o.roc_pi, "Waveform file of the ROC pi pulse");
  s->add_option("--omega_mhz", o.omega_mhz)->capture_default_str();
  s->add_option("--dt_ns", o.dt_ns)->capture_default_str();
  s->add_option("--detuning_range_frac", o.detuning_range_frac, "Half-width as a fraction of Omega")
      ->capture_default_str();
  s->add_option("--rabi_range_frac", o.rabi_range_frac)->capture_default_str();
  s->add_option("--n", o.n, "Grid points per axis")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--level", o.level, "Contour level for the area summary")->capture_default_str();
  s->add_option("--cut_points", o.cut_points, "Points of the delta1 = 0 cut over |detuning| <= Omega")
      ->capture_default_str();
}

int run_scan(CLI::App* sub, const ScanOpts& o, std::ostream& out) {
  const double omega = mhz_to_rad(o.omega_mhz);
  const double dt = units::ns(o.dt_ns);
  ScanOptions so;
  so.detuning_range = o.detuning_range_frac;
  so.rabi_range = o.rabi_range_frac;
  so.n = o.n;
  so.threads = o.common.threads;

  std::vector<FidelityLandscape> maps;
  std::vector<std::vector<std::pair<double, double>>> cuts;
  for (const auto& name : o.pulses) {
    const PulseFamily fam = make_family(name, omega, dt, o.roc_pi, "");
    maps.push_back(scan(*fam.pi, so, name));
    cuts.push_back(detuning_cut(*fam.pi, 1.0, o.cut_points));
  }

  Outputs files(o.common.out_dir);
  json summary = json::object();
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const auto& m = maps[k];
    files.write("landscape_" + m.pulse_label + ".csv", [&](std::ostream& os) { write_landscape_csv(os, m); });
    files.write("cut_" + m.pulse_label + ".csv", [&](std::ostream& os) {
      os << "detuning_hz,fidelity\n" << std::setprecision(9);
      for (const auto& [d, f] : cuts[k]) os << d / units::kTwoPi << ',' << f << '\n';
    });
    summary[m.pulse_label] = {{"contour_area", contour_area(m, o.level)},
                              {"extent_detuning", contour_extent(m, o.level, Axis::Detuning)},
                              {"extent_rabi", contour_extent(m, o.level, Axis::Rabi)}};
    out << m.pulse_label << ": area(F >= " << o.level << ") = " << contour_area(m, o.level) << '\n';
  }
  files.write_json("scan_summary.json", {{"level", o.level}, {"pulses", summary}});
  write_manifest(files, sub, o.common);
  files.commit();
  return kOk;
}

// ---- rb --------------------------------------------------------------------

struct RbOpts {
  Common common;
  std::string pulses = "square";
  std::string roc_pi, roc_half_pi;
  double omega_mhz = 10.0;
  double dt_ns = 1.0;
  std::vector<int> lengths = RbSuiteOptions{}.lengths;
  int n_gate_sets = 10;
  int n_paulis = 4;
  double detuning_mhz = 0.0;
  double rabi_error = 0.0;
  double sigma_mhz = 0.0;
  double t2prime_us = 0.0;
  std::size_t samples = 1;
  bool idle_identity = false;
};

void add_rb(CLI::App& app, RbOpts& o) {
  auto* s = app.add_subcommand("rb", "Randomized benchmarking; writes rb_<family>.csv and a fit JSON");
  add_common(s, o.common);
  s->add_option("--pulses", o.pulses)
      ->check(CLI::IsMember({"square", "corpse", "bb1", "roc", "ideal"}))
      ->capture_default_str();
  s->add_option("--roc_pi", o.roc_pi);
  s->add_option("--roc_half_pi", o.roc_half_pi);
  s->add_option("--omega_mhz", o.omega_mhz)->capture_default_str();
  s->add_option("--dt_ns", o.dt_ns)->capture_default_str();
  s->add_option("--lengths", o.lengths, "Strictly increasing sequence lengths")->capture_default_str();
  s->add_option("--n_gate_sets", o.n_gate_sets)->capture_default_str();
  s->add_option("--n_paulis", o.n_paulis)->capture_default_str();
  s->add_option("--detuning_mhz", o.detuning_mhz, "Static detuning")->capture_default_str();
  s->add_option("--rabi_error", o.rabi_error, "Static fractional Rabi error")->capture_default_str();
  s->add_option("--sigma_mhz", o.sigma_mhz, "Gaussian detuning spread, 0 = none")->capture_default_str();
  s->add_option("--t2prime_us", o.t2prime_us, "Lorentzian Rabi decay time, 0 = none")->capture_default_str();
  s->add_option("--samples", o.samples, "Monte Carlo samples when noise is on")->capture_default_str();
  s->add_option("--idle_identity", o.idle_identity, "Identity gates idle for one pi duration")
      ->capture_default_str();
}

int run_rb(CLI::App* sub, const RbOpts& o, std::ostream& out) {
  const double omega = mhz_to_rad(o.omega_mhz);
  const PulseFamily fam = make_family(o.pulses, omega, units::ns(o.dt_ns), o.roc_pi, o.roc_half_pi);
  RbSuiteOptions so;
  so.lengths = o.lengths;
  so.n_gate_sets = o.n_gate_sets;
  so.n_paulis = o.n_paulis;
  so.seed = o.common.seed;
  const auto suite = generate_rb_suite(so);

  const ErrorPoint offset{mhz_to_rad(o.detuning_mhz), o.rabi_error, 0.0};
  RbError err = offset;
  if (o.sigma_mhz > 0.0 || o.t2prime_us > 0.0) {
    NoiseEnsemble ens;
    ens.detuning.sigma = mhz_to_rad(o.sigma_mhz);
    ens.rabi.gamma = o.t2prime_us > 0.0 ? gamma_from_t2prime(units::us(o.t2prime_us)) : 0.0;
    ens.sample_count = o.samples;
    ens.seed = o.common.seed;
    ens.omega = omega;
    ens.offset = offset;
    err = ens;
  }
  RbSimOptions sim;
  sim.idle_identity = o.idle_identity;
  sim.threads = o.common.threads;
  const RbCurve curve = simulate_rb(suite, fam, err, sim);
  const RbFit fit = fit_rb(curve);

  Outputs files(o.common.out_dir);
  files.write("rb_" + fam.name + ".csv", [&](std::ostream& os) { write_rb_csv(os, curve); });
  files.write_json("rb_" + fam.name + "_fit.json", {{"pulses", fam.name},
                                                    {"fa", fit.fa},
                                                    {"fa_err", fit.fa_err},
                                                    {"d_if", fit.dif},
                                                    {"d_if_err", fit.dif_err},
                                                    {"rss", fit.rss},
                                                    {"identifiable", fit.identifiable}});
  write_manifest(files, sub, o.common);
  files.commit();
  out << std::setprecision(6) << fam.name << ": F_a = " << fit.fa << " +/- " << fit.fa_err << ", d_if = " << fit.dif
      << '\n';
  return kOk;
}

// ---- fid / rabi -------------------------------------------------------------

struct FidOpts {
  Common common;
  double sigma_mhz = 0.226;
  double delta_mhz = 2.0;
  double t_max_us = 3.0;
  std::size_t points = 301;
  std::size_t samples = 100000;
};

void add_fid(CLI::App& app, FidOpts& o) {
  auto* s = app.add_subcommand("fid", "Monte Carlo free-induction decay and T2* fit");
  add_common(s, o.common);
  s->add_option("--sigma_mhz", o.sigma_mhz, "Gaussian detuning standard deviation")->capture_default_str();
  s->add_option("--delta_mhz", o.delta_mhz, "Set detuning")->capture_default_str();
  s->add_option("--t_max_us", o.t_max_us)->capture_default_str();
  s->add_option("--points", o.points)->capture_default_str();
  s->add_option("--samples", o.samples)->capture_default_str();
}

void write_curve(Outputs& files, const std::string& name, const DecayCurve& c,
                 const std::function<double(double)>& model) {
  files.write(name, [&](std::ostream& os) {
    os << "t_s,population,model\n" << std::setprecision(12);
    for (std::size_t i = 0; i < c.times.size(); ++i)
      os << c.times[i] << ',' << c.population[i] << ',' << model(c.times[i]) << '\n';
  });
}

int run_fid(CLI::App* sub, const FidOpts& o, std::ostream& out) {
  require(o.sigma_mhz > 0.0, "fid: sigma_mhz must be positive");
  NoiseEnsemble ens;
  ens.detuning.sigma = mhz_to_rad(o.sigma_mhz);
  ens.sample_count = o.samples;
  ens.seed = o.common.seed;
  const double delta = mhz_to_rad(o.delta_mhz);
  const auto curve = simulate_fid(ens, delta, time_grid(0.0, units::us(o.t_max_us), o.points));
  const auto fit = fit_fid(curve, delta);

  Outputs files(o.common.out_dir);
  write_curve(files, "fid.csv", curve, [&](double t) { return fid_probability(t, fit.delta, fit.sigma); });
  files.write_json("fid_fit.json", {{"t2star_us", units::to_us(fit.t2star)},
                                    {"t2star_err_us", units::to_us(fit.t2star_err)},
                                    {"sigma_mhz", units::to_mhz(fit.sigma)},
                                    {"sigma_err_mhz", units::to_mhz(fit.sigma_err)},
                                    {"delta_mhz", units::to_mhz(fit.delta)},
                                    {"delta_err_mhz", units::to_mhz(fit.delta_err)},
                                    {"converged", fit.converged}});
  write_manifest(files, sub, o.common);
  files.commit();
  out << std::setprecision(6) << "T2* = " << units::to_us(fit.t2star) << " us\n";
  return kOk;
}

struct RabiOpts {
  Common common;
  double omega_mhz = 10.0;
  double t2prime_us = 50.01;
  double t_max_us = 100.0;
  std::size_t points = 401;
  std::size_t samples = 100000;
};

void add_rabi(CLI::App& app, RabiOpts& o) {
  auto* s = app.add_subcommand("rabi", "Monte Carlo Rabi nutation and T2' fit");
  add_common(s, o.common);
  s->add_option("--omega_mhz", o.omega_mhz)->capture_default_str();
  s->add_option("--t2prime_us", o.t2prime_us, "Configured decay time, sets gamma = 1/T2'")->capture_default_str();
  s->add_option("--t_max_us", o.t_max_us)->capture_default_str();
  s->add_option("--points", o.points)->capture_default_str();
  s->add_option("--samples", o.samples)->capture_default_str();
}

int run_rabi(CLI::App* sub, const RabiOpts& o, std::ostream& out) {
  require(o.t2prime_us > 0.0, "rabi: t2prime_us must be positive");
  NoiseEnsemble ens;
  ens.rabi.gamma = gamma_from_t2prime(units::us(o.t2prime_us));
  ens.omega = mhz_to_rad(o.omega_mhz);
  ens.sample_count = o.samples;
  ens.seed = o.common.seed;
  const auto curve = simulate_rabi(ens, time_grid(0.0, units::us(o.t_max_us), o.points));
  const auto fit = fit_rabi(curve, ens.omega);

  Outputs files(o.common.out_dir);
  write_curve(files, "rabi.csv", curve, [&](double t) {
    return 0.5 - 0.5 * rabi_decay_envelope(t, fit.gamma) * std::cos(fit.omega * t);
  });
  files.write_json("rabi_fit.json", {{"t2prime_us", units::to_us(fit.t2prime)},
                                     {"t2prime_err_us", units::to_us(fit.t2prime_err)},
                                     {"gamma_per_s", fit.gamma},
                                     {"gamma_err_per_s", fit.gamma_err},
                                     {"omega_mhz", units::to_mhz(fit.omega)},
                                     {"converged", fit.converged}});
  write_manifest(files, sub, o.common);
  files.commit();
  out << std::setprecision(6) << "T2' = " << units::to_us(fit.t2prime) << " us\n";
  return kOk;
}

// ---- dd --------------------------------------------------------------------

struct DdOpts {
  Common common;
  std::string sequence = "xy4";
  int repeats = 40;
  double b0_gauss = 510.0;
  double gamma_khz_per_gauss = 1.0705;
  std::vector<std::string> spins{"305,136"};
  std::string pulses = "square";
  std::string roc_pi, roc_half_pi;
  double omega_mhz = 10.0;
  double dt_ns = 1.0;
  double detuning_mhz = 0.0;
  double rabi_error = 0.0;
  double f_min_mhz = 0.4;
  double f_max_mhz = 1.6;
  std::size_t points = 721;
  double prominence = 0.05;
  bool fit = false;
};

void add_dd(CLI::App& app, DdOpts& o) {
  auto* s = app.add_subcommand("dd", "XY4/XY8 spectrum of hyperfine-coupled nuclear spins");
  add_common(s, o.common);
  s->add_option("--sequence", o.sequence)->check(CLI::IsMember({"xy4", "xy8"}))->capture_default_str();
  s->add_option("--repeats", o.repeats)->capture_default_str();
  s->add_option("--b0_gauss", o.b0_gauss)->capture_default_str();
  s->add_option("--gamma_khz_per_gauss", o.gamma_khz_per_gauss, "Nuclear gyromagnetic ratio / 2pi")
      ->capture_default_str();
  s->add_option("--spins", o.spins, "Spins as 'a_par_khz,a_perp_khz'")->capture_default_str();
  s->add_option("--pulses", o.pulses)->check(CLI::IsMember({"square", "roc", "ideal"}))->capture_default_str();
  s->add_option("--roc_pi", o.roc_pi);
  s->add_option("--roc_half_pi", o.roc_half_pi, "Optional; square pi/2 pulses are used otherwise");
  s->add_option("--omega_mhz", o.omega_mhz)->capture_default_str();
  s->add_option("--dt_ns", o.dt_ns)->capture_default_str();
  s->add_option("--detuning_mhz", o.detuning_mhz)->capture_default_str();
  s->add_option("--rabi_error", o.rabi_error)->capture_default_str();
  s->add_option("--f_min_mhz", o.f_min_mhz)->capture_default_str();
  s->add_option("--f_max_mhz", o.f_max_mhz)->capture_default_str();
  s->add_option("--points", o.points)->capture_default_str();
  s->add_option("--prominence", o.prominence)->capture_default_str();
  s->add_option("--fit", o.fit, "Fit (omega_h, theta) to every detected dip")->capture_default_str();
}

NuclearSpin parse_spin(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw InvalidArgument("--spins: expected 'a_par_khz,a_perp_khz', got '" + text + "'");
  try {
    return NuclearSpin::from_components(units::khz(std::stod(text.substr(0, comma))),
                                        units::khz(std::stod(text.substr(comma + 1))));
  } catch (const std::logic_error& e) {
    if (dynamic_cast<const InvalidArgument*>(&e)) throw;
    throw InvalidArgument("--spins: bad number in '" + text + "'");
  }
}

int run_dd(CLI::App* sub, const DdOpts& o, std::ostream& out) {
  const double omega = mhz_to_rad(o.omega_mhz);
  const double dt = units::ns(o.dt_ns);
  SensingConfig cfg;
  cfg.b0_gauss = o.b0_gauss;
  cfg.gamma_n = units::kTwoPi * o.gamma_khz_per_gauss * 1e3;
  for (const auto& s : o.spins) cfg.spins.push_back(parse_spin(s));
  cfg.kind = o.sequence == "xy4" ? DdKind::XY4 : DdKind::XY8;
  cfg.repeats = o.repeats;
  cfg.family = make_family(o.pulses, omega, dt, o.roc_pi, o.roc_half_pi);
  if (!cfg.family.has_half_pi()) cfg.family.half_pi = PulseFamily::square(omega, dt).half_pi;
  cfg.err = ErrorPoint{mhz_to_rad(o.detuning_mhz), o.rabi_error, 0.0};
  cfg.tau_axis = tau_axis_for_frequencies(o.f_min_mhz * 1e6, o.f_max_mhz * 1e6, o.points);
  cfg.threads = o.common.threads;

  Spectrum spec = simulate_spectrum(cfg);
  spec.peaks = detect_peaks(spec, o.prominence);

  json peaks = json::array();
  for (const auto& p : spec.peaks) {
    json j = {{"frequency_hz", p.frequency}, {"depth", p.depth}};
    if (o.fit) {
      try {
        const auto f = fit_hyperfine(spec, p, cfg);
        j["fit"] = {{"omega_h_khz", units::to_khz(f.spin.omega_h)},
                    {"omega_h_err_khz", units::to_khz(f.omega_h_err)},
                    {"theta_deg", units::to_deg(f.spin.theta)},
                    {"theta_err_deg", units::to_deg(f.theta_err)}};
      } catch (const InvalidArgument& e) {
        j["fit_rejected"] = e.what();
      }
    }
    peaks.push_back(j);
    out << std::setprecision(6) << "dip at " << p.frequency / 1e6 << " MHz, depth " << p.depth << '\n';
  }

  Outputs files(o.common.out_dir);
  files.write("spectrum.csv", [&](std::ostream& os) { write_spectrum_csv(os, spec); });
  files.write_json("peaks.json", {{"prominence", o.prominence}, {"peaks", peaks}});
  write_manifest(files, sub, o.common);
  files.commit();
  return kOk;
}

// ---- normalize ----------------------------------------------------------------

struct NormalizeOpts {
  Common common;
  std::string input;
  std::optional<double> c_min, c_max;
};

void add_normalize(CLI::App& app, NormalizeOpts& o) {
  auto* s = app.add_subcommand("normalize", "Photon-count contrast and population normalization");
  add_common(s, o.common);
  s->add_option("--input", o.input, "CSV with i_sig_mean,i_ref_mean,i_sig_std,i_ref_std,n_datasets")
      ->required();
  s->add_option("--c_min", o.c_min, "Contrast of |m_s=-1>; defaults to the smallest contrast in the data");
  s->add_option("--c_max", o.c_max, "Contrast of |m_s=0>; defaults to the largest contrast in the data");
}

int run_normalize(CLI::App* sub, const NormalizeOpts& o, std::ostream& out) {
  std::ifstream is(o.input);
  if (!is) throw IoError("cannot open '" + o.input + "'");
  const auto recs = read_contrast_csv(is);
  require(!recs.empty(), "normalize: input has no records");
  std::vector<Contrast> cs;
  for (const auto& r : recs) cs.push_back(contrast(r));
  double lo = cs[0].c, hi = cs[0].c;
  for (const auto& c : cs) lo = std::min(lo, c.c), hi = std::max(hi, c.c);
  const double c_min = o.c_min.value_or(lo), c_max = o.c_max.value_or(hi);

  std::size_t flagged = 0;
  Outputs files(o.common.out_dir);
  files.write("normalized.csv", [&](std::ostream& os) {
    os << "index,contrast,contrast_err,population,population_err,out_of_range\n" << std::setprecision(12);
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto p = normalize_population(cs[i].c, c_min, c_max);
      flagged += p.out_of_range;
      os << i << ',' << cs[i].c << ',' << cs[i].dc << ',' << p.value << ',' << cs[i].dc / (c_max - c_min) << ','
         << (p.out_of_range ? 1 : 0) << '\n';
    }
  });
  write_manifest(files, sub, o.common);
  files.commit();
  out << recs.size() << " records normalized, " << flagged << " outside [0, 1]\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust control pulses for a driven two-level spin", "robustspin"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ROBUSTSPIN_VERSION);
  app.set_config("--config", "", "Flat key = value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.fallthrough();
  app.config_formatter(std::make_shared<SubcommandConfig>(argc > 1 ? argv[1] : ""));

  OptimizeOpts opt;
  ScanOpts scn;
  RbOpts rb;
  FidOpts fid;
  RabiOpts rabi;
  DdOpts dd;
  NormalizeOpts norm;
  add_optimize(app, opt);
  add_scan(app, scn);
  add_rb(app, rb);
  add_fid(app, fid);
  add_rabi(app, rabi);
  add_dd(app, dd);
  add_normalize(app, norm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "optimize") return run_optimize(sub, opt, out);
    if (name == "scan") return run_scan(sub, scn, out);
    if (name == "rb") return run_rb(sub, rb, out);
    if (name == "fid") return run_fid(sub, fid, out);
    if (name == "rabi") return run_rabi(sub, rabi, out);
    if (name == "dd") return run_dd(sub, dd, out);
    if (name == "normalize") return run_normalize(sub, norm, out);
  } catch (const InvalidArgument& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  }
  err << "unknown command " << name << '\n';
  return kConfigError;
}

}  // namespace robustspin::cli
