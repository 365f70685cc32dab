#include "robustspin/dd.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "robustspin/errors.hpp"
#include "robustspin/fit.hpp"
#include "robustspin/parallel.hpp"

namespace robustspin {

using units::kPi;
using units::kTwoPi;

double NuclearSpin::a_par() const { return omega_h * std::cos(theta); }
double NuclearSpin::a_perp() const { return omega_h * std::sin(theta); }

NuclearSpin NuclearSpin::from_components(double a_par, double a_perp) {
  require(a_perp >= 0.0, "nuclear spin: a_perp must be >= 0 so that theta lies in [0, pi]");
  return NuclearSpin{std::hypot(a_par, a_perp), std::atan2(a_perp, a_par)};
}

void NuclearSpin::validate() const {
  require(omega_h >= 0.0 && std::isfinite(omega_h), "nuclear spin: omega_h must be >= 0");
  require(theta >= 0.0 && theta <= kPi, "nuclear spin: theta must lie in [0, pi]");
}

int dd_pulses_per_unit(DdKind kind) { return kind == DdKind::XY4 ? 4 : 8; }

PulseSequence build_dd_sequence(DdKind kind, int repeats, double tau, const PulseFamily& family) {
  require(repeats >= 1, "dd: repeats must be >= 1");
  const double tp = family.pi_duration();
  require(tau > 0.0 && tau >= 0.5 * tp,
          "dd: tau must be at least half the pi-pulse width (" + std::to_string(0.5 * tp * 1e9) + " ns)");
  static const std::vector<double> xy4{0.0, kPi / 2, 0.0, kPi / 2};
  static const std::vector<double> xy8{0.0, kPi / 2, 0.0, kPi / 2, kPi / 2, 0.0, kPi / 2, 0.0};
  const auto& unit = kind == DdKind::XY4 ? xy4 : xy8;

  PulseSequence seq;
  family.append_half_pi(seq, 0.0);
  double gap = tau - 0.5 * tp;
  for (int r = 0; r < repeats; ++r) {
    for (double phase : unit) {
      seq.delay(gap);
      family.append_pi(seq, phase);
      gap = 2.0 * tau - tp;
    }
  }
  seq.delay(tau - 0.5 * tp);
  family.append_half_pi(seq, 0.0);
  return seq;
}

Op4 nuclear_drift(double larmor, const NuclearSpin& spin) {
  const Op2 p0 = spin::projector(0), p1 = spin::projector(1);
  return kron(p0, larmor * spin::sz()) +
         kron(p1, (larmor + spin.a_par()) * spin::sz() + spin.a_perp() * spin::sx());
}

void SensingConfig::validate() const {
  require(b0_gauss >= 0.0 && std::isfinite(b0_gauss), "sensing: B0 must be >= 0");
  require(std::isfinite(gamma_n), "sensing: gyromagnetic ratio must be finite");
  require(repeats >= 1, "sensing: repeats must be >= 1");
  require(family.has_pi() && family.has_half_pi(), "sensing: pulse family needs pi and pi/2 pulses");
  require(!tau_axis.empty(), "sensing: tau axis is empty");
  for (const auto& s : spins) s.validate();
  err.validate();
  const double half = 0.5 * family.pi_duration();
  for (double t : tau_axis) require(t > half, "sensing: every tau must exceed half the pi-pulse width");
}

std::vector<double> tau_axis_for_frequencies(double f_lo, double f_hi, std::size_t n) {
  require(n >= 2 && f_lo > 0.0 && f_hi > f_lo, "tau axis: need n >= 2 and 0 < f_lo < f_hi");
  std::vector<double> tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = f_hi - (f_hi - f_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    tau[i] = 1.0 / (4.0 * f);
  }
  return tau;
}

namespace {

// Electron |1> population for each tau under a fixed 4-dim drift.
std::vector<double> response(const SensingConfig& cfg, const Op4& drift) {
  const std::size_t n = cfg.tau_axis.size();
  std::vector<double> out(n);
  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads ? cfg.threads : default_threads(),
                                                           static_cast<unsigned>(n)));
  // one segment cache per chunk keeps the pulse propagators shared across tau
  const std::size_t chunk = (n + threads - 1) / threads;
  parallel_for(threads, threads, [&](std::size_t c) {
    SegmentCache<4> cache(cfg.err, drift);
    for (std::size_t i = c * chunk; i < std::min(n, (c + 1) * chunk); ++i) {
      const auto seq = build_dd_sequence(cfg.kind, cfg.repeats, cfg.tau_axis[i], cfg.family);
      const Op4 u = cache.sequence(seq);
      double p = 0.0;
      for (int m = 0; m < 2; ++m)
        for (int k = 0; k < 2; ++k) p += std::norm(u(2 + k, m));
      out[i] = std::clamp(0.5 * p, 0.0, 1.0);
    }
  });
  return out;
}

std::vector<double> frequencies(const std::vector<double>& tau) {
  std::vector<double> f;
  f.reserve(tau.size());
  for (double t : tau) f.push_back(1.0 / (4.0 * t));
  return f;
}

double median(std::vector<double> v) {
  require(!v.empty(), "median of empty data");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  return m;
}

}  // namespace

std::vector<double> single_spin_response(const SensingConfig& cfg, const NuclearSpin& spin) {
  cfg.validate();
  spin.validate();
  return response(cfg, nuclear_drift(cfg.larmor(), spin));
}

Spectrum simulate_spectrum(const SensingConfig& cfg) {
  cfg.validate();
  Spectrum spec;
  spec.tau = cfg.tau_axis;
  spec.frequency = frequencies(cfg.tau_axis);
  const std::size_t n = cfg.tau_axis.size();

  if (cfg.spins.size() == 1) {
    spec.population = response(cfg, nuclear_drift(cfg.larmor(), cfg.spins[0]));
    return spec;
  }
  // bath-free reference: the nucleus is decoupled with zero hyperfine field
  const auto p0 = response(cfg, nuclear_drift(cfg.larmor(), NuclearSpin{}));
  spec.population = p0;
  if (cfg.spins.empty()) return spec;

  std::vector<double> ratio(n, 1.0);
  for (const auto& s : cfg.spins) {
    const auto pj = response(cfg, nuclear_drift(cfg.larmor(), s));
    for (std::size_t i = 0; i < n; ++i) {
      const double m0 = 2.0 * p0[i] - 1.0;
      ratio[i] *= std::abs(m0) > 1e-12 ? (2.0 * pj[i] - 1.0) / m0 : 0.0;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double m0 = 2.0 * p0[i] - 1.0;
    spec.population[i] = std::clamp(0.5 + 0.5 * m0 * ratio[i], 0.0, 1.0);
  }
  return spec;
}

std::vector<Peak> detect_peaks(const Spectrum& spec, double prominence) {
  require(prominence > 0.0 && prominence < 1.0, "detect_peaks: prominence must lie in (0, 1)");
  require(spec.frequency.size() == spec.population.size(), "detect_peaks: axis and data differ in length");
  const std::size_t n = spec.population.size();
  if (n < 3) return {};
  const double baseline = median(spec.population);
  const double cut = baseline - prominence;

  std::vector<Peak> peaks;
  std::size_t i = 0;
  while (i < n) {
    if (spec.population[i] >= cut) {
      ++i;
      continue;
    }
    std::size_t best = i;
    while (i < n && spec.population[i] < cut) {
      if (spec.population[i] < spec.population[best]) best = i;
      ++i;
    }
    Peak p{spec.frequency[best], baseline - spec.population[best]};
    if (best > 0 && best + 1 < n) {
      const double x0 = spec.frequency[best - 1], x1 = spec.frequency[best], x2 = spec.frequency[best + 1];
      const double y0 = spec.population[best - 1], y1 = spec.population[best], y2 = spec.population[best + 1];
      // vertex of the parabola through the three points (nonuniform spacing)
      const double d0 = (y1 - y0) / (x1 - x0), d1 = (y2 - y1) / (x2 - x1);
      const double a = (d1 - d0) / (x2 - x0);
      if (a > 0.0) {
        const double b = d0 - a * (x0 + x1);
        const double xv = -b / (2.0 * a);
        if (xv >= std::min(x0, x2) && xv <= std::max(x0, x2)) {
          p.frequency = xv;
          p.depth = baseline - (y1 + d0 * (xv - x1) + a * (xv - x0) * (xv - x1));
        }
      }
    }
    peaks.push_back(p);
  }
  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.frequency < b.frequency; });
  return peaks;
}

namespace {

// SU(2) element w - i v.sigma as a unit quaternion
struct Quat {
  double w, x, y, z;
};

Quat mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + b.w * a.x + a.y * b.z - a.z * b.y,
          a.w * b.y + b.w * a.y + a.z * b.x - a.x * b.z, a.w * b.z + b.w * a.z + a.x * b.y - a.y * b.x};
}

Quat power(const Quat& q, int k) {
  const double v = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
  if (v < 1e-300) return {std::cos(k * std::acos(std::clamp(q.w, -1.0, 1.0))), 0.0, 0.0, 0.0};
  const double a = std::atan2(v, q.w);
  const double s = std::sin(k * a) / v;
  return {std::cos(k * a), s * q.x, s * q.y, s * q.z};
}

// exp(-i t (hx S_x + hz S_z))
Quat rotation(double hx, double hz, double t) {
  const double h = std::hypot(hx, hz);
  if (h == 0.0) return {1.0, 0.0, 0.0, 0.0};
  const double s = std::sin(0.5 * h * t) / h;
  return {std::cos(0.5 * h * t), s * hx, 0.0, s * hz};
}

// Instantaneous-pulse response from the two conditional nuclear
// propagators of one tau - pi - 2tau - pi - tau block. Cheap enough to
// scan the whole (a_par, a_perp) plane.
double ideal_population(double wl, double a_par, double a_perp, int n_pi, double tau) {
  const Quat e0 = rotation(0.0, wl, tau), e1 = rotation(a_perp, wl + a_par, tau);
  const Quat u0 = power(mul(mul(e0, e1), mul(e1, e0)), n_pi / 2);
  const Quat u1 = power(mul(mul(e1, e0), mul(e0, e1)), n_pi / 2);
  // Re Tr(u0 u1^dagger) / 2
  return 0.5 * (1.0 + u0.w * u1.w + u0.x * u1.x + u0.y * u1.y + u0.z * u1.z);
}

}  // namespace

HyperfineFit fit_hyperfine(const Spectrum& spec, const Peak& peak, const SensingConfig& cfg) {
  const std::size_t n = spec.population.size();
  require(n >= 5 && spec.frequency.size() == n && spec.tau.size() == n, "fit_hyperfine: malformed spectrum");
  const double baseline = median(spec.population);

  // locate the dip nearest the requested frequency
  std::size_t c = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(spec.frequency[i] - peak.frequency) < std::abs(spec.frequency[c] - peak.frequency)) c = i;
  const std::size_t lo_search = c >= 3 ? c - 3 : 0, hi_search = std::min(n - 1, c + 3);
  for (std::size_t i = lo_search; i <= hi_search; ++i)
    if (spec.population[i] < spec.population[c]) c = i;
  const double depth = baseline - spec.population[c];
  if (!(depth > 1e-3))
    throw InvalidArgument("fit_hyperfine: no resolvable dip near " + std::to_string(peak.frequency) + " Hz");

  // full width at half depth
  const double half = baseline - 0.5 * depth;
  std::size_t l = c, r = c;
  while (l > 0 && spec.population[l] < half) --l;
  while (r + 1 < n && spec.population[r] < half) ++r;
  const double bin = std::abs(spec.frequency[std::min(c + 1, n - 1)] - spec.frequency[c > 0 ? c - 1 : 0]) / 2.0;
  const double width = std::max(std::abs(spec.frequency[r] - spec.frequency[l]), 2.0 * bin);
  const double f0 = spec.frequency[c];

  SensingConfig model = cfg;
  model.spins.clear();
  model.tau_axis.clear();
  std::vector<double> data;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(spec.frequency[i] - f0) <= 3.0 * width) {
      model.tau_axis.push_back(spec.tau[i]);
      data.push_back(spec.population[i]);
    }
  }
  require(data.size() >= 4, "fit_hyperfine: fewer than 4 points in the fit window");
  model.validate();

  const double scale = kTwoPi * 1e5;  // parameters in units of 2pi x 100 kHz
  auto spin_of = [&](const Eigen::VectorXd& p) {
    return NuclearSpin::from_components(p[0] * scale, std::max(0.0, p[1]) * scale);
  };
  auto residuals = [&](const Eigen::VectorXd& p) {
    const auto y = response(model, nuclear_drift(model.larmor(), spin_of(p)));
    Eigen::VectorXd res(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) res[i] = y[i] - data[i];
    return res;
  };

  // Global search with instantaneous pulses on every few window points,
  // then full-model refinement from the best separated candidates.
  const double wl = model.larmor();
  const int n_pi = model.repeats * dd_pulses_per_unit(model.kind);
  const std::size_t stride = std::max<std::size_t>(1, data.size() / 24);
  // a_par on a 2.5 kHz grid, a_perp geometric from 0.5 kHz
  const double step = 2.5e-2;
  const int na = 240;
  std::vector<double> perp;
  for (double b = 5e-3; b <= 6.0; b *= 1.03) perp.push_back(b);
  struct Candidate {
    double rss;
    int i, j;
  };
  std::vector<Candidate> grid;
  grid.reserve((2 * na + 1) * perp.size());
  for (int i = -na; i <= na; ++i) {
    for (std::size_t j = 0; j < perp.size(); ++j) {
      double rss = 0.0;
      for (std::size_t k = 0; k < data.size(); k += stride) {
        const double d =
            ideal_population(wl, i * step * scale, perp[j] * scale, n_pi, model.tau_axis[k]) - data[k];
        rss += d * d;
      }
      grid.push_back({rss, i, static_cast<int>(j)});
    }
  }
  std::sort(grid.begin(), grid.end(), [](const Candidate& a, const Candidate& b) { return a.rss < b.rss; });
  std::vector<Candidate> starts;
  for (const auto& g : grid) {
    const bool near = std::any_of(starts.begin(), starts.end(), [&](const Candidate& s) {
      return std::abs(s.i - g.i) <= 4 && std::abs(s.j - g.j) <= 4;
    });
    if (!near) starts.push_back(g);
    if (starts.size() == 3) break;
  }

  Eigen::VectorXd lo(2), hi(2);
  lo << -20.0, 0.0;
  hi << 20.0, 20.0;
  fit::Options fo;
  fo.max_iterations = 100;
  fo.ftol = 1e-10;
  fo.xtol = 1e-9;
  // whatever a single spin cannot reproduce belongs to another one
  const double tol = std::clamp(0.25 * depth, 1e-3, 0.05);
  auto worst_misfit = [&](const Eigen::VectorXd& p, std::size_t* at) {
    const Eigen::VectorXd m = residuals(p);
    Eigen::Index k = 0;
    const double w = m.maxCoeff(&k);
    if (at) *at = static_cast<std::size_t>(k);
    return w;
  };
  fit::Result res;
  res.rss = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    Eigen::VectorXd p0(2);
    p0 << s.i * step, perp[static_cast<std::size_t>(s.j)];
    auto cand = fit::least_squares(residuals, p0, lo, hi, fo);
    if (cand.params.allFinite() && cand.rss < res.rss) res = std::move(cand);
    if (res.params.size() == 2 && worst_misfit(res.params, nullptr) <= tol) break;
  }
  if (res.params.size() != 2) throw NumericalError("fit_hyperfine: non-finite parameters");

  std::size_t at = 0;
  if (worst_misfit(res.params, &at) > tol)
    throw InvalidArgument("fit_hyperfine: a dip at " + std::to_string(1.0 / (4.0 * model.tau_axis[at])) +
                          " Hz is not explained by a single spin near " + std::to_string(f0) + " Hz");

  const double a_par = res.params[0] * scale, a_perp = res.params[1] * scale;
  HyperfineFit out;
  out.spin = NuclearSpin::from_components(a_par, a_perp);
  // propagate the (a_par, a_perp) covariance to (omega_h, theta)
  const double w = out.spin.omega_h;
  if (w > 0.0) {
    Eigen::Matrix2d j;
    j << a_par / w, a_perp / w, -a_perp / (w * w), a_par / (w * w);
    const Eigen::Matrix2d cov = j * (res.covariance * scale * scale) * j.transpose();
    out.omega_h_err = std::sqrt(std::max(0.0, cov(0, 0)));
    out.theta_err = std::sqrt(std::max(0.0, cov(1, 1)));
  }
  out.linewidth = width;
  out.rss = res.rss;
  out.converged = res.converged;
  return out;
}

void write_spectrum_csv(std::ostream& os, const Spectrum& spec) {
  require(spec.tau.size() == spec.frequency.size() && spec.tau.size() == spec.population.size(),
          "write_spectrum_csv: column lengths differ");
  const auto old = os.precision(12);
  os << "tau_s,f_hz,population\n";
  for (std::size_t i = 0; i < spec.tau.size(); ++i)
    os << spec.tau[i] << ',' << spec.frequency[i] << ',' << spec.population[i] << '\n';
  os.precision(old);
}

Spectrum read_spectrum_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "tau_s,f_hz,population")
    throw IoError("spectrum csv: missing 'tau_s,f_hz,population' header");
  Spectrum s;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw IoError("spectrum csv: expected three columns in '" + line + "'");
    try {
      s.tau.push_back(std::stod(a));
      s.frequency.push_back(std::stod(b));
      s.population.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw IoError("spectrum csv: bad number in '" + line + "'");
    }
  }
  return s;
}

}  // namespace robustspin
