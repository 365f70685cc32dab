#include "robustspin/calibration.hpp"

#include <cmath>
#include <limits>

#include "robustspin/errors.hpp"
#include "robustspin/fit.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

std::vector<double> time_grid(double t0, double t1, std::size_t n) {
  require(n >= 2 && t1 > t0 && t0 >= 0.0, "time_grid: need n >= 2 and 0 <= t0 < t1");
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(n - 1);
  return t;
}

// Both curves draw the ensemble once and reuse it at every time. Each
// sample evolves under a fixed Hamiltonian, so its population has a
// closed form.

DecayCurve simulate_fid(const NoiseEnsemble& ens, double delta, const std::vector<double>& times) {
  for (double t : times) require(t >= 0.0, "simulate_fid: times must be >= 0");
  NoiseEnsemble e = ens;
  e.offset.delta0 += delta;
  const auto points = sample_error_points(e);
  std::vector<double> sum(times.size(), 0.0);
  // (pi/2)_x, free precession by delta0 t, (pi/2)_x: P0 = (1 - cos(delta0 t)) / 2
  for (const auto& p : points)
    for (std::size_t i = 0; i < times.size(); ++i) sum[i] += 0.5 * (1.0 - std::cos(p.delta0 * times[i]));
  DecayCurve out;
  out.times = times;
  for (double s : sum) out.population.push_back(s / static_cast<double>(points.size()));
  return out;
}

DecayCurve simulate_rabi(const NoiseEnsemble& ens, const std::vector<double>& times) {
  require(ens.omega > 0.0, "simulate_rabi: ensemble omega must be positive");
  for (double t : times) require(t >= 0.0, "simulate_rabi: times must be >= 0");
  const auto points = sample_error_points(ens);
  std::vector<double> sum(times.size(), 0.0);
  for (const auto& p : points) {
    // off-resonant Rabi formula with transverse drive w and detuning delta0
    const double w = ens.omega * (1.0 + p.delta1);
    const double g = std::hypot(w, p.delta0);
    const double tilt = g > 0.0 ? (w / g) * (w / g) : 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double s = std::sin(0.5 * g * times[i]);
      sum[i] += tilt * s * s;
    }
  }
  DecayCurve out;
  out.times = times;
  for (double s : sum) out.population.push_back(s / static_cast<double>(points.size()));
  return out;
}

namespace {

void check_curve(const DecayCurve& c) {
  require(c.times.size() == c.population.size(), "decay fit: times and population differ in length");
  require(c.times.size() >= 4, "decay fit: need at least 4 points");
}

double longest_time(const DecayCurve& c) {
  double t = 0.0;
  for (double x : c.times) t = std::max(t, x);
  require(t > 0.0, "decay fit: all times are zero");
  return t;
}

}  // namespace

FidFit fit_fid(const DecayCurve& curve, double delta_guess) {
  check_curve(curve);
  // parameters scaled to order one: (T2* / tmax, delta * tmax)
  const double tmax = longest_time(curve);
  const std::size_t n = curve.times.size();
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = curve.times[i] / tmax;
      const double env = std::exp(-(s / p[0]) * (s / p[0]));
      r[i] = 0.5 - 0.5 * env * std::cos(p[1] * s) - curve.population[i];
    }
    return r;
  };
  // coarse search over the envelope width guards against local minima
  double best_t = 0.5, best_rss = std::numeric_limits<double>::infinity();
  for (double t = 0.02; t <= 5.0; t *= 1.1) {
    Eigen::VectorXd p(2);
    p << t, delta_guess * tmax;
    const double rss = residuals(p).squaredNorm();
    if (rss < best_rss) best_rss = rss, best_t = t;
  }
  Eigen::VectorXd x0(2), lo(2), hi(2);
  x0 << best_t, delta_guess * tmax;
  lo << 1e-6, -std::numeric_limits<double>::infinity();
  hi << 1e6, std::numeric_limits<double>::infinity();
  const auto res = fit::least_squares(residuals, x0, lo, hi);
  if (!res.params.allFinite()) throw NumericalError("fit_fid: non-finite parameters");

  FidFit out;
  out.t2star = res.params[0] * tmax;
  out.t2star_err = res.std_errors[0] * tmax;
  out.sigma = sigma_from_t2star(out.t2star);
  out.sigma_err = out.sigma * out.t2star_err / out.t2star;
  out.delta = res.params[1] / tmax;
  out.delta_err = res.std_errors[1] / tmax;
  out.rss = res.rss;
  out.converged = res.converged;
  return out;
}

RabiFit fit_rabi(const DecayCurve& curve, double omega_guess) {
  check_curve(curve);
  require(omega_guess > 0.0, "fit_rabi: omega guess must be positive");
  const double tmax = longest_time(curve);
  const std::size_t n = curve.times.size();
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double s = curve.times[i] / tmax;
      r[i] = 0.5 - 0.5 * std::exp(-p[0] * s) * std::cos(p[1] * s) - curve.population[i];
    }
    return r;
  };
  double best_g = 1.0, best_rss = std::numeric_limits<double>::infinity();
  for (double g = 1e-3; g <= 100.0; g *= 1.1) {
    Eigen::VectorXd p(2);
    p << g, omega_guess * tmax;
    const double rss = residuals(p).squaredNorm();
    if (rss < best_rss) best_rss = rss, best_g = g;
  }
  Eigen::VectorXd x0(2), lo(2), hi(2);
  x0 << best_g, omega_guess * tmax;
  lo << 0.0, 0.0;
  hi << 1e6, std::numeric_limits<double>::infinity();
  const auto res = fit::least_squares(residuals, x0, lo, hi);
  if (!res.params.allFinite() || res.params[0] <= 0.0)
    throw NumericalError("fit_rabi: decay rate not identifiable");

  RabiFit out;
  out.gamma = res.params[0] / tmax;
  out.gamma_err = res.std_errors[0] / tmax;
  out.t2prime = t2prime_from_gamma(out.gamma);
  out.t2prime_err = out.t2prime * out.gamma_err / out.gamma;
  out.omega = res.params[1] / tmax;
  out.omega_err = res.std_errors[1] / tmax;
  out.rss = res.rss;
  out.converged = res.converged;
  return out;
}

}  // namespace robustspin
