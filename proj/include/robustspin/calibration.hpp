#pragma once

#include <vector>

#include "robustspin/noise.hpp"

namespace robustspin {

struct DecayCurve {
  std::vector<double> times;       // s
  std::vector<double> population;  // P(|0>) for FID, P(|1>) for Rabi
};

// Monte Carlo Ramsey: ideal (pi/2)_x, free evolution t under the set
// detuning plus each sample's delta0, ideal (pi/2)_x; survival in |0>.
// `delta` is added to ens.offset.delta0.
DecayCurve simulate_fid(const NoiseEnsemble& ens, double delta, const std::vector<double>& times);

// Monte Carlo Rabi nutation: a constant x drive of length t at ens.omega.
DecayCurve simulate_rabi(const NoiseEnsemble& ens, const std::vector<double>& times);

struct FidFit {
  double t2star = 0.0, t2star_err = 0.0;  // s
  double sigma = 0.0, sigma_err = 0.0;    // rad/s
  double delta = 0.0, delta_err = 0.0;    // rad/s
  double rss = 0.0;
  bool converged = false;
};

struct RabiFit {
  double t2prime = 0.0, t2prime_err = 0.0;  // s
  double gamma = 0.0, gamma_err = 0.0;      // rad/s
  double omega = 0.0, omega_err = 0.0;      // rad/s
  double rss = 0.0;
  bool converged = false;
};

// Fits P = 1/2 - 1/2 exp(-(t/T2*)^2) cos(delta t).
FidFit fit_fid(const DecayCurve& curve, double delta_guess);
// Fits P = 1/2 - 1/2 exp(-t/T2') cos(omega t).
RabiFit fit_rabi(const DecayCurve& curve, double omega_guess);

std::vector<double> time_grid(double t0, double t1, std::size_t n);

}  // namespace robustspin
