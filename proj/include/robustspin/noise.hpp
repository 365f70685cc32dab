#pragma once

#include <cstdint>
#include <vector>

#include "robustspin/pulse.hpp"
#include "robustspin/quantum.hpp"

namespace robustspin {

struct GaussianDetuning {
  double sigma = 0.0;  // rad/s, standard deviation of delta0
};

struct LorentzianRabi {
  double gamma = 0.0;  // rad/s, HWHM of the absolute Rabi-frequency error
};

// Quasi-static noise: one draw of (delta0, delta1) per simulated shot.
struct NoiseEnsemble {
  GaussianDetuning detuning;
  LorentzianRabi rabi;
  std::size_t sample_count = 1;
  std::uint64_t seed = 0;
  // Rabi frequency converting absolute Lorentzian draws to fractional delta1.
  double omega = 0.0;
  // Deterministic offsets every sample is centred on.
  ErrorPoint offset;

  void validate() const;
};

// Gaussian-averaged Ramsey survival of |0> for (pi/2)_x - t - (pi/2)_x:
// 1/2 - 1/2 exp(-(t/T2*)^2) cos(Delta t).
double fid_probability(double t, double delta, double sigma);

// Lorentzian average of cos(delta1 t): exp(-gamma t).
double rabi_decay_envelope(double t, double gamma);

// T2* = sqrt(2) / sigma (sigma in rad/s). Equivalent to 1/(sqrt(2) pi sigma_Hz).
double t2star_from_sigma(double sigma);
double sigma_from_t2star(double t2star);
// gamma = 1 / T2'
double gamma_from_t2prime(double t2prime);
double t2prime_from_gamma(double gamma);

std::vector<ErrorPoint> sample_error_points(const NoiseEnsemble& ens);

// Mean over sampled error points of the population of `level` after
// propagating `initial` through `seq`.
double ensemble_average_population(const PulseSequence& seq, const NoiseEnsemble& ens,
                                   const QuantumState& initial, int level);

}  // namespace robustspin
