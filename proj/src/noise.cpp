#include "robustspin/noise.hpp"

#include <algorithm>
#include <cmath>

#include "robustspin/errors.hpp"
#include "robustspin/rng.hpp"

namespace robustspin {

void NoiseEnsemble::validate() const {
  require(detuning.sigma >= 0.0 && std::isfinite(detuning.sigma), "noise: sigma must be >= 0");
  require(rabi.gamma >= 0.0 && std::isfinite(rabi.gamma), "noise: gamma must be >= 0");
  require(sample_count >= 1, "noise: sample_count must be >= 1");
  require(rabi.gamma == 0.0 || omega > 0.0, "noise: Lorentzian Rabi noise needs omega > 0");
  offset.validate();
}

double fid_probability(double t, double delta, double sigma) {
  require(t >= 0.0, "fid_probability: t must be >= 0");
  const double envelope = std::exp(-0.5 * sigma * sigma * t * t);
  return std::clamp(0.5 - 0.5 * envelope * std::cos(delta * t), 0.0, 1.0);
}

double rabi_decay_envelope(double t, double gamma) {
  require(t >= 0.0, "rabi_decay_envelope: t must be >= 0");
  return std::exp(-gamma * t);
}

double t2star_from_sigma(double sigma) {
  require(sigma > 0.0, "t2star_from_sigma: sigma must be positive");
  return std::sqrt(2.0) / sigma;
}

double sigma_from_t2star(double t2star) {
  require(t2star > 0.0, "sigma_from_t2star: T2* must be positive");
  return std::sqrt(2.0) / t2star;
}

double gamma_from_t2prime(double t2prime) {
  require(t2prime > 0.0, "gamma_from_t2prime: T2' must be positive");
  return 1.0 / t2prime;
}

double t2prime_from_gamma(double gamma) {
  require(gamma > 0.0, "t2prime_from_gamma: gamma must be positive");
  return 1.0 / gamma;
}

std::vector<ErrorPoint> sample_error_points(const NoiseEnsemble& ens) {
  ens.validate();
  std::vector<ErrorPoint> out;
  out.reserve(ens.sample_count);
  const double cap = 5e3 * ens.rabi.gamma;
  for (std::size_t i = 0; i < ens.sample_count; ++i) {
    Rng rng = Rng::stream(ens.seed, i);
    ErrorPoint p = ens.offset;
    const double g = rng.normal();
    const double c = rng.cauchy();
    p.delta0 += ens.detuning.sigma * g;
    if (ens.rabi.gamma > 0.0) {
      double abs_err = ens.rabi.gamma * c;
      if (!std::isfinite(abs_err)) abs_err = std::copysign(cap, c);
      abs_err = std::clamp(abs_err, -cap, cap);
      p.delta1 += abs_err / ens.omega;
      // a draw past zero amplitude is pinned just above it
      p.delta1 = std::max(p.delta1, -1.0 + 1e-9);
    }
    out.push_back(p);
  }
  return out;
}

double ensemble_average_population(const PulseSequence& seq, const NoiseEnsemble& ens,
                                   const QuantumState& initial, int level) {
  require(initial.dim() == 2, "ensemble_average_population: electron-only (dim 2) states");
  require(level >= 0 && level < 2, "ensemble_average_population: level out of range");
  const auto points = sample_error_points(ens);
  double sum = 0.0;
  for (const auto& p : points) {
    SegmentCache<2> cache(p);
    const Op2 u = cache.sequence(seq);
    sum += expectation_population(initial.evolved(u), level);
  }
  return sum / static_cast<double>(points.size());
}

}  // namespace robustspin
