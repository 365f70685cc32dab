#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "robustspin/jet.hpp"
#include "robustspin/pulse.hpp"
#include "robustspin/quantum.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

// Noise channels: 0 = detuning (V1 = S_z), 1 = Rabi error
// (V2 = omega (ux S_x + uy S_y), the instantaneous control direction).
enum class Channel { Detuning = 0, Rabi = 1 };

using Weights = std::array<std::array<double, 2>, 2>;

enum class SearchDirection { Gradient, Lbfgs };

struct RocConfig {
  Op2 target = ideal_rotation(units::kPi, 0.0);
  std::size_t slices = 200;
  double dt = kDefaultDt;
  double omega_max = units::mhz(10.0);
  // Noise scales: detuning derivatives are taken w.r.t. delta0 / epsilon1,
  // Rabi derivatives w.r.t. delta1 / epsilon2.
  double epsilon1 = 0.1 * units::mhz(10.0);
  double epsilon2 = 0.1;
  int m_max = 2;
  Weights mu1{{{1.0, 0.0}, {0.0, 1.0}}};
  // The mixed second-order term dominates at simultaneous detuning and
  // Rabi error, so it is weighted like the diagonal ones.
  Weights mu2{{{0.3, 0.3}, {0.3, 0.3}}};
  int max_iters = 3000;
  double fitness_goal = 1.0;
  double step_init = 1.0;
  int stall_window = 50;
  double stall_tolerance = 1e-12;
  double smooth_weight = 0.0;
  bool clamp_ends = false;
  double init_amplitude = 0.1;
  std::uint64_t seed = 1;
  SearchDirection direction = SearchDirection::Lbfgs;
  int lbfgs_memory = 12;

  void validate() const;
};

struct RocResult {
  Waveform waveform;
  std::vector<double> fitness_trace;
  double final_fitness = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct FitnessGradient {
  double fitness = 0.0;
  std::vector<double> gx;
  std::vector<double> gy;
};

// Same propagator as sequence_propagator on a one-pulse sequence.
Op2 controlled_propagator(const Waveform& u, const ErrorPoint& err);

// m-th order mixed derivative of U_C w.r.t. the noise amplitudes along
// (i1, i2), at zero noise, in physical units (delta0 in rad/s, delta1
// fractional). For m = 1 with i1 != i2 this is the derivative along the
// summed direction V1 + V2.
Op2 directional_derivative(const Waveform& u, Channel i1, Channel i2, int order);

// Noise-derivative jet of U_C: coefficient of x0^a x1^b where
// delta0 = eps1 x0, delta1 = eps2 x1.
Jet noise_jet(const Waveform& u, double eps1, double eps2, int order);

double fitness(const Waveform& u, const RocConfig& cfg);
FitnessGradient fitness_gradient(const Waveform& u, const RocConfig& cfg);

Waveform random_waveform(const RocConfig& cfg);

RocResult optimize(const RocConfig& cfg, std::optional<Waveform> initial = std::nullopt);

}  // namespace robustspin
