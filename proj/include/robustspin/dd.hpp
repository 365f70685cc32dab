#pragma once

#include <iosfwd>
#include <vector>

#include "robustspin/family.hpp"
#include "robustspin/pulse.hpp"
#include "robustspin/quantum.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

struct NuclearSpin {
  double omega_h = 0.0;  // rad/s
  double theta = 0.0;    // rad, angle to the NV axis

  double a_par() const;
  double a_perp() const;
  static NuclearSpin from_components(double a_par, double a_perp);
  void validate() const;
};

enum class DdKind { XY4, XY8 };

// (pi/2)_x, then `repeats` units of tau - pi - 2tau - pi - ... - pi - tau
// with x/y phases, then (pi/2)_x. Delays are shortened by the pulse width
// so pulse centres sit exactly 2 tau apart. Adjacent half-delays of
// consecutive units merge into one 2 tau gap.
PulseSequence build_dd_sequence(DdKind kind, int repeats, double tau, const PulseFamily& family);

int dd_pulses_per_unit(DdKind kind);

// Electron |0><0| (x) w_l I_z + |1><1| (x) [(w_l + a_par) I_z + a_perp I_x].
Op4 nuclear_drift(double larmor, const NuclearSpin& spin);

struct SensingConfig {
  double b0_gauss = 510.0;
  double gamma_n = units::kGamma13C;  // rad/s per gauss
  std::vector<NuclearSpin> spins;
  DdKind kind = DdKind::XY4;
  int repeats = 40;
  PulseFamily family;
  ErrorPoint err;
  std::vector<double> tau_axis;  // s
  unsigned threads = 0;

  double larmor() const { return gamma_n * b0_gauss; }
  void validate() const;
};

// n values of tau whose detection frequencies f = 1/(4 tau) are evenly
// spaced over [f_lo, f_hi] (Hz), in increasing tau.
std::vector<double> tau_axis_for_frequencies(double f_lo = 0.4e6, double f_hi = 1.6e6, std::size_t n = 721);

struct Peak {
  double frequency = 0.0;  // Hz
  double depth = 0.0;      // below the median baseline
};

struct Spectrum {
  std::vector<double> tau;         // s
  std::vector<double> frequency;   // Hz, 1/(4 tau)
  std::vector<double> population;  // electron |1> after the final pi/2
  std::vector<Peak> peaks;
};

// Single-spin |1> population per tau, averaged over the two nuclear I_z
// eigenstates (unpolarized nucleus).
std::vector<double> single_spin_response(const SensingConfig& cfg, const NuclearSpin& spin);

// Spins act as independent baths: with M = 2P - 1 and M0 the bath-free
// signal, P = 1/2 + 1/2 M0 prod_j (M_j / M0).
Spectrum simulate_spectrum(const SensingConfig& cfg);

// Runs of points lying more than `prominence` below the median; the deepest
// point of each run, refined by a parabola through its neighbours.
std::vector<Peak> detect_peaks(const Spectrum& spec, double prominence);

struct HyperfineFit {
  NuclearSpin spin;
  double omega_h_err = 0.0;
  double theta_err = 0.0;
  double linewidth = 0.0;  // Hz, full width at half depth of the fitted dip
  double rss = 0.0;
  bool converged = false;
};

// Least-squares fit of one spin's (a_par, a_perp) to the dip around `peak`
// using the single-spin forward model of `cfg` (its spins are ignored).
// The window spans three linewidths either side. Throws if the best fit
// leaves a dip in the window unexplained (a second spin nearby).
HyperfineFit fit_hyperfine(const Spectrum& spec, const Peak& peak, const SensingConfig& cfg);

void write_spectrum_csv(std::ostream& os, const Spectrum& spec);
Spectrum read_spectrum_csv(std::istream& is);

}  // namespace robustspin
