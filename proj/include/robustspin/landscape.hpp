#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "robustspin/pulse.hpp"

namespace robustspin {

// |0> -> |1> transfer fidelity over a detuning x Rabi-error grid.
// values[i][j] belongs to detuning_axis[i] and rabi_axis[j].
struct FidelityLandscape {
  std::vector<double> detuning_axis;  // rad/s
  std::vector<double> rabi_axis;      // fractional
  std::vector<std::vector<double>> values;
  std::string pulse_label;

  void validate() const;
};

struct ScanOptions {
  double detuning_range = 0.3;  // half-width, fraction of the waveform's omega_max
  double rabi_range = 0.3;      // half-width, fractional
  std::size_t n = 61;           // points per axis
  unsigned threads = 0;
};

// Fidelity of U(err)|0> with |1>, global phase ignored.
double transfer_fidelity(const Waveform& w, const ErrorPoint& err);

FidelityLandscape scan(const Waveform& w, const ScanOptions& opt = {}, std::string label = "pulse");

// Cut at delta1 = 0 over detuning in [-range, range] * omega_max.
std::vector<std::pair<double, double>> detuning_cut(const Waveform& w, double range = 1.0,
                                                    std::size_t n = 201);

// Fraction of grid cells with fidelity >= level.
double contour_area(const FidelityLandscape& map, double level);

enum class Axis { Detuning, Rabi };

// Fraction of the points on the central row (Axis::Detuning, delta1 closest
// to 0) or central column (Axis::Rabi, detuning closest to 0) that reach
// `level`.
double contour_extent(const FidelityLandscape& map, double level, Axis axis);

// Same fraction for every line parallel to `axis`: one entry per Rabi error
// for Axis::Detuning, one per detuning for Axis::Rabi.
std::vector<double> contour_chords(const FidelityLandscape& map, double level, Axis axis);

// CSV: "# pulse=<label> rows=detuning cols=rabi", then a row whose first
// cell is the column count followed by the Rabi errors, then one row per
// detuning (first cell in Hz). Nine significant digits throughout.
void write_landscape_csv(std::ostream& os, const FidelityLandscape& map);
FidelityLandscape read_landscape_csv(std::istream& is);

}  // namespace robustspin
