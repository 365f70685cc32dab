#pragma once

#include <memory>
#include <string>

#include "robustspin/pulse.hpp"

namespace robustspin {

// The π and π/2 pulses a protocol plays, both defined at phase 0 (x axis).
// Other axes are reached through the segment phase. An ideal family plays
// instantaneous error-free rotations instead of waveforms.
struct PulseFamily {
  std::string name;
  std::shared_ptr<const Waveform> pi;
  std::shared_ptr<const Waveform> half_pi;
  bool ideal = false;

  static PulseFamily square(double omega, double dt = kDefaultDt);
  static PulseFamily corpse(double omega, double dt = kDefaultDt);
  static PulseFamily bb1(double omega, double dt = kDefaultDt);
  static PulseFamily instantaneous();
  static PulseFamily from_waveforms(std::string name, std::shared_ptr<const Waveform> pi,
                                    std::shared_ptr<const Waveform> half_pi);

  bool has_pi() const { return ideal || pi != nullptr; }
  bool has_half_pi() const { return ideal || half_pi != nullptr; }
  double pi_duration() const;
  double half_pi_duration() const;

  // Appends (pi)_phase or (pi/2)_phase; throws InvalidArgument when the
  // family has no waveform for it.
  void append_pi(PulseSequence& seq, double phase) const;
  void append_half_pi(PulseSequence& seq, double phase) const;
};

}  // namespace robustspin
