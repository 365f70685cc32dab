#include "robustspin/family.hpp"

#include "robustspin/errors.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

using units::kPi;

PulseFamily PulseFamily::square(double omega, double dt) {
  return from_waveforms("square", std::make_shared<Waveform>(square_pulse(kPi, 0.0, omega, dt)),
                        std::make_shared<Waveform>(square_pulse(kPi / 2, 0.0, omega, dt)));
}

PulseFamily PulseFamily::corpse(double omega, double dt) {
  return from_waveforms("corpse", std::make_shared<Waveform>(robustspin::corpse(kPi, omega, dt)),
                        std::make_shared<Waveform>(robustspin::corpse(kPi / 2, omega, dt)));
}

PulseFamily PulseFamily::bb1(double omega, double dt) {
  return from_waveforms("bb1", std::make_shared<Waveform>(robustspin::bb1(kPi, omega, dt)),
                        std::make_shared<Waveform>(robustspin::bb1(kPi / 2, omega, dt)));
}

PulseFamily PulseFamily::instantaneous() {
  PulseFamily f;
  f.name = "ideal";
  f.ideal = true;
  return f;
}

PulseFamily PulseFamily::from_waveforms(std::string name, std::shared_ptr<const Waveform> pi,
                                        std::shared_ptr<const Waveform> half_pi) {
  if (pi) pi->validate();
  if (half_pi) half_pi->validate();
  PulseFamily f;
  f.name = std::move(name);
  f.pi = std::move(pi);
  f.half_pi = std::move(half_pi);
  return f;
}

double PulseFamily::pi_duration() const {
  if (ideal) return 0.0;
  require(pi != nullptr, "pulse family '" + name + "' has no pi waveform");
  return pi->duration();
}

double PulseFamily::half_pi_duration() const {
  if (ideal) return 0.0;
  require(half_pi != nullptr, "pulse family '" + name + "' has no pi/2 waveform");
  return half_pi->duration();
}

void PulseFamily::append_pi(PulseSequence& seq, double phase) const {
  if (ideal) {
    seq.ideal(kPi, phase);
    return;
  }
  require(pi != nullptr, "pulse family '" + name + "' has no pi waveform");
  seq.pulse(pi, phase);
}

void PulseFamily::append_half_pi(PulseSequence& seq, double phase) const {
  if (ideal) {
    seq.ideal(kPi / 2, phase);
    return;
  }
  require(half_pi != nullptr, "pulse family '" + name + "' has no pi/2 waveform");
  seq.pulse(half_pi, phase);
}

}  // namespace robustspin
