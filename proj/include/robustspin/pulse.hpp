#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "robustspin/quantum.hpp"

namespace robustspin {

inline constexpr double kDefaultDt = 1e-9;

/// Piecewise-constant I/Q envelope. Slice l drives
/// omega_max * (ux[l] S_x + uy[l] S_y) for a duration dt.
struct Waveform {
  double dt = kDefaultDt;
  std::vector<double> ux;
  std::vector<double> uy;
  double omega_max = 0.0;

  std::size_t size() const { return ux.size(); }
  double duration() const { return static_cast<double>(ux.size()) * dt; }
  // Throws InvalidArgument when an invariant is broken.
  void validate() const;

  static Waveform zeros(std::size_t slices, double dt, double omega_max);
};

// Deterministic offsets entering the control Hamiltonian.
struct ErrorPoint {
  double delta0 = 0.0;     // rad/s, detuning (static error plus any set detuning)
  double delta1 = 0.0;     // fractional Rabi error
  double delta_phi = 0.0;  // rad

  void validate() const;
};

struct PulseSegment {
  std::shared_ptr<const Waveform> waveform;
  double phase = 0.0;
};

struct DelaySegment {
  double duration = 0.0;
};

// Instantaneous, error-free rotation (theta)_phi. Used for idealized
// reference sequences; takes no time so drift does not act during it.
struct IdealRotation {
  double theta = 0.0;
  double phase = 0.0;
};

using Segment = std::variant<PulseSegment, DelaySegment, IdealRotation>;

class PulseSequence {
 public:
  PulseSequence& pulse(std::shared_ptr<const Waveform> w, double phase = 0.0);
  PulseSequence& pulse(const Waveform& w, double phase = 0.0);
  PulseSequence& delay(double duration);
  PulseSequence& ideal(double theta, double phase = 0.0);
  PulseSequence& append(const PulseSequence& other);

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double duration() const;
  std::size_t pulse_count() const;

 private:
  std::vector<Segment> segments_;
};

// Square rotation (theta)_phi at Rabi frequency omega.
Waveform square_pulse(double theta, double phi, double omega, double dt = kDefaultDt);

// (theta1)_0 (theta2)_pi (theta3)_0 with the CORPSE angles.
Waveform corpse(double theta, double omega, double dt = kDefaultDt);

// (theta/2)_0 (pi)_phi (2pi)_{3phi} (pi)_phi (theta/2)_0, phi = arccos(-theta / 4pi).
Waveform bb1(double theta, double omega, double dt = kDefaultDt);

struct CompositeStep {
  double angle;
  double phase;
};
Waveform composite(const std::vector<CompositeStep>& steps, double omega, double dt = kDefaultDt);

struct CorpseAngles {
  double theta1, theta2, theta3;
};
CorpseAngles corpse_angles(double theta);
double bb1_phase(double theta);

// Slice-wise rotation of the (ux, uy) plane by phi.
Waveform rotate_phase(const Waveform& w, double phi);

// Slice Hamiltonian (electron space) for control (ux, uy) at segment phase.
Op2 control_hamiltonian(double ux, double uy, double omega, double phase, const ErrorPoint& err);

Op2 waveform_propagator(const Waveform& w, const ErrorPoint& err, double phase = 0.0);
Op4 waveform_propagator(const Waveform& w, const ErrorPoint& err, double phase, const Op4& drift);

Op2 ideal_rotation(double theta, double phase);

// Time-ordered product over all segments. Delays evolve under delta0 S_z
// (plus drift in the 4-dim form).
Op2 sequence_propagator(const PulseSequence& seq, const ErrorPoint& err);
Op4 sequence_propagator(const PulseSequence& seq, const ErrorPoint& err, const Op4& drift);

// Memoizes segment propagators for one (error point, drift) pair.
// Pulse segments are keyed by waveform identity and phase, delays by
// duration, so sequences built from shared waveforms reuse work.
template <int D>
class SegmentCache {
 public:
  using Mat = Operator<D>;
  explicit SegmentCache(ErrorPoint err, std::optional<Op4> drift = std::nullopt);

  const Mat& segment(const Segment& s);
  Mat sequence(const PulseSequence& seq);
  const ErrorPoint& error() const { return err_; }

 private:
  ErrorPoint err_;
  std::optional<Op4> drift_;
  std::map<std::pair<const Waveform*, double>, Mat> pulses_;
  std::map<double, Mat> delays_;
  std::map<std::pair<double, double>, Mat> ideals_;
};

// Text format: "# dt_ns=<float> omega_max_radps=<float>" then "<ux> <uy>" per slice.
void write_waveform(std::ostream& os, const Waveform& w);
Waveform read_waveform(std::istream& is);
void save_waveform(const std::string& path, const Waveform& w);
Waveform load_waveform(const std::string& path);

}  // namespace robustspin
