#include "robustspin/pulse.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "robustspin/errors.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

void Waveform::validate() const {
  require(dt > 0.0 && std::isfinite(dt), "waveform: dt must be positive");
  require(!ux.empty(), "waveform: needs at least one slice");
  require(ux.size() == uy.size(), "waveform: ux and uy lengths differ");
  require(omega_max >= 0.0 && std::isfinite(omega_max), "waveform: omega_max must be non-negative");
  for (std::size_t l = 0; l < ux.size(); ++l) {
    require(std::isfinite(ux[l]) && std::isfinite(uy[l]), "waveform: non-finite amplitude");
    require(std::max(std::abs(ux[l]), std::abs(uy[l])) <= 1.0 + 1e-12,
            "waveform: amplitude exceeds 1 at slice " + std::to_string(l));
  }
}

Waveform Waveform::zeros(std::size_t slices, double dt, double omega_max) {
  Waveform w;
  w.dt = dt;
  w.omega_max = omega_max;
  w.ux.assign(slices, 0.0);
  w.uy.assign(slices, 0.0);
  return w;
}

void ErrorPoint::validate() const {
  require(std::isfinite(delta0) && std::isfinite(delta1) && std::isfinite(delta_phi),
          "error point: non-finite value");
  require(delta1 > -1.0, "error point: delta1 must exceed -1");
}

PulseSequence& PulseSequence::pulse(std::shared_ptr<const Waveform> w, double phase) {
  require(w != nullptr, "sequence: null waveform");
  w->validate();
  segments_.emplace_back(PulseSegment{std::move(w), phase});
  return *this;
}

PulseSequence& PulseSequence::pulse(const Waveform& w, double phase) {
  return pulse(std::make_shared<const Waveform>(w), phase);
}

PulseSequence& PulseSequence::delay(double duration) {
  require(duration >= 0.0 && std::isfinite(duration), "sequence: delay must be non-negative");
  segments_.emplace_back(DelaySegment{duration});
  return *this;
}

PulseSequence& PulseSequence::ideal(double theta, double phase) {
  segments_.emplace_back(IdealRotation{theta, phase});
  return *this;
}

PulseSequence& PulseSequence::append(const PulseSequence& other) {
  segments_.insert(segments_.end(), other.segments_.begin(), other.segments_.end());
  return *this;
}

double PulseSequence::duration() const {
  double t = 0.0;
  for (const auto& s : segments_) {
    if (const auto* p = std::get_if<PulseSegment>(&s)) t += p->waveform->duration();
    else if (const auto* d = std::get_if<DelaySegment>(&s)) t += d->duration;
  }
  return t;
}

std::size_t PulseSequence::pulse_count() const {
  std::size_t n = 0;
  for (const auto& s : segments_)
    if (!std::holds_alternative<DelaySegment>(s)) ++n;
  return n;
}

Waveform composite(const std::vector<CompositeStep>& steps, double omega, double dt) {
  require(omega > 0.0, "composite: omega must be positive");
  require(dt > 0.0, "composite: dt must be positive");
  Waveform w;
  w.dt = dt;
  w.omega_max = omega;
  for (const auto& step : steps) {
    require(step.angle > 0.0, "composite: rotation angle must be positive");
    const double slices = step.angle / (omega * dt);
    double whole = std::floor(slices);
    double rest = slices - whole;
    if (rest > 1.0 - 1e-9) {
      whole += 1.0;
      rest = 0.0;
    } else if (rest < 1e-9) {
      rest = 0.0;
    }
    const double c = std::cos(step.phase);
    const double s = std::sin(step.phase);
    for (long l = 0; l < static_cast<long>(whole); ++l) {
      w.ux.push_back(c);
      w.uy.push_back(s);
    }
    // The residual angle rides on one reduced-amplitude slice.
    if (rest > 0.0) {
      w.ux.push_back(rest * c);
      w.uy.push_back(rest * s);
    }
  }
  require(!w.ux.empty(), "composite: pulse shorter than one slice");
  return w;
}

Waveform square_pulse(double theta, double phi, double omega, double dt) {
  require(theta > 0.0, "square_pulse: theta must be positive");
  return composite({{theta, phi}}, omega, dt);
}

CorpseAngles corpse_angles(double theta) {
  const double k = std::asin(std::sin(theta / 2.0) / 2.0);
  return {units::kTwoPi + theta / 2.0 - k, units::kTwoPi - 2.0 * k, theta / 2.0 - k};
}

Waveform corpse(double theta, double omega, double dt) {
  require(theta > 0.0 && theta <= units::kPi + 1e-12, "corpse: theta must lie in (0, pi]");
  const auto a = corpse_angles(theta);
  return composite({{a.theta1, 0.0}, {a.theta2, units::kPi}, {a.theta3, 0.0}}, omega, dt);
}

double bb1_phase(double theta) { return std::acos(-theta / (4.0 * units::kPi)); }

Waveform bb1(double theta, double omega, double dt) {
  require(theta > 0.0 && theta <= units::kPi + 1e-12, "bb1: theta must lie in (0, pi]");
  const double phi = bb1_phase(theta);
  return composite({{theta / 2.0, 0.0},
                    {units::kPi, phi},
                    {units::kTwoPi, 3.0 * phi},
                    {units::kPi, phi},
                    {theta / 2.0, 0.0}},
                   omega, dt);
}

Waveform rotate_phase(const Waveform& w, double phi) {
  Waveform out = w;
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  for (std::size_t l = 0; l < w.size(); ++l) {
    out.ux[l] = w.ux[l] * c - w.uy[l] * s;
    out.uy[l] = w.ux[l] * s + w.uy[l] * c;
  }
  return out;
}

Op2 control_hamiltonian(double ux, double uy, double omega, double phase, const ErrorPoint& err) {
  const double c = std::cos(phase + err.delta_phi);
  const double s = std::sin(phase + err.delta_phi);
  const double amp = omega * (1.0 + err.delta1);
  const double rx = ux * c - uy * s;
  const double ry = ux * s + uy * c;
  // delta0 S_z + amp (rx S_x + ry S_y), written out directly
  Op2 h;
  h(0, 0) = 0.5 * err.delta0;
  h(1, 1) = -0.5 * err.delta0;
  h(0, 1) = 0.5 * amp * Complex(rx, -ry);
  h(1, 0) = 0.5 * amp * Complex(rx, ry);
  return h;
}

Op2 waveform_propagator(const Waveform& w, const ErrorPoint& err, double phase) {
  Op2 u = Op2::Identity();
  for (std::size_t l = 0; l < w.size(); ++l)
    u = su2_exp(control_hamiltonian(w.ux[l], w.uy[l], w.omega_max, phase, err), w.dt) * u;
  return u;
}

Op4 waveform_propagator(const Waveform& w, const ErrorPoint& err, double phase, const Op4& drift) {
  Op4 u = Op4::Identity();
  for (std::size_t l = 0; l < w.size(); ++l) {
    const Op4 h = electron_op(control_hamiltonian(w.ux[l], w.uy[l], w.omega_max, phase, err)) + drift;
    u = propagate(h, w.dt) * u;
  }
  return u;
}

Op2 ideal_rotation(double theta, double phase) {
  const Op2 axis = std::cos(phase) * spin::sx() + std::sin(phase) * spin::sy();
  return su2_exp(axis, theta);
}

namespace {

Op2 delay2(double t, const ErrorPoint& err) {
  if (t <= 0.0) return Op2::Identity();
  return su2_exp(err.delta0 * spin::sz(), t);
}

Op4 delay4(double t, const ErrorPoint& err, const Op4& drift) {
  if (t <= 0.0) return Op4::Identity();
  return propagate(Op4(electron_op(err.delta0 * spin::sz()) + drift), t);
}

}  // namespace

template <int D>
SegmentCache<D>::SegmentCache(ErrorPoint err, std::optional<Op4> drift)
    : err_(err), drift_(std::move(drift)) {
  err_.validate();
  if constexpr (D == 2) {
    require(!drift_.has_value(), "sequence_propagator: drift requires the 4-dim space");
  } else {
    require(drift_.has_value(), "sequence_propagator: 4-dim propagation needs a drift term");
    require(is_hermitian(*drift_), "sequence_propagator: drift must be Hermitian");
  }
}

template <int D>
const typename SegmentCache<D>::Mat& SegmentCache<D>::segment(const Segment& s) {
  if (const auto* p = std::get_if<PulseSegment>(&s)) {
    const auto key = std::make_pair(p->waveform.get(), p->phase);
    auto it = pulses_.find(key);
    if (it == pulses_.end()) {
      Mat u;
      if constexpr (D == 2) u = waveform_propagator(*p->waveform, err_, p->phase);
      else u = waveform_propagator(*p->waveform, err_, p->phase, *drift_);
      it = pulses_.emplace(key, u).first;
    }
    return it->second;
  }
  if (const auto* d = std::get_if<DelaySegment>(&s)) {
    auto it = delays_.find(d->duration);
    if (it == delays_.end()) {
      Mat u;
      if constexpr (D == 2) u = delay2(d->duration, err_);
      else u = delay4(d->duration, err_, *drift_);
      it = delays_.emplace(d->duration, u).first;
    }
    return it->second;
  }
  const auto& r = std::get<IdealRotation>(s);
  const auto key = std::make_pair(r.theta, r.phase);
  auto it = ideals_.find(key);
  if (it == ideals_.end()) {
    Mat u;
    if constexpr (D == 2) u = ideal_rotation(r.theta, r.phase);
    else u = electron_op(ideal_rotation(r.theta, r.phase));
    it = ideals_.emplace(key, u).first;
  }
  return it->second;
}

template <int D>
typename SegmentCache<D>::Mat SegmentCache<D>::sequence(const PulseSequence& seq) {
  Mat u = Mat::Identity();
  for (const auto& s : seq.segments()) u = segment(s) * u;
  return u;
}

template class SegmentCache<2>;
template class SegmentCache<4>;

Op2 sequence_propagator(const PulseSequence& seq, const ErrorPoint& err) {
  SegmentCache<2> cache(err);
  return cache.sequence(seq);
}

Op4 sequence_propagator(const PulseSequence& seq, const ErrorPoint& err, const Op4& drift) {
  SegmentCache<4> cache(err, drift);
  return cache.sequence(seq);
}

void write_waveform(std::ostream& os, const Waveform& w) {
  w.validate();
  os << std::setprecision(17);
  os << "# dt_ns=" << w.dt * 1e9 << " omega_max_radps=" << w.omega_max << "\n";
  for (std::size_t l = 0; l < w.size(); ++l) os << w.ux[l] << " " << w.uy[l] << "\n";
}

Waveform read_waveform(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("waveform: empty input");
  Waveform w;
  double dt_ns = 0.0;
  {
    std::istringstream hs(header);
    std::string hash, a, b;
    hs >> hash >> a >> b;
    const auto value = [](const std::string& kv, const std::string& key) {
      if (kv.rfind(key + "=", 0) != 0) throw IoError("waveform: malformed header, expected " + key);
      return std::stod(kv.substr(key.size() + 1));
    };
    if (hash != "#") throw IoError("waveform: header must start with '#'");
    dt_ns = value(a, "dt_ns");
    w.omega_max = value(b, "omega_max_radps");
  }
  w.dt = dt_ns * 1e-9;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double x = 0.0, y = 0.0;
    if (!(ls >> x >> y)) throw IoError("waveform: bad slice on line " + std::to_string(lineno));
    w.ux.push_back(x);
    w.uy.push_back(y);
  }
  try {
    w.validate();
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("waveform file invalid: ") + e.what());
  }
  return w;
}

void save_waveform(const std::string& path, const Waveform& w) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_waveform(os, w);
  if (!os) throw IoError("failed writing " + path);
}

Waveform load_waveform(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return read_waveform(is);
}

}  // namespace robustspin
