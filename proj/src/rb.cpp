#include "robustspin/rb.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "robustspin/errors.hpp"
#include "robustspin/fit.hpp"
#include "robustspin/parallel.hpp"
#include "robustspin/rng.hpp"
#include "robustspin/units.hpp"

namespace robustspin {

namespace {

using units::kPi;

const Op2& pauli_matrix(RbAxis a) {
  static const Op2 x = 2.0 * spin::sx(), y = 2.0 * spin::sy(), z = 2.0 * spin::sz(), i = spin::identity();
  switch (a) {
    case RbAxis::X: return x;
    case RbAxis::Y: return y;
    case RbAxis::Z: return z;
    default: return i;
  }
}

double gate_angle(const RbGate& g) { return g.kind == RbGate::Kind::Pauli ? kPi : kPi / 2; }

// Rotation angle about +z in quarter turns, or phase of an x/y axis.
int axis_quarter(RbAxis a) { return a == RbAxis::Y ? 1 : 0; }

int mod4(int q) { return ((q % 4) + 4) % 4; }

// Bloch vector of a pure qubit state.
Eigen::Vector3d bloch(const ComplexVector& psi) {
  const Complex a = psi[0], b = psi[1];
  const Complex c = std::conj(a) * b;
  return {2.0 * c.real(), 2.0 * c.imag(), std::norm(a) - std::norm(b)};
}

RbGate random_pauli(Rng& rng) {
  static constexpr RbAxis axes[] = {RbAxis::I, RbAxis::X, RbAxis::Y, RbAxis::Z};
  RbGate g;
  g.kind = RbGate::Kind::Pauli;
  g.axis = axes[rng.below(4)];
  g.sign = rng.below(2) ? 1 : -1;
  return g;
}

void check_lengths(const std::vector<int>& lengths) {
  require(!lengths.empty(), "rb: lengths must be nonempty");
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    require(lengths[i] >= 1, "rb: lengths must be >= 1");
    require(i == 0 || lengths[i] > lengths[i - 1], "rb: lengths must be strictly increasing");
  }
}

}  // namespace

Op2 RbGate::unitary() const {
  if (axis == RbAxis::I) return Op2::Identity();
  const double half = 0.5 * gate_angle(*this);
  return std::cos(half) * Op2::Identity() - kI * (sign * std::sin(half)) * pauli_matrix(axis);
}

Op2 ideal_sequence_unitary(const RbSequence& seq) {
  Op2 u = Op2::Identity();
  for (const auto& g : seq.gates) u = g.unitary() * u;
  return u;
}

std::vector<RbSequence> generate_rb_suite(const RbSuiteOptions& opt) {
  check_lengths(opt.lengths);
  require(opt.n_gate_sets >= 1 && opt.n_paulis >= 1, "rb: N_G and N_P must be >= 1");
  const int longest = opt.lengths.back();
  std::vector<RbSequence> suite;
  ComplexVector ground(2);
  ground << 1.0, 0.0;

  for (int j = 0; j < opt.n_gate_sets; ++j) {
    Rng crng = Rng::stream(opt.seed, static_cast<std::uint64_t>(j));
    std::vector<RbGate> cliffords(longest);
    for (auto& g : cliffords) {
      g.kind = RbGate::Kind::Clifford;
      g.axis = crng.below(2) ? RbAxis::Y : RbAxis::X;
      g.sign = crng.below(2) ? 1 : -1;
    }
    for (std::size_t k = 0; k < opt.lengths.size(); ++k) {
      const int l = opt.lengths[k];
      Op2 u = Op2::Identity();
      for (int i = 0; i < l; ++i) u = cliffords[i].unitary() * u;
      const Eigen::Vector3d r = bloch(u * ground);

      Rng prng = Rng::stream(Rng::stream(opt.seed, j).next() ^ 0x5851f42d4c957f2dULL,
                             static_cast<std::uint64_t>(k));
      RbGate rec;
      rec.kind = RbGate::Kind::Recovery;
      rec.sign = prng.below(2) ? 1 : -1;
      if (std::abs(r.z()) > 0.5) rec.axis = RbAxis::Z;
      else if (std::abs(r.x()) > 0.5) rec.axis = RbAxis::Y;
      else rec.axis = RbAxis::X;

      for (int m = 0; m < opt.n_paulis; ++m) {
        RbSequence seq;
        seq.length = l;
        seq.gate_set = j;
        seq.gates.reserve(2 * l + 3);
        for (int i = 0; i < l; ++i) {
          seq.gates.push_back(random_pauli(prng));
          seq.gates.push_back(cliffords[i]);
        }
        seq.gates.push_back(random_pauli(prng));
        seq.gates.push_back(rec);
        seq.gates.push_back(random_pauli(prng));
        const ComplexVector out = ideal_sequence_unitary(seq) * ground;
        seq.expected_final = std::norm(out[1]) > 0.5 ? 1 : 0;
        suite.push_back(std::move(seq));
      }
    }
  }
  return suite;
}

PulseSequence rb_pulse_sequence(const RbSequence& seq, const PulseFamily& family, const RbSimOptions& opt) {
  PulseSequence out;
  int frame = 0;  // accumulated virtual z rotation, quarter turns
  for (const auto& g : seq.gates) {
    if (g.axis == RbAxis::I) {
      if (opt.idle_identity && family.pi_duration() > 0.0) out.delay(family.pi_duration());
      continue;
    }
    if (g.axis == RbAxis::Z) {
      frame += g.kind == RbGate::Kind::Pauli ? 2 : g.sign;
      continue;
    }
    // rotation about -axis is the same pulse shifted by half a turn
    const int q = mod4(axis_quarter(g.axis) + (g.sign < 0 ? 2 : 0) - frame);
    const double phase = q * (kPi / 2);
    if (g.kind == RbGate::Kind::Pauli) family.append_pi(out, phase);
    else family.append_half_pi(out, phase);
  }
  return out;
}

RbCurve simulate_rb(const std::vector<RbSequence>& suite, const PulseFamily& family, const RbError& err,
                    const RbSimOptions& opt) {
  require(!suite.empty(), "simulate_rb: empty suite");
  require(family.has_pi() && family.has_half_pi(),
          "simulate_rb: pulse family '" + family.name + "' must provide pi and pi/2 pulses");

  std::vector<PulseSequence> programs;
  programs.reserve(suite.size());
  for (const auto& s : suite) programs.push_back(rb_pulse_sequence(s, family, opt));

  std::vector<ErrorPoint> points;
  if (const auto* p = std::get_if<ErrorPoint>(&err)) {
    p->validate();
    points.push_back(*p);
  } else {
    points = sample_error_points(std::get<NoiseEnsemble>(err));
  }

  // per error point, the population of each sequence's expected level
  std::vector<std::vector<double>> pop(points.size(), std::vector<double>(suite.size()));
  const auto ground = QuantumState::basis(2, 0);
  parallel_for(points.size(), opt.threads, [&](std::size_t e) {
    SegmentCache<2> cache(points[e]);
    for (std::size_t s = 0; s < suite.size(); ++s)
      pop[e][s] = expectation_population(ground.evolved(cache.sequence(programs[s])), suite[s].expected_final);
  });

  std::vector<double> per_seq(suite.size(), 0.0);
  for (std::size_t s = 0; s < suite.size(); ++s) {
    for (std::size_t e = 0; e < points.size(); ++e) per_seq[s] += pop[e][s];
    per_seq[s] /= static_cast<double>(points.size());
  }

  std::vector<int> lengths;
  for (const auto& s : suite) lengths.push_back(s.length);
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

  RbCurve curve;
  for (int l : lengths) {
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t s = 0; s < suite.size(); ++s) {
      if (suite[s].length != l) continue;
      sum += per_seq[s];
      ++n;
    }
    const double mean = sum / static_cast<double>(n);
    for (std::size_t s = 0; s < suite.size(); ++s)
      if (suite[s].length == l) sq += (per_seq[s] - mean) * (per_seq[s] - mean);
    const double sd = n > 1 ? std::sqrt(sq / static_cast<double>(n - 1)) : 0.0;
    curve.lengths.push_back(l);
    curve.mean_fidelities.push_back(mean);
    curve.std_errors.push_back(sd / std::sqrt(static_cast<double>(n)));
  }
  return curve;
}

double rb_model(double fa, double dif, double l) {
  return 0.5 + 0.5 * (1.0 - dif) * std::pow(2.0 * fa - 1.0, l);
}

RbFit fit_rb(const std::vector<int>& lengths, const std::vector<double>& f) {
  require(lengths.size() == f.size(), "fit_rb: lengths and fidelities differ in size");
  std::vector<int> distinct = lengths;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  require(distinct.size() >= 3, "fit_rb: need at least 3 distinct lengths");

  const std::size_t n = f.size();
  auto residuals = [&](const Eigen::VectorXd& p) {
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = rb_model(p[0], p[1], lengths[i]) - f[i];
    return r;
  };

  Eigen::VectorXd lo(2), hi(2), best(2);
  lo << 0.5, 0.0;
  hi << 1.0, 1.0;
  double best_rss = std::numeric_limits<double>::infinity();
  for (int a = 0; a <= 200; ++a) {
    for (int b = 0; b <= 20; ++b) {
      Eigen::VectorXd p(2);
      p << 1.0 - 0.5 * std::pow(a / 200.0, 3.0), b / 20.0;
      const double rss = residuals(p).squaredNorm();
      if (rss < best_rss) best_rss = rss, best = p;
    }
  }
  fit::Options fo;
  fo.max_iterations = 500;
  const auto res = fit::least_squares(residuals, best, lo, hi, fo);
  if (!res.params.allFinite()) throw NumericalError("fit_rb: non-finite parameters");

  RbFit out;
  out.fa = res.params[0];
  out.dif = res.params[1];
  out.fa_err = res.std_errors[0];
  out.dif_err = res.std_errors[1];
  out.rss = res.rss;
  // with 2F_a - 1 = 0 the curve is flat at 1/2 and neither parameter is pinned down
  out.identifiable = !res.jacobian_singular && (2.0 * out.fa - 1.0) > 1e-6;
  return out;
}

RbFit fit_rb(const RbCurve& curve) { return fit_rb(curve.lengths, curve.mean_fidelities); }

void write_rb_csv(std::ostream& os, const RbCurve& curve) {
  require(curve.lengths.size() == curve.mean_fidelities.size() && curve.lengths.size() == curve.std_errors.size(),
          "write_rb_csv: column lengths differ");
  const auto old = os.precision(12);
  os << "length,mean_fidelity,std_error\n";
  for (std::size_t i = 0; i < curve.lengths.size(); ++i)
    os << curve.lengths[i] << ',' << curve.mean_fidelities[i] << ',' << curve.std_errors[i] << '\n';
  os.precision(old);
}

RbCurve read_rb_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "length,mean_fidelity,std_error")
    throw IoError("rb csv: missing 'length,mean_fidelity,std_error' header");
  RbCurve c;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, d;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, d))
      throw IoError("rb csv: expected three columns in '" + line + "'");
    try {
      c.lengths.push_back(std::stoi(a));
      c.mean_fidelities.push_back(std::stod(b));
      c.std_errors.push_back(std::stod(d));
    } catch (const std::exception&) {
      throw IoError("rb csv: bad number in '" + line + "'");
    }
  }
  return c;
}

}  // namespace robustspin
