#include <catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>

#include "robustspin/dd.hpp"
#include "robustspin/errors.hpp"

using namespace robustspin;
using Catch::Approx;
using units::kPi;
using units::kTwoPi;

namespace {

const double kOmega = units::mhz(10.0);

// (305, 136) kHz spin
NuclearSpin example_spin() { return NuclearSpin::from_components(units::khz(305.0), units::khz(136.0)); }

// mean of the two conditional nuclear precession frequencies
double effective_frequency(const SensingConfig& cfg, const NuclearSpin& s) {
  const double wl = cfg.larmor();
  return 0.5 * (wl + std::hypot(wl + s.a_par(), s.a_perp()));
}

SensingConfig base(const PulseFamily& fam, int repeats) {
  SensingConfig cfg;
  cfg.family = fam;
  cfg.repeats = repeats;
  return cfg;
}

// depth below 1 of the deepest point in [f_lo, f_hi]
double dip_depth(const Spectrum& s, double f_lo, double f_hi) {
  double lo = 1.0;
  for (std::size_t i = 0; i < s.frequency.size(); ++i)
    if (s.frequency[i] >= f_lo && s.frequency[i] <= f_hi) lo = std::min(lo, s.population[i]);
  return 1.0 - lo;
}

}  // namespace

TEST_CASE("hyperfine components") {
  const NuclearSpin s{units::khz(360.0), 56.0 * kPi / 180.0};
  CHECK(s.a_par() == Approx(units::khz(360.0) * std::cos(56.0 * kPi / 180.0)));
  const auto back = NuclearSpin::from_components(s.a_par(), s.a_perp());
  CHECK(back.omega_h == Approx(s.omega_h));
  CHECK(back.theta == Approx(s.theta));
  CHECK_THROWS_AS(NuclearSpin::from_components(1.0, -1.0), InvalidArgument);
  CHECK_THROWS_AS((NuclearSpin{1.0, 4.0}).validate(), InvalidArgument);
}

TEST_CASE("XY sequences") {
  const auto fam = PulseFamily::square(kOmega);
  const double tau = 1e-6;
  const auto xy4 = build_dd_sequence(DdKind::XY4, 1, tau, fam);
  CHECK(xy4.pulse_count() == 4 + 2);
  std::vector<double> phases;
  for (const auto& s : xy4.segments())
    if (const auto* p = std::get_if<PulseSegment>(&s); p && p->waveform == fam.pi) phases.push_back(p->phase);
  CHECK(phases == std::vector<double>{0.0, kPi / 2, 0.0, kPi / 2});
  CHECK(build_dd_sequence(DdKind::XY8, 2, tau, fam).pulse_count() == 16 + 2);
  for (int r : {1, 3, 40}) {
    // pulse centres 2 tau apart: the pi-train spans 8 tau per XY4 unit
    CHECK(build_dd_sequence(DdKind::XY4, r, tau, fam).duration() ==
          Approx(r * 8.0 * tau + 2.0 * fam.half_pi_duration()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(build_dd_sequence(DdKind::XY4, 1, 20e-9, fam), InvalidArgument);
  CHECK_NOTHROW(build_dd_sequence(DdKind::XY4, 1, 26e-9, fam));
  CHECK_THROWS_AS(build_dd_sequence(DdKind::XY4, 0, tau, fam), InvalidArgument);
}

TEST_CASE("free evolution is the conditional nuclear rotation") {
  const auto spin = example_spin();
  const double wl = units::khz(546.0);
  const Op4 h = nuclear_drift(wl, spin);
  PulseSequence d;
  d.delay(1.7e-6);
  const Op4 u = sequence_propagator(d, {}, h);
  const Op2 u0 = propagate(Op2(wl * spin::sz()), 1.7e-6);
  const Op2 u1 = propagate(Op2((wl + spin.a_par()) * spin::sz() + spin.a_perp() * spin::sx()), 1.7e-6);
  const Op4 expect = kron(spin::projector(0), u0) + kron(spin::projector(1), u1);
  CHECK((u - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("without nuclear spins the sequence maps to |1>") {
  for (const auto& fam : {PulseFamily::instantaneous(), PulseFamily::square(kOmega)}) {
    auto cfg = base(fam, 4);
    cfg.tau_axis = tau_axis_for_frequencies(0.4e6, 1.6e6, 41);
    for (double p : simulate_spectrum(cfg).population) CHECK(p == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("ideal pulses show dips at odd harmonics only") {
  auto cfg = base(PulseFamily::instantaneous(), 20);
  // weak coupling: a strong spin over-rotates and splits the dip
  const auto weak = NuclearSpin::from_components(units::khz(40.0), units::khz(20.0));
  for (int k : {1, 3}) {
    const double w0 = effective_frequency(cfg, weak);
    const double tau_k = k * kPi / (2.0 * w0);
    cfg.tau_axis.clear();
    const double bin = 0.002 * tau_k;
    for (int i = -40; i <= 40; ++i) cfg.tau_axis.push_back(tau_k + i * bin);
    const auto p = single_spin_response(cfg, weak);
    const auto it = std::min_element(p.begin(), p.end());
    CHECK(std::abs(std::distance(p.begin(), it) - 40) <= 1);
    CHECK(*it < 0.9);
  }
  // 2 tau = pi / (2 w0) is not a resonance for instantaneous pulses
  const auto spin = example_spin();
  const double w0 = effective_frequency(cfg, spin);
  cfg.tau_axis.clear();
  const double tau_s = kPi / (4.0 * w0);
  for (int i = -20; i <= 20; ++i) cfg.tau_axis.push_back(tau_s * (1.0 + 0.002 * i));
  for (double p : single_spin_response(cfg, spin)) CHECK(p > 0.99);
}

TEST_CASE("spurious dip grows with the number of imperfect pulses") {
  const auto spin = example_spin();
  double prev = 0.0;
  for (int r : {10, 20, 40}) {
    auto cfg = base(PulseFamily::square(kOmega), r);
    cfg.spins = {spin};
    cfg.err = {0.08 * kOmega, 0.08, 0.0};
    const double f2 = 2.0 * effective_frequency(cfg, spin) / kTwoPi;
    cfg.tau_axis = tau_axis_for_frequencies(f2 - 30e3, f2 + 30e3, 121);
    const double d = dip_depth(simulate_spectrum(cfg), f2 - 30e3, f2 + 30e3);
    CHECK(d > prev);
    prev = d;
  }
  CHECK(prev > 0.05);
}

TEST_CASE("populations stay in [0, 1] with several spins") {
  auto cfg = base(PulseFamily::square(kOmega), 8);
  cfg.err = {0.05 * kOmega, -0.05, 0.0};
  cfg.spins = {NuclearSpin{units::khz(360.0), 56.0 * kPi / 180}, NuclearSpin{units::khz(152.0), 134.0 * kPi / 180},
               NuclearSpin{units::khz(67.0), 26.0 * kPi / 180}};
  cfg.tau_axis = tau_axis_for_frequencies(0.4e6, 1.6e6, 61);
  for (double p : simulate_spectrum(cfg).population) CHECK((p >= 0.0 && p <= 1.0));
}

TEST_CASE("peak detection") {
  Spectrum flat;
  for (int i = 0; i < 100; ++i) {
    flat.frequency.push_back(1e5 * i);
    flat.population.push_back(1.0);
  }
  CHECK(detect_peaks(flat, 0.05).empty());

  Spectrum s = flat;
  const double f0 = 4.23e6, w = 0.15e6;
  for (std::size_t i = 0; i < s.frequency.size(); ++i) {
    const double x = (s.frequency[i] - f0) / w;
    s.population[i] = 1.0 - 0.4 / (1.0 + x * x);
  }
  const auto peaks = detect_peaks(s, 0.05);
  REQUIRE(peaks.size() == 1);
  CHECK(std::abs(peaks[0].frequency - f0) <= 1e5);
  CHECK(peaks[0].depth == Approx(0.4).margin(0.05));
  CHECK_THROWS_AS(detect_peaks(s, 0.0), InvalidArgument);
}

TEST_CASE("hyperfine fit recovers a synthetic spin") {
  const NuclearSpin truth{units::khz(360.0), 56.0 * kPi / 180.0};
  auto cfg = base(PulseFamily::square(kOmega), 40);
  cfg.spins = {truth};
  cfg.tau_axis = tau_axis_for_frequencies(0.4e6, 1.6e6, 721);
  const auto spec = simulate_spectrum(cfg);
  const double f0 = effective_frequency(cfg, truth) / kTwoPi;
  const auto fit = fit_hyperfine(spec, Peak{f0, 0.0}, cfg);
  CHECK(std::abs(fit.spin.omega_h - truth.omega_h) <= units::khz(9.0));
  CHECK(std::abs(fit.spin.theta - truth.theta) <= 2.0 * kPi / 180.0);
  CHECK(fit.omega_h_err >= 0.0);

  // a second spin ~15 kHz away is not something one spin can explain
  auto pair = cfg;
  pair.spins = {NuclearSpin{units::khz(67.0), 26.0 * kPi / 180.0}, NuclearSpin{units::khz(90.0), 26.0 * kPi / 180.0}};
  const auto both = simulate_spectrum(pair);
  const double f1 = effective_frequency(pair, pair.spins[0]) / kTwoPi;
  CHECK_THROWS_AS(fit_hyperfine(both, Peak{f1, 0.0}, pair), InvalidArgument);

  auto none = cfg;
  none.spins = {NuclearSpin{}};
  const auto flat = simulate_spectrum(none);
  CHECK_THROWS_AS(fit_hyperfine(flat, Peak{f0, 0.0}, cfg), InvalidArgument);
}

TEST_CASE("spectrum CSV round trip") {
  auto cfg = base(PulseFamily::square(kOmega), 2);
  cfg.spins = {example_spin()};
  cfg.tau_axis = tau_axis_for_frequencies(0.5e6, 0.9e6, 11);
  const auto s = simulate_spectrum(cfg);
  std::stringstream ss;
  write_spectrum_csv(ss, s);
  const auto back = read_spectrum_csv(ss);
  REQUIRE(back.tau.size() == 11);
  for (std::size_t i = 0; i < 11; ++i) {
    CHECK(back.tau[i] == Approx(s.tau[i]).epsilon(1e-11));
    CHECK(back.population[i] == Approx(s.population[i]).margin(1e-11));
  }
  std::stringstream bad("f,p\n1,2\n");
  CHECK_THROWS_AS(read_spectrum_csv(bad), IoError);
}
