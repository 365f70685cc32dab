#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "robustspin/calibration.hpp"
#include "robustspin/dd.hpp"
#include "robustspin/landscape.hpp"
#include "robustspin/rb.hpp"
#include "robustspin/roc.hpp"

using namespace robustspin;
using units::kPi;

namespace {

const double kOmega = units::mhz(10.0);

template <int D>
Operator<D> random_hermitian(std::mt19937_64& gen, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Operator<D> a;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = Complex(n(gen), n(gen));
  return Operator<D>(0.5 * (a + a.adjoint()));
}

}  // namespace

TEST_CASE("propagators are unitary for random Hamiltonians") {
  std::mt19937_64 gen(100);
  std::uniform_real_distribution<double> t(1e-10, 1e-6);
  int bad2 = 0, bad4 = 0;
  for (int i = 0; i < 10000; ++i) {
    const double dt = t(gen);
    if (unitarity_residual(propagate(random_hermitian<2>(gen, 1e8), dt)) > 1e-10) ++bad2;
    if (unitarity_residual(propagate(random_hermitian<4>(gen, 1e7), dt)) > 1e-10) ++bad4;
  }
  CHECK(bad2 == 0);
  CHECK(bad4 == 0);
}

TEST_CASE("random pulses keep states normalized and fidelities bounded") {
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> len(1, 12);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    Waveform w = Waveform::zeros(len(gen), 1e-9 * (1.0 + u(gen) * 0.5 + 0.5), kOmega);
    for (std::size_t l = 0; l < w.size(); ++l) w.ux[l] = u(gen), w.uy[l] = u(gen);
    const ErrorPoint e{0.5 * kOmega * u(gen), 0.5 * u(gen), 0.3 * u(gen)};
    const Op2 U = waveform_propagator(w, e);
    if (unitarity_residual(U) > 1e-10) ++failures;
    const auto out = QuantumState::basis(2, 0).evolved(U);
    if (std::abs(out.vector().norm() - 1.0) > 1e-12) ++failures;
    const double f = transfer_fidelity(w, e);
    if (!(f >= 0.0 && f <= 1.0)) ++failures;
    const double pop = expectation_population(out, 0) + expectation_population(out, 1);
    if (std::abs(pop - 1.0) > 1e-12) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("mixed-state evolution preserves trace and positivity") {
  std::mt19937_64 gen(102);
  int failures = 0;
  for (int i = 0; i < 10000; ++i) {
    const Op4 h = random_hermitian<4>(gen, 1.0);
    const Op4 r = random_hermitian<4>(gen, 1.0);
    ComplexMatrix rho = r * r.adjoint();
    rho /= rho.trace().real();
    const auto s = QuantumState::density(rho).evolved(propagate(h, 0.7));
    const ComplexMatrix m = s.density_matrix();
    if (std::abs(m.trace().real() - 1.0) > 1e-12) ++failures;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
    if (es.eigenvalues().minCoeff() < -1e-12) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("directional derivatives agree with finite differences on random pulses") {
  std::mt19937_64 gen(103);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  for (int trial = 0; trial < 10; ++trial) {
    Waveform w = Waveform::zeros(20, 1e-9, kOmega);
    for (std::size_t l = 0; l < 20; ++l) w.ux[l] = u(gen), w.uy[l] = u(gen);
    const double h0 = 1e-4 / w.duration(), h1 = 1e-4;
    const Op2 fd0 = (controlled_propagator(w, {h0, 0, 0}) - controlled_propagator(w, {-h0, 0, 0})) / (2 * h0);
    const Op2 fd1 = (controlled_propagator(w, {0, h1, 0}) - controlled_propagator(w, {0, -h1, 0})) / (2 * h1);
    const Op2 d0 = directional_derivative(w, Channel::Detuning, Channel::Detuning, 1);
    const Op2 d1 = directional_derivative(w, Channel::Rabi, Channel::Rabi, 1);
    CHECK((d0 - fd0).norm() <= 1e-5 * fd0.norm());
    CHECK((d1 - fd1).norm() <= 1e-5 * fd1.norm());
  }
}

TEST_CASE("seeded runs are byte-identical") {
  auto rb_text = [] {
    RbSuiteOptions o;
    o.lengths = {2, 4, 8};
    o.n_gate_sets = 3;
    o.n_paulis = 2;
    o.seed = 17;
    NoiseEnsemble ens;
    ens.detuning.sigma = units::mhz(0.3);
    ens.rabi.gamma = 1e5;
    ens.omega = kOmega;
    ens.sample_count = 20;
    ens.seed = 4;
    std::ostringstream os;
    write_rb_csv(os, simulate_rb(generate_rb_suite(o), PulseFamily::square(kOmega), ens));
    return os.str();
  };
  CHECK(rb_text() == rb_text());

  auto dd_text = [] {
    SensingConfig cfg;
    cfg.family = PulseFamily::square(kOmega);
    cfg.repeats = 4;
    cfg.err = {0.08 * kOmega, 0.08, 0.0};
    cfg.spins = {NuclearSpin::from_components(units::khz(305.0), units::khz(136.0))};
    cfg.tau_axis = tau_axis_for_frequencies(0.5e6, 1.5e6, 31);
    std::ostringstream os;
    write_spectrum_csv(os, simulate_spectrum(cfg));
    return os.str();
  };
  CHECK(dd_text() == dd_text());

  auto roc_text = [] {
    RocConfig cfg;
    cfg.slices = 40;
    cfg.max_iters = 10;
    cfg.seed = 3;
    std::ostringstream os;
    write_waveform(os, optimize(cfg).waveform);
    return os.str();
  };
  CHECK(roc_text() == roc_text());

  auto fid_text = [] {
    NoiseEnsemble ens;
    ens.detuning.sigma = units::mhz(0.226);
    ens.sample_count = 500;
    ens.seed = 8;
    std::ostringstream os;
    os.precision(17);
    for (double p : simulate_fid(ens, units::mhz(2.0), time_grid(0.0, 1e-6, 11)).population) os << p << '\n';
    return os.str();
  };
  CHECK(fid_text() == fid_text());
}

TEST_CASE("thread count does not change results") {
  SensingConfig cfg;
  cfg.family = PulseFamily::square(kOmega);
  cfg.repeats = 3;
  cfg.spins = {NuclearSpin::from_components(units::khz(305.0), units::khz(136.0))};
  cfg.tau_axis = tau_axis_for_frequencies(0.5e6, 1.5e6, 17);
  cfg.threads = 1;
  const auto a = simulate_spectrum(cfg).population;
  cfg.threads = 3;
  const auto b = simulate_spectrum(cfg).population;
  CHECK(a == b);
}
