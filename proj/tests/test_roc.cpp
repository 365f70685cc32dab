#include <catch_amalgamated.hpp>

#include <random>

#include "robustspin/errors.hpp"
#include "robustspin/landscape.hpp"
#include "robustspin/roc.hpp"
#include "robustspin/units.hpp"

using namespace robustspin;
using Catch::Approx;
using units::kPi;

namespace {

const double kOmega = units::mhz(10.0);

Waveform random_pulse(std::size_t n, std::uint64_t seed, double amp = 0.8) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-amp, amp);
  Waveform w = Waveform::zeros(n, 1e-9, kOmega);
  for (std::size_t l = 0; l < n; ++l) w.ux[l] = u(gen), w.uy[l] = u(gen);
  return w;
}

Op2 prop(const Waveform& w, double d0, double d1) { return controlled_propagator(w, {d0, d1, 0.0}); }

double rel(const Op2& a, const Op2& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("controlled propagator delegates to the pulse model") {
  const Waveform zero = Waveform::zeros(30, 1e-9, kOmega);
  CHECK((controlled_propagator(zero, {}) - Op2::Identity()).norm() < 1e-14);
  const Waveform sq = square_pulse(kPi, 0.0, kOmega);
  PulseSequence s;
  s.pulse(sq);
  const ErrorPoint e{0.07 * kOmega, 0.04, 0.0};
  CHECK((controlled_propagator(sq, e) - sequence_propagator(s, e)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(unitarity_residual(controlled_propagator(random_pulse(80, 3), e)) < 1e-10);
}

TEST_CASE("first-order detuning derivative matches central differences") {
  const Waveform sq = square_pulse(kPi, 0.0, kOmega);
  const double h = 1e-6 * kOmega;
  const Op2 fd = (prop(sq, h, 0.0) - prop(sq, -h, 0.0)) / (2 * h);
  CHECK(rel(directional_derivative(sq, Channel::Detuning, Channel::Detuning, 1), fd) < 1e-6);
  const double hr = 1e-6;
  const Op2 fdr = (prop(sq, 0.0, hr) - prop(sq, 0.0, -hr)) / (2 * hr);
  CHECK(rel(directional_derivative(sq, Channel::Rabi, Channel::Rabi, 1), fdr) < 1e-6);
}

TEST_CASE("second-order derivatives match five-point stencils") {
  const Waveform w = random_pulse(20, 17);
  const double T = w.duration();
  const double h0 = 0.01 / T, h1 = 0.01;
  auto stencil = [](const Op2& m2, const Op2& m1, const Op2& z, const Op2& p1, const Op2& p2, double h) {
    return Op2((-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) / (12.0 * h * h));
  };
  const Op2 z = prop(w, 0.0, 0.0);
  const Op2 d00 = stencil(prop(w, -2 * h0, 0), prop(w, -h0, 0), z, prop(w, h0, 0), prop(w, 2 * h0, 0), h0);
  CHECK(rel(directional_derivative(w, Channel::Detuning, Channel::Detuning, 2), d00) < 1e-5);
  const Op2 d11 = stencil(prop(w, 0, -2 * h1), prop(w, 0, -h1), z, prop(w, 0, h1), prop(w, 0, 2 * h1), h1);
  CHECK(rel(directional_derivative(w, Channel::Rabi, Channel::Rabi, 2), d11) < 1e-5);
  // mixed: product of two fourth-order first-derivative stencils
  const std::pair<int, double> wts[] = {{-2, 1.0}, {-1, -8.0}, {1, 8.0}, {2, -1.0}};
  Op2 d01 = Op2::Zero();
  for (const auto& [i, wi] : wts)
    for (const auto& [j, wj] : wts) d01 += wi * wj * prop(w, i * h0, j * h1);
  d01 /= 144.0 * h0 * h1;
  CHECK(rel(directional_derivative(w, Channel::Detuning, Channel::Rabi, 2), d01) < 1e-5);
  CHECK(rel(directional_derivative(w, Channel::Rabi, Channel::Detuning, 2), d01) < 1e-5);
}

TEST_CASE("directional derivative edge cases") {
  Waveform empty;
  empty.dt = 1e-9;
  empty.omega_max = kOmega;
  CHECK(directional_derivative(empty, Channel::Detuning, Channel::Detuning, 1).norm() == 0.0);
  CHECK_THROWS_AS(directional_derivative(square_pulse(kPi, 0, kOmega), Channel::Rabi, Channel::Rabi, 3),
                  InvalidArgument);
}

TEST_CASE("first-order detuning derivative equals the toggling-frame integral") {
  // dU/d delta0 = -i U(T) int_0^T U(t)^dag S_z U(t) dt, integrated by composite Simpson
  const Waveform w = random_pulse(40, 23);
  const int sub = 16;
  Op2 acc = Op2::Zero();
  Op2 u = Op2::Identity();
  for (std::size_t l = 0; l < w.size(); ++l) {
    const Op2 h = kOmega * (w.ux[l] * spin::sx() + w.uy[l] * spin::sy());
    const double step = w.dt / sub;
    for (int k = 0; k <= sub; ++k) {
      const Op2 ut = k == 0 ? u : Op2(propagate(h, k * step) * u);
      const double c = (k == 0 || k == sub) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      acc += c * step / 3.0 * (ut.adjoint() * spin::sz() * ut);
    }
    u = propagate(h, w.dt) * u;
  }
  const Op2 expect = -kI * u * acc;
  const Op2 d1 = directional_derivative(w, Channel::Detuning, Channel::Detuning, 1);
  CHECK(rel(d1, expect) < 1e-6);
  CHECK(d1.norm() == Approx(acc.norm()).epsilon(1e-6));
}

TEST_CASE("fitness special cases") {
  RocConfig cfg;
  cfg.slices = 50;
  cfg.mu1 = {};
  cfg.mu2 = {};
  CHECK(fitness(Waveform::zeros(50, 1e-9, kOmega), cfg) == Approx(0.0).margin(1e-15));
  CHECK(fitness(square_pulse(kPi, 0.0, kOmega), cfg) == Approx(1.0).margin(1e-12));

  const Waveform w = random_pulse(50, 5);
  const double bare = fitness(w, cfg);
  for (int k = 0; k < 4; ++k) {
    RocConfig pen = cfg;
    (k < 2 ? pen.mu1 : pen.mu2)[k % 2][(k + 1) % 2] = 0.5;
    pen.mu1[k % 2][k % 2] = 0.2;
    CHECK(fitness(w, pen) <= bare);
  }
  cfg.slices = 49;
  CHECK_THROWS_AS(fitness(w, cfg), InvalidArgument);
}

TEST_CASE("analytic gradient matches finite differences") {
  RocConfig cfg;
  cfg.slices = 20;
  cfg.mu1 = {{{1.0, 0.4}, {0.4, 1.0}}};
  cfg.mu2 = {{{0.3, 0.3}, {0.3, 0.3}}};
  cfg.smooth_weight = 0.01;
  const Waveform w = random_pulse(20, 31, 0.6);
  const auto g = fitness_gradient(w, cfg);
  CHECK(g.fitness == Approx(fitness(w, cfg)).margin(1e-13));
  double scale = 0.0;
  for (std::size_t l = 0; l < 20; ++l) scale = std::max({scale, std::abs(g.gx[l]), std::abs(g.gy[l])});
  const double h = 1e-6;
  for (std::size_t l = 0; l < 20; ++l) {
    for (int c = 0; c < 2; ++c) {
      Waveform p = w, m = w;
      (c ? p.uy : p.ux)[l] += h;
      (c ? m.uy : m.ux)[l] -= h;
      const double fd = (fitness(p, cfg) - fitness(m, cfg)) / (2 * h);
      const double an = c ? g.gy[l] : g.gx[l];
      CHECK(std::abs(an - fd) <= 1e-5 * scale);
    }
  }
}

TEST_CASE("optimizer contract") {
  RocConfig id;
  id.target = Op2::Identity();
  id.slices = 30;
  id.mu1 = {};
  id.mu2 = {};
  const auto r0 = optimize(id, Waveform::zeros(30, 1e-9, kOmega));
  CHECK(r0.converged);
  CHECK(r0.iterations == 0);
  CHECK(r0.final_fitness == 1.0);

  RocConfig cfg;
  cfg.slices = 80;
  cfg.max_iters = 40;
  cfg.seed = 9;
  const auto a = optimize(cfg);
  const auto b = optimize(cfg);
  for (std::size_t k = 1; k < a.fitness_trace.size(); ++k) CHECK(a.fitness_trace[k] >= a.fitness_trace[k - 1]);
  CHECK(a.final_fitness > a.fitness_trace.front());
  CHECK(a.fitness_trace == b.fitness_trace);
  CHECK(a.waveform.ux == b.waveform.ux);
  CHECK(a.waveform.uy == b.waveform.uy);
  for (std::size_t l = 0; l < a.waveform.size(); ++l)
    CHECK(std::hypot(a.waveform.ux[l], a.waveform.uy[l]) <= 1.0 + 1e-12);

  RocConfig g = cfg;
  g.direction = SearchDirection::Gradient;
  const auto c = optimize(g);
  for (std::size_t k = 1; k < c.fitness_trace.size(); ++k) CHECK(c.fitness_trace[k] >= c.fitness_trace[k - 1]);

  RocConfig bad;
  bad.m_max = 3;
  CHECK_THROWS_AS(optimize(bad), InvalidArgument);
}

TEST_CASE("clamped ends stay at zero") {
  RocConfig cfg;
  cfg.slices = 60;
  cfg.max_iters = 20;
  cfg.clamp_ends = true;
  cfg.smooth_weight = 1e-3;
  const auto r = optimize(cfg);
  CHECK(r.waveform.ux.front() == 0.0);
  CHECK(r.waveform.uy.back() == 0.0);
}

TEST_CASE("shipped robust pi pulse flattens the detuning response") {
  const Waveform roc = load_waveform(ROBUSTSPIN_DATA_DIR "/roc_pi.txt");
  const Waveform sq = square_pulse(kPi, 0.0, kOmega);
  // curvature from a least-squares parabola through 9 points on +-0.02 Omega
  auto curvature = [](const Waveform& w) {
    double sx2 = 0, sx4 = 0, sy = 0, sx2y = 0;
    const int n = 9;
    for (int k = 0; k < n; ++k) {
      const double x = (-1.0 + 2.0 * k / (n - 1)) * 0.02 * kOmega;
      const double y = transfer_fidelity(w, {x, 0.0, 0.0});
      sx2 += x * x, sx4 += x * x * x * x, sy += y, sx2y += x * x * y;
    }
    // fit y = c + a x^2 (odd terms vanish on a symmetric grid)
    const double a = (n * sx2y - sx2 * sy) / (n * sx4 - sx2 * sx2);
    return 2.0 * a;
  };
  CHECK(transfer_fidelity(roc, {}) >= 0.9999);
  CHECK(std::abs(curvature(roc)) * 10.0 <= std::abs(curvature(sq)));
}
