#include <catch_amalgamated.hpp>

#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "robustspin/errors.hpp"
#include "robustspin/quantum.hpp"
#include "robustspin/units.hpp"

using namespace robustspin;
using Catch::Approx;

namespace {

template <int D>
Operator<D> random_hermitian(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Operator<D> a;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) a(i, j) = Complex(n(rng), n(rng));
  return 0.5 * (a + a.adjoint());
}

// exp(-iHt) by Eigen's Pade scaling-and-squaring, independent of our code
template <int D>
Operator<D> reference_exp(const Operator<D>& h, double t) {
  Eigen::MatrixXcd m = (-kI * t) * h;
  return m.exp();
}

}  // namespace

TEST_CASE("spin operators obey the su(2) algebra") {
  const Op2 c = spin::sx() * spin::sy() - spin::sy() * spin::sx();
  CHECK((c - kI * spin::sz()).norm() < 1e-15);
  CHECK(std::abs(spin::sz()(0, 0) - 0.5) < 1e-15);  // |0> is the +1/2 state
  CHECK((spin::projector(1) - Op2(Eigen::Vector2cd(0, 1).asDiagonal())).norm() < 1e-15);
}

TEST_CASE("zero generator propagates to identity") {
  CHECK((propagate(Op2(Op2::Zero()), 1.0) - Op2::Identity()).norm() < 1e-15);
  CHECK((propagate(Op4(Op4::Zero()), 1.0) - Op4::Identity()).norm() < 1e-15);
}

TEST_CASE("resonant x drive for pi/Omega flips the spin with phase -i") {
  const double omega = units::mhz(10.0);
  const Op2 u = propagate(Op2(omega * spin::sx()), units::ns(50.0));
  CHECK(std::norm(u(1, 0)) == Approx(1.0).margin(1e-12));
  CHECK(std::abs(u(1, 0) - Complex(0.0, -1.0)) < 1e-12);
}

TEST_CASE("closed-form SU(2) exponential matches Pade and eigendecomposition") {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 500; ++k) {
    const Op2 h = random_hermitian<2>(rng, 1e7);
    const double t = 1e-7 * (k % 13 + 1) / 13.0;
    const Op2 u = su2_exp(h, t);
    CHECK((u - reference_exp<2>(h, t)).cwiseAbs().maxCoeff() < 1e-11);
    CHECK((u - Op2(propagate_eig(h, t))).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("4-dim propagation matches the Pade reference") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 200; ++k) {
    const Op4 h = random_hermitian<4>(rng, 3e6);
    const Op4 u = propagate(h, 2e-7);
    CHECK((u - reference_exp<4>(h, 2e-7)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(unitarity_residual(u) < 1e-10);
  }
}

TEST_CASE("block-diagonal 4-dim generator exponentiates block by block") {
  const double wl = units::khz(546.0), ap = units::khz(305.0), ax = units::khz(136.0);
  const Op2 h0 = wl * spin::sz();
  const Op2 h1 = (wl + ap) * spin::sz() + ax * spin::sx();
  const Op4 h = kron(spin::projector(0), h0) + kron(spin::projector(1), h1);
  const double t = 3.7e-6;
  const Op4 u = propagate(h, t);
  Op4 expect = Op4::Zero();
  expect.block<2, 2>(0, 0) = propagate(h0, t);
  expect.block<2, 2>(2, 2) = propagate(h1, t);
  CHECK((u - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("time-independent propagation composes") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const Op2 h = random_hermitian<2>(rng, 5e7);
    const Op2 lhs = propagate(h, 3e-8 + 2e-8);
    const Op2 rhs = propagate(h, 2e-8) * propagate(h, 3e-8);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("propagate rejects non-Hermitian generators and bad durations") {
  Op2 h = spin::sx();
  h(0, 1) += 0.5;
  CHECK_THROWS_AS(propagate(h, 1.0), InvalidArgument);
  CHECK_THROWS_AS(propagate(Op2(spin::sx()), 0.0), InvalidArgument);
}

TEST_CASE("state fidelity reference values") {
  const auto s0 = QuantumState::basis(2, 0);
  const auto s1 = QuantumState::basis(2, 1);
  ComplexVector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  const auto p = QuantumState::pure(plus);
  CHECK(state_fidelity(s0, s0) == Approx(1.0).margin(1e-12));
  CHECK(state_fidelity(s0, s1) == Approx(0.0).margin(1e-12));
  CHECK(state_fidelity(s0, p) == Approx(0.5).margin(1e-12));
  // density-matrix path agrees with the pure-state shortcut
  CHECK(state_fidelity(QuantumState::density(s0.density_matrix()), QuantumState::density(p.density_matrix())) ==
        Approx(0.5).margin(1e-10));
}

TEST_CASE("mixed-state fidelity of commuting states is the classical overlap") {
  Eigen::MatrixXcd a = Eigen::Vector2cd(0.7, 0.3).asDiagonal();
  Eigen::MatrixXcd b = Eigen::Vector2cd(0.2, 0.8).asDiagonal();
  const double expect = std::pow(std::sqrt(0.7 * 0.2) + std::sqrt(0.3 * 0.8), 2);
  CHECK(state_fidelity(QuantumState::density(a), QuantumState::density(b)) == Approx(expect).margin(1e-12));
  CHECK(state_fidelity(QuantumState::density(b), QuantumState::density(a)) == Approx(expect).margin(1e-12));
}

TEST_CASE("populations") {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), Complex(0.0, -1.0 / std::sqrt(2.0));
  CHECK(expectation_population(QuantumState::basis(2, 0), 0) == Approx(1.0));
  CHECK(expectation_population(QuantumState::pure(v), 1) == Approx(0.5).margin(1e-12));
  const Op2 pi = propagate(Op2(units::mhz(10.0) * spin::sx()), units::ns(50.0));
  CHECK(expectation_population(QuantumState::basis(2, 0).evolved(pi), 1) == Approx(1.0).margin(1e-12));
}

TEST_CASE("state validation") {
  ComplexVector v(2);
  v << 1.0, 1.0;
  CHECK_THROWS_AS(QuantumState::pure(v), InvalidArgument);
  Eigen::MatrixXcd rho = Eigen::Vector2cd(1.2, -0.2).asDiagonal();
  CHECK_THROWS_AS(QuantumState::density(rho), InvalidArgument);
  Eigen::MatrixXcd nh(2, 2);
  nh << 0.5, 0.3, 0.1, 0.5;
  CHECK_THROWS_AS(QuantumState::density(nh), InvalidArgument);
  CHECK_THROWS_AS(QuantumState::basis(2, 2), InvalidArgument);
}
