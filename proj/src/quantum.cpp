#include "robustspin/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "robustspin/errors.hpp"

namespace robustspin {

namespace spin {

Op2 sx() {
  Op2 m;
  m << 0.0, 0.5, 0.5, 0.0;
  return m;
}

Op2 sy() {
  Op2 m;
  m << 0.0, -0.5 * kI, 0.5 * kI, 0.0;
  return m;
}

Op2 sz() {
  Op2 m;
  m << 0.5, 0.0, 0.0, -0.5;
  return m;
}

Op2 identity() { return Op2::Identity(); }

Op2 projector(int level) {
  require(level == 0 || level == 1, "projector level must be 0 or 1");
  Op2 m = Op2::Zero();
  m(level, level) = 1.0;
  return m;
}

}  // namespace spin

Op4 kron(const Op2& a, const Op2& b) {
  Op4 out;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return out;
}

Op4 electron_op(const Op2& s) { return kron(s, Op2::Identity()); }
Op4 nuclear_op(const Op2& i) { return kron(Op2::Identity(), i); }

double hermiticity_residual(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) return INFINITY;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

double unitarity_residual(const ComplexMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  const auto n = u.rows();
  return (u.adjoint() * u - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
}

bool is_hermitian(const ComplexMatrix& m, double tol) { return hermiticity_residual(m) <= tol; }

namespace {

void check_generator(const ComplexMatrix& h, double dt) {
  require(dt > 0.0 && std::isfinite(dt), "propagate: dt must be positive and finite");
  require(h.allFinite(), "propagate: Hamiltonian has non-finite entries");
  const double res = hermiticity_residual(h);
  if (res > 1e-10)
    throw InvalidArgument("propagate: Hamiltonian is not Hermitian (residual " +
                          std::to_string(res) + ")");
}

}  // namespace

Op2 su2_exp(const Op2& h, double dt) {
  const double c = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double hz = h(0, 0).real() - h(1, 1).real();
  const double hx = 2.0 * h(0, 1).real();
  const double hy = -2.0 * h(0, 1).imag();
  const double norm = std::sqrt(hx * hx + hy * hy + hz * hz);
  const double half = 0.5 * norm * dt;
  const double co = std::cos(half);
  // sin(|h| dt / 2) / |h|, finite as |h| -> 0
  const double s = norm * dt > 1e-8 ? std::sin(half) / norm
                                    : 0.5 * dt * (1.0 - half * half / 6.0);
  const Complex ph = std::polar(1.0, -c * dt);
  Op2 u;
  u(0, 0) = ph * Complex(co, -s * hz);
  u(1, 1) = ph * Complex(co, s * hz);
  u(0, 1) = ph * (-kI * s * Complex(hx, -hy));
  u(1, 0) = ph * (-kI * s * Complex(hx, hy));
  return u;
}

Op2 propagate(const Op2& h, double dt) {
  check_generator(h, dt);
  return su2_exp(h, dt);
}

ComplexMatrix propagate_eig(const ComplexMatrix& h, double dt) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("propagate: eigendecomposition failed");
  const auto& v = es.eigenvectors();
  ComplexVector phases(h.rows());
  for (Eigen::Index k = 0; k < h.rows(); ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * dt);
  return v * phases.asDiagonal() * v.adjoint();
}

Op4 propagate(const Op4& h, double dt) {
  check_generator(h, dt);
  Eigen::SelfAdjointEigenSolver<Op4> es(h);
  if (es.info() != Eigen::Success) throw NumericalError("propagate: eigendecomposition failed");
  const auto& v = es.eigenvectors();
  Eigen::Matrix<Complex, 4, 1> phases;
  for (int k = 0; k < 4; ++k) phases(k) = std::polar(1.0, -es.eigenvalues()(k) * dt);
  return v * phases.asDiagonal() * v.adjoint();
}

ComplexMatrix propagate(const ComplexMatrix& h, double dt) {
  require(h.rows() == h.cols(), "propagate: Hamiltonian must be square");
  if (h.rows() == 2) return propagate(Op2(h), dt);
  if (h.rows() == 4) return propagate(Op4(h), dt);
  check_generator(h, dt);
  return propagate_eig(h, dt);
}

QuantumState QuantumState::pure(ComplexVector psi) {
  require(psi.size() >= 1, "state: empty vector");
  require(std::abs(psi.norm() - 1.0) <= 1e-10, "state: pure vector must have unit norm");
  return QuantumState(std::move(psi));
}

QuantumState QuantumState::density(ComplexMatrix rho) {
  require(rho.rows() == rho.cols() && rho.rows() >= 1, "state: density matrix must be square");
  require(hermiticity_residual(rho) <= 1e-10, "state: density matrix must be Hermitian");
  require(std::abs(rho.trace() - 1.0) <= 1e-10, "state: density matrix must have unit trace");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(rho, Eigen::EigenvaluesOnly);
  require(es.eigenvalues().minCoeff() >= -1e-10, "state: density matrix must be positive semidefinite");
  return QuantumState(std::move(rho));
}

QuantumState QuantumState::basis(int dim, int level) {
  require(dim >= 1 && level >= 0 && level < dim, "state: basis level out of range");
  ComplexVector v = ComplexVector::Zero(dim);
  v(level) = 1.0;
  return QuantumState(std::move(v));
}

int QuantumState::dim() const {
  return is_pure() ? static_cast<int>(vector().size())
                   : static_cast<int>(std::get<ComplexMatrix>(data_).rows());
}

ComplexMatrix QuantumState::density_matrix() const {
  if (is_pure()) return vector() * vector().adjoint();
  return std::get<ComplexMatrix>(data_);
}

QuantumState QuantumState::evolved(const ComplexMatrix& u) const {
  require(u.rows() == dim() && u.cols() == dim(), "state: propagator dimension mismatch");
  if (is_pure()) return QuantumState(ComplexVector(u * vector()));
  return QuantumState(ComplexMatrix(u * std::get<ComplexMatrix>(data_) * u.adjoint()));
}

ComplexMatrix psd_sqrt(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
}

double state_fidelity(const QuantumState& rho, const QuantumState& rho0) {
  require(rho.dim() == rho0.dim(), "state_fidelity: dimension mismatch");
  double f = 0.0;
  if (rho.is_pure() && rho0.is_pure()) {
    f = std::norm(rho.vector().dot(rho0.vector()));
  } else if (rho.is_pure()) {
    f = (rho.vector().adjoint() * rho0.density_matrix() * rho.vector())(0).real();
  } else if (rho0.is_pure()) {
    f = (rho0.vector().adjoint() * rho.density_matrix() * rho0.vector())(0).real();
  } else {
    const ComplexMatrix s = psd_sqrt(rho.density_matrix());
    ComplexMatrix inner = s * rho0.density_matrix() * s;
    inner = 0.5 * (inner + inner.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(inner, Eigen::EigenvaluesOnly);
    const double tr = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    f = tr * tr;
  }
  return std::clamp(f, 0.0, 1.0);
}

double expectation_population(const QuantumState& state, int level) {
  require(level >= 0 && level < state.dim(), "expectation_population: level out of range");
  if (state.is_pure()) return std::norm(state.vector()(level));
  return std::clamp(state.density_matrix()(level, level).real(), 0.0, 1.0);
}

}  // namespace robustspin
