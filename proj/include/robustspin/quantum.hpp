#pragma once

#include <complex>
#include <variant>

#include <Eigen/Dense>

namespace robustspin {

using Complex = std::complex<double>;

template <int D>
using Operator = Eigen::Matrix<Complex, D, D>;
using Op2 = Operator<2>;
using Op4 = Operator<4>;

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr Complex kI{0.0, 1.0};

// Spin-1/2 operators on the {|0>, |1>} subspace, S_k = sigma_k / 2.
// |0> is the +1/2 eigenstate of S_z.
namespace spin {
Op2 sx();
Op2 sy();
Op2 sz();
Op2 identity();
// |level><level|
Op2 projector(int level);
}  // namespace spin

// Electron (first) and nuclear (second) factors of the 4-dim space,
// basis index = 2 * electron + nuclear.
Op4 electron_op(const Op2& s);
Op4 nuclear_op(const Op2& i);
Op4 kron(const Op2& a, const Op2& b);

double hermiticity_residual(const ComplexMatrix& m);
double unitarity_residual(const ComplexMatrix& u);
bool is_hermitian(const ComplexMatrix& m, double tol = 1e-10);

// exp(-i H dt). Dim 2 uses the closed SU(2) form, dim 4 a Hermitian
// eigendecomposition. Throws InvalidArgument on non-Hermitian H or dt <= 0.
Op2 propagate(const Op2& h, double dt);
Op4 propagate(const Op4& h, double dt);
ComplexMatrix propagate(const ComplexMatrix& h, double dt);

// Eigendecomposition route for any dimension; dt may be any real.
ComplexMatrix propagate_eig(const ComplexMatrix& h, double dt);

// Closed-form exp(-i H dt) for 2x2 Hermitian H without validation.
// Hot path for slice-by-slice propagation.
Op2 su2_exp(const Op2& h, double dt);

class QuantumState {
 public:
  static QuantumState pure(ComplexVector psi);
  static QuantumState density(ComplexMatrix rho);
  static QuantumState basis(int dim, int level);

  int dim() const;
  bool is_pure() const { return std::holds_alternative<ComplexVector>(data_); }
  const ComplexVector& vector() const { return std::get<ComplexVector>(data_); }
  ComplexMatrix density_matrix() const;

  QuantumState evolved(const ComplexMatrix& u) const;

 private:
  explicit QuantumState(std::variant<ComplexVector, ComplexMatrix> d) : data_(std::move(d)) {}
  std::variant<ComplexVector, ComplexMatrix> data_;
};

// Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.
double state_fidelity(const QuantumState& rho, const QuantumState& rho0);

double expectation_population(const QuantumState& state, int level);

// Principal square root of a Hermitian positive semidefinite matrix.
ComplexMatrix psd_sqrt(const ComplexMatrix& m);

}  // namespace robustspin
