#pragma once

#include <functional>

#include <Eigen/Dense>

namespace robustspin::fit {

using Residuals = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Options {
  int max_iterations = 200;
  double ftol = 1e-15;   // relative decrease of the residual sum of squares
  double xtol = 1e-13;   // relative parameter step
  double lambda0 = 1e-3;
};

struct Result {
  Eigen::VectorXd params;
  Eigen::VectorXd std_errors;   // 1-sigma from s^2 (J^T J)^-1
  Eigen::MatrixXd covariance;
  double rss = 0.0;
  int iterations = 0;
  bool converged = false;
  bool jacobian_singular = false;
};

// Box-constrained Levenberg-Marquardt. Steps are projected onto
// [lower, upper]; the Jacobian is a central finite difference.
Result least_squares(const Residuals& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper, const Options& opt = {});

Eigen::MatrixXd numeric_jacobian(const Residuals& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lower, const Eigen::VectorXd& upper);

}  // namespace robustspin::fit
