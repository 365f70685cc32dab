#include "robustspin/fit.hpp"

#include <cmath>
#include <limits>

#include "robustspin/errors.hpp"

namespace robustspin::fit {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

double step_for(double x, double lo, double hi) {
  double scale = std::abs(x);
  if (std::isfinite(lo) && std::isfinite(hi)) scale = std::max(scale, 1e-3 * (hi - lo));
  if (scale == 0.0) scale = 1.0;
  return 1e-6 * scale;
}

}  // namespace

Eigen::MatrixXd numeric_jacobian(const Residuals& f, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  const Eigen::VectorXd r0 = f(x);
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = step_for(x(j), lower(j), upper(j));
    Eigen::VectorXd xp = x, xm = x;
    xp(j) = std::min(x(j) + h, upper(j));
    xm(j) = std::max(x(j) - h, lower(j));
    const double span = xp(j) - xm(j);
    if (span <= 0.0) {
      jac.col(j).setZero();
      continue;
    }
    jac.col(j) = (f(xp) - f(xm)) / span;
  }
  return jac;
}

Result least_squares(const Residuals& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                     const Eigen::VectorXd& upper, const Options& opt) {
  require(x0.size() == lower.size() && x0.size() == upper.size(), "least_squares: bound sizes differ");
  require((lower.array() <= upper.array()).all(), "least_squares: lower bound above upper bound");
  Result res;
  Eigen::VectorXd x = clamp(x0, lower, upper);
  Eigen::VectorXd r = f(x);
  require(r.allFinite(), "least_squares: residuals not finite at the initial point");
  double rss = r.squaredNorm();
  double lambda = opt.lambda0;

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    if (rss == 0.0) {
      res.converged = true;
      break;
    }
    const Eigen::MatrixXd jac = numeric_jacobian(f, x, lower, upper);
    const Eigen::MatrixXd a = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    bool accepted = false;
    bool done = false;
    // a parameter the data cannot see still gets damped on the scale of the others
    const double floor = std::max(1e-12 * a.diagonal().maxCoeff(), 1e-300);
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index k = 0; k < a.rows(); ++k)
        damped(k, k) += lambda * std::max(a(k, k), floor);
      const Eigen::VectorXd delta = damped.ldlt().solve(-g);
      const Eigen::VectorXd xn = clamp(x + delta, lower, upper);
      const Eigen::VectorXd rn = f(xn);
      const double rss_new = rn.allFinite() ? rn.squaredNorm() : std::numeric_limits<double>::infinity();
      if (rss_new < rss) {
        const double drop = (rss - rss_new) / std::max(rss, 1e-300);
        const double step = (xn - x).norm() / std::max(x.norm(), 1e-300);
        x = xn;
        r = rn;
        rss = rss_new;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        if (drop < opt.ftol || step < opt.xtol) done = true;
      } else {
        lambda *= 4.0;
        if (lambda > 1e16 || (xn - x).norm() < opt.xtol * std::max(x.norm(), 1e-300)) {
          // no descent direction left: at a (bounded) minimum
          done = true;
          break;
        }
      }
    }
    if (done) {
      res.converged = true;
      ++it;
      break;
    }
  }

  res.params = x;
  res.rss = rss;
  res.iterations = it;

  const Eigen::MatrixXd jac = numeric_jacobian(f, x, lower, upper);
  const Eigen::MatrixXd a = jac.transpose() * jac;
  const auto n = static_cast<double>(r.size());
  const auto p = static_cast<double>(x.size());
  const double s2 = n > p ? rss / (n - p) : 0.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible() || a.norm() == 0.0) {
    res.jacobian_singular = true;
    res.covariance = Eigen::MatrixXd::Constant(x.size(), x.size(), std::numeric_limits<double>::infinity());
  } else {
    res.covariance = s2 * lu.inverse();
  }
  res.std_errors = res.covariance.diagonal().cwiseAbs().cwiseSqrt();
  return res;
}

}  // namespace robustspin::fit
