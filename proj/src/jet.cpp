#include "robustspin/jet.hpp"

#include <cmath>

#include "robustspin/errors.hpp"

namespace robustspin {

JetAlgebra::JetAlgebra(int order, int tangents) : order_(order), tangents_(tangents) {
  require(order >= 0 && order <= 4, "jet: order must lie in [0, 4]");
  require(tangents >= 0, "jet: tangent count must be >= 0");
  for (int t = 0; t <= tangents; ++t)
    for (int deg = 0; deg <= order; ++deg)
      for (int a = deg; a >= 0; --a) basis_.push_back({a, deg - a, t});

  for (int i = 0; i < size(); ++i) {
    for (int j = 0; j < size(); ++j) {
      const auto& l = basis_[i];
      const auto& r = basis_[j];
      if (l.tangent != 0 && r.tangent != 0) continue;
      const int k = index(l.a + r.a, l.b + r.b, l.tangent + r.tangent);
      if (k >= 0) products_.push_back({i, j, k});
    }
  }
}

int JetAlgebra::index(int a, int b, int tangent) const {
  if (a < 0 || b < 0 || a + b > order_ || tangent < 0 || tangent > tangents_) return -1;
  const int per_tangent = (order_ + 1) * (order_ + 2) / 2;
  const int deg = a + b;
  // monomials of degree < deg come first, then a descending within deg
  return tangent * per_tangent + deg * (deg + 1) / 2 + (deg - a);
}

Jet jet_zero(const JetAlgebra& alg) { return Jet(alg.size(), Op2::Zero()); }

Jet jet_identity(const JetAlgebra& alg) {
  Jet j = jet_zero(alg);
  j[0] = Op2::Identity();
  return j;
}

Jet jet_multiply(const JetAlgebra& alg, const Jet& lhs, const Jet& rhs) {
  Jet out = jet_zero(alg);
  for (const auto& t : alg.products()) out[t.out].noalias() += lhs[t.lhs] * rhs[t.rhs];
  return out;
}

namespace {

double jet_norm(const Jet& j) {
  double s = 0.0;
  for (const auto& c : j) s += c.cwiseAbs().rowwise().sum().maxCoeff();
  return s;
}

}  // namespace

Jet jet_exp(const JetAlgebra& alg, const Jet& g) {
  // The l1 sum of coefficient norms is submultiplicative for this algebra.
  const double nrm = jet_norm(g);
  int squarings = 0;
  if (nrm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(nrm / 0.5)));
  const double scale = std::ldexp(1.0, -squarings);

  Jet x = g;
  for (auto& c : x) c *= scale;

  Jet sum = jet_identity(alg);
  Jet term = jet_identity(alg);
  for (int n = 1; n < 40; ++n) {
    term = jet_multiply(alg, term, x);
    for (auto& c : term) c /= static_cast<double>(n);
    for (int k = 0; k < alg.size(); ++k) sum[k] += term[k];
    if (jet_norm(term) <= 1e-18 * jet_norm(sum)) break;
  }
  for (int s = 0; s < squarings; ++s) sum = jet_multiply(alg, sum, sum);
  return sum;
}

Jet jet_project(const JetAlgebra& from, const Jet& j, int t, const JetAlgebra& target) {
  require(target.tangents() == 0 && target.order() == from.order(), "jet_project: incompatible algebras");
  Jet out = jet_zero(target);
  for (int k = 0; k < target.size(); ++k) {
    const auto& m = target.monomial(k);
    out[k] = j[from.index(m.a, m.b, t)];
  }
  return out;
}

}  // namespace robustspin
