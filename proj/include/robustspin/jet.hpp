#pragma once

#include <vector>

#include "robustspin/quantum.hpp"

namespace robustspin {

// Truncated polynomial algebra over 2x2 matrices.
//
// An element is sum_k C_k m_k where the monomials m_k = x0^a x1^b t are
// built from two noise variables (total degree <= order) and an optional
// tangent tag t in {1, t_1, ..., t_T} with t_i t_j = 0. Products drop any
// monomial outside the set, which is the same bookkeeping as exponentiating
// a block upper-triangular auxiliary matrix: the coefficient of x0^a x1^b
// in exp(G) is (1/(a! b!)) d^{a+b} exp(G) / dx0^a dx1^b at zero.
class JetAlgebra {
 public:
  struct Monomial {
    int a = 0;        // power of x0
    int b = 0;        // power of x1
    int tangent = 0;  // 0 for none, 1..T
  };
  struct Term {
    int lhs, rhs, out;
  };

  JetAlgebra(int order, int tangents = 0);

  int order() const { return order_; }
  int tangents() const { return tangents_; }
  int size() const { return static_cast<int>(basis_.size()); }
  const Monomial& monomial(int k) const { return basis_[k]; }
  // -1 when the monomial is truncated away.
  int index(int a, int b, int tangent = 0) const;
  const std::vector<Term>& products() const { return products_; }

 private:
  int order_;
  int tangents_;
  std::vector<Monomial> basis_;
  std::vector<Term> products_;
};

using Jet = std::vector<Op2>;

Jet jet_zero(const JetAlgebra& alg);
Jet jet_identity(const JetAlgebra& alg);
Jet jet_multiply(const JetAlgebra& alg, const Jet& lhs, const Jet& rhs);
// Exponential by scaling and squaring with an adaptive Taylor core.
Jet jet_exp(const JetAlgebra& alg, const Jet& g);

// Coefficients of tangent `t` (or the untangented part for t = 0),
// re-indexed into the tangent-free algebra `target`.
Jet jet_project(const JetAlgebra& from, const Jet& j, int t, const JetAlgebra& target);

}  // namespace robustspin
