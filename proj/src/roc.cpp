#include "robustspin/roc.hpp"

#include <cmath>
#include <deque>

#include "robustspin/errors.hpp"
#include "robustspin/rng.hpp"

namespace robustspin {

void RocConfig::validate() const {
  require(slices >= 2, "roc: need at least 2 slices");
  require(dt > 0.0, "roc: dt must be positive");
  require(omega_max > 0.0, "roc: omega_max must be positive");
  require(epsilon1 >= 0.0 && epsilon2 >= 0.0, "roc: noise scales must be >= 0");
  require(m_max == 1 || m_max == 2, "roc: m_max must be 1 or 2");
  for (const auto& row : mu1)
    for (double w : row) require(w >= 0.0, "roc: weights must be >= 0");
  for (const auto& row : mu2)
    for (double w : row) require(w >= 0.0, "roc: weights must be >= 0");
  require(fitness_goal <= 1.0, "roc: fitness_goal must be <= 1");
  require(max_iters >= 0, "roc: max_iters must be >= 0");
  require(step_init > 0.0, "roc: step_init must be positive");
  require(smooth_weight >= 0.0, "roc: smooth_weight must be >= 0");
  require(unitarity_residual(target) <= 1e-10, "roc: target must be unitary");
}

Op2 controlled_propagator(const Waveform& u, const ErrorPoint& err) {
  u.validate();
  err.validate();
  return waveform_propagator(u, err, 0.0);
}

namespace {

Jet slice_generator(const JetAlgebra& alg, double ux, double uy, double omega, double dt, double eps1,
                    double eps2) {
  Jet g = jet_zero(alg);
  const Op2 sx = spin::sx();
  const Op2 sy = spin::sy();
  const Op2 hc = omega * (ux * sx + uy * sy);
  const Complex f = -kI * dt;
  g[alg.index(0, 0)] = f * hc;
  if (alg.order() >= 1) {
    g[alg.index(1, 0)] = f * eps1 * spin::sz();
    g[alg.index(0, 1)] = f * eps2 * hc;
  }
  if (alg.tangents() >= 2) {
    g[alg.index(0, 0, 1)] = f * omega * sx;
    g[alg.index(0, 0, 2)] = f * omega * sy;
    if (alg.order() >= 1) {
      g[alg.index(0, 1, 1)] = f * eps2 * omega * sx;
      g[alg.index(0, 1, 2)] = f * eps2 * omega * sy;
    }
  }
  return g;
}

Jet value_jet(const Waveform& u, const JetAlgebra& alg, double eps1, double eps2) {
  Jet c = jet_identity(alg);
  for (std::size_t l = 0; l < u.size(); ++l) {
    const Jet v = jet_exp(alg, slice_generator(alg, u.ux[l], u.uy[l], u.omega_max, u.dt, eps1, eps2));
    c = jet_multiply(alg, v, c);
  }
  return c;
}

struct PenaltyTerm {
  double weight;
  std::vector<std::pair<int, double>> parts;  // (jet index, coefficient)
};

std::vector<PenaltyTerm> penalty_terms(const JetAlgebra& alg, const RocConfig& cfg) {
  std::vector<PenaltyTerm> terms;
  const int e[2] = {alg.index(1, 0), alg.index(0, 1)};
  for (int i1 = 0; i1 < 2; ++i1) {
    for (int i2 = 0; i2 < 2; ++i2) {
      const double w = cfg.mu1[i1][i2];
      if (w == 0.0) continue;
      if (i1 == i2) terms.push_back({w, {{e[i1], 1.0}}});
      else terms.push_back({w, {{e[0], 1.0}, {e[1], 1.0}}});
    }
  }
  if (cfg.m_max >= 2) {
    for (int i1 = 0; i1 < 2; ++i1) {
      for (int i2 = 0; i2 < 2; ++i2) {
        const double w = cfg.mu2[i1][i2];
        if (w == 0.0) continue;
        if (i1 == i2) terms.push_back({w, {{alg.index(i1 == 0 ? 2 : 0, i1 == 0 ? 0 : 2), 2.0}}});
        else terms.push_back({w, {{alg.index(1, 1), 1.0}}});
      }
    }
  }
  return terms;
}

double smoothness(const Waveform& u) {
  double s = 0.0;
  for (std::size_t l = 0; l + 1 < u.size(); ++l) {
    const double dx = u.ux[l + 1] - u.ux[l];
    const double dy = u.uy[l + 1] - u.uy[l];
    s += dx * dx + dy * dy;
  }
  return s;
}

// Fitness from the final jet; fills dPhi/dC_k seeds when requested so that
// dPhi = Re sum_k Tr(seed_k^dag dC_k).
double assemble(const JetAlgebra& alg, const Jet& c, const RocConfig& cfg, Jet* seeds) {
  const Complex tau = (c[0] * cfg.target.adjoint()).trace();
  double phi = std::norm(tau) / 4.0;
  if (seeds) {
    *seeds = jet_zero(alg);
    (*seeds)[0] = 0.5 * tau * cfg.target;
  }
  for (const auto& term : penalty_terms(alg, cfg)) {
    Op2 d = Op2::Zero();
    for (const auto& [k, coef] : term.parts) d += coef * c[k];
    phi -= term.weight * d.squaredNorm() / 2.0;
    if (seeds)
      for (const auto& [k, coef] : term.parts) (*seeds)[k] -= term.weight * coef * d;
  }
  return phi;
}

double inner(const Jet& seeds, const Jet& d) {
  double s = 0.0;
  for (std::size_t k = 0; k < seeds.size(); ++k) s += (seeds[k].adjoint() * d[k]).trace().real();
  return s;
}

void project(Waveform& u, bool clamp_ends) {
  for (std::size_t l = 0; l < u.size(); ++l) {
    const double r = std::hypot(u.ux[l], u.uy[l]);
    if (r > 1.0) {
      u.ux[l] /= r;
      u.uy[l] /= r;
    }
  }
  if (clamp_ends) {
    u.ux.front() = u.uy.front() = 0.0;
    u.ux.back() = u.uy.back() = 0.0;
  }
}

void check_waveform(const Waveform& u, const RocConfig& cfg) {
  u.validate();
  require(u.size() == cfg.slices, "roc: waveform slice count does not match config");
}

}  // namespace

Jet noise_jet(const Waveform& u, double eps1, double eps2, int order) {
  u.validate();
  const JetAlgebra alg(order);
  return value_jet(u, alg, eps1, eps2);
}

Op2 directional_derivative(const Waveform& u, Channel i1, Channel i2, int order) {
  require(order == 1 || order == 2, "directional_derivative: order must be 1 or 2");
  if (u.duration() == 0.0) return Op2::Zero();
  const JetAlgebra alg(order);
  const Jet c = noise_jet(u, 1.0, 1.0, order);
  const int a = static_cast<int>(i1);
  const int b = static_cast<int>(i2);
  if (order == 1) {
    if (a == b) return c[alg.index(a == 0 ? 1 : 0, a == 0 ? 0 : 1)];
    return c[alg.index(1, 0)] + c[alg.index(0, 1)];
  }
  if (a == b) return 2.0 * c[alg.index(a == 0 ? 2 : 0, a == 0 ? 0 : 2)];
  return c[alg.index(1, 1)];
}

double fitness(const Waveform& u, const RocConfig& cfg) {
  check_waveform(u, cfg);
  const JetAlgebra alg(cfg.m_max);
  const Jet c = value_jet(u, alg, cfg.epsilon1, cfg.epsilon2);
  return assemble(alg, c, cfg, nullptr) - cfg.smooth_weight * smoothness(u);
}

FitnessGradient fitness_gradient(const Waveform& u, const RocConfig& cfg) {
  check_waveform(u, cfg);
  const JetAlgebra tan_alg(cfg.m_max, 2);
  const JetAlgebra alg(cfg.m_max);
  const std::size_t n = u.size();

  std::vector<Jet> v(n), tx(n), ty(n);
  for (std::size_t l = 0; l < n; ++l) {
    const Jet j = jet_exp(tan_alg, slice_generator(tan_alg, u.ux[l], u.uy[l], u.omega_max, u.dt,
                                                   cfg.epsilon1, cfg.epsilon2));
    v[l] = jet_project(tan_alg, j, 0, alg);
    tx[l] = jet_project(tan_alg, j, 1, alg);
    ty[l] = jet_project(tan_alg, j, 2, alg);
  }
  std::vector<Jet> prefix(n), suffix(n);
  prefix[0] = v[0];
  for (std::size_t l = 1; l < n; ++l) prefix[l] = jet_multiply(alg, v[l], prefix[l - 1]);
  suffix[n - 1] = v[n - 1];
  for (std::size_t l = n - 1; l-- > 0;) suffix[l] = jet_multiply(alg, suffix[l + 1], v[l]);

  FitnessGradient out;
  Jet seeds;
  out.fitness = assemble(alg, prefix[n - 1], cfg, &seeds) - cfg.smooth_weight * smoothness(u);
  out.gx.assign(n, 0.0);
  out.gy.assign(n, 0.0);
  const Jet id = jet_identity(alg);
  for (std::size_t l = 0; l < n; ++l) {
    const Jet& left = l + 1 < n ? suffix[l + 1] : id;
    const Jet& right = l > 0 ? prefix[l - 1] : id;
    out.gx[l] = inner(seeds, jet_multiply(alg, jet_multiply(alg, left, tx[l]), right));
    out.gy[l] = inner(seeds, jet_multiply(alg, jet_multiply(alg, left, ty[l]), right));
  }
  if (cfg.smooth_weight > 0.0) {
    for (std::size_t l = 0; l < n; ++l) {
      double dx = 0.0, dy = 0.0;
      if (l > 0) {
        dx += u.ux[l] - u.ux[l - 1];
        dy += u.uy[l] - u.uy[l - 1];
      }
      if (l + 1 < n) {
        dx -= u.ux[l + 1] - u.ux[l];
        dy -= u.uy[l + 1] - u.uy[l];
      }
      out.gx[l] -= 2.0 * cfg.smooth_weight * dx;
      out.gy[l] -= 2.0 * cfg.smooth_weight * dy;
    }
  }
  if (cfg.clamp_ends) {
    out.gx.front() = out.gy.front() = 0.0;
    out.gx.back() = out.gy.back() = 0.0;
  }
  return out;
}

Waveform random_waveform(const RocConfig& cfg) {
  Waveform u = Waveform::zeros(cfg.slices, cfg.dt, cfg.omega_max);
  Rng rng(cfg.seed);
  for (std::size_t l = 0; l < cfg.slices; ++l) {
    u.ux[l] = cfg.init_amplitude * (2.0 * rng.uniform() - 1.0);
    u.uy[l] = cfg.init_amplitude * (2.0 * rng.uniform() - 1.0);
  }
  project(u, cfg.clamp_ends);
  return u;
}

namespace {

using Vec = std::vector<double>;

Vec flatten(const Vec& x, const Vec& y) {
  Vec out(x);
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

struct Pair {
  Vec s, y;
  double rho;
};

// Two-loop recursion for the ascent direction H g, H approximating the
// inverse Hessian of -fitness.
Vec lbfgs_direction(const std::deque<Pair>& mem, const Vec& g) {
  Vec q = g;
  std::vector<double> alpha(mem.size());
  for (std::size_t i = mem.size(); i-- > 0;) {
    alpha[i] = mem[i].rho * dot(mem[i].s, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] -= alpha[i] * mem[i].y[k];
  }
  if (!mem.empty()) {
    const auto& last = mem.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (auto& v : q) v *= gamma;
  }
  for (std::size_t i = 0; i < mem.size(); ++i) {
    const double beta = mem[i].rho * dot(mem[i].y, q);
    for (std::size_t k = 0; k < q.size(); ++k) q[k] += mem[i].s[k] * (alpha[i] - beta);
  }
  return q;
}

}  // namespace

RocResult optimize(const RocConfig& cfg, std::optional<Waveform> initial) {
  cfg.validate();
  Waveform u = initial ? *initial : random_waveform(cfg);
  require(u.size() == cfg.slices, "optimize: initial waveform slice count does not match config");
  u.dt = cfg.dt;
  u.omega_max = cfg.omega_max;
  project(u, cfg.clamp_ends);
  u.validate();

  const std::size_t n = u.size();
  RocResult res;
  FitnessGradient fg = fitness_gradient(u, cfg);
  res.fitness_trace.push_back(fg.fitness);

  std::deque<Pair> memory;
  double alpha_prev = cfg.step_init;
  int stall = 0;
  int it = 0;
  for (; it < cfg.max_iters; ++it) {
    if (fg.fitness >= cfg.fitness_goal) {
      res.converged = true;
      break;
    }
    const Vec g = flatten(fg.gx, fg.gy);
    Vec d = g;
    bool quasi_newton = cfg.direction == SearchDirection::Lbfgs && !memory.empty();
    if (quasi_newton) {
      d = lbfgs_direction(memory, g);
      if (dot(d, g) <= 0.0) {
        memory.clear();
        d = g;
        quasi_newton = false;
      }
    }

    double alpha = quasi_newton ? 1.0 : alpha_prev;
    bool accepted = false;
    Waveform trial = u;
    double trial_phi = 0.0;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t l = 0; l < n; ++l) {
        trial.ux[l] = u.ux[l] + alpha * d[l];
        trial.uy[l] = u.uy[l] + alpha * d[n + l];
      }
      project(trial, cfg.clamp_ends);
      trial_phi = fitness(trial, cfg);
      if (trial_phi > fg.fitness) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (!memory.empty()) {
        memory.clear();
        continue;
      }
      break;
    }
    if (!quasi_newton) alpha_prev = 2.0 * alpha;

    FitnessGradient next = fitness_gradient(trial, cfg);
    Pair p;
    p.s.resize(2 * n);
    p.y.resize(2 * n);
    for (std::size_t l = 0; l < n; ++l) {
      p.s[l] = trial.ux[l] - u.ux[l];
      p.s[n + l] = trial.uy[l] - u.uy[l];
      p.y[l] = fg.gx[l] - next.gx[l];
      p.y[n + l] = fg.gy[l] - next.gy[l];
    }
    const double sy = dot(p.s, p.y);
    if (sy > 1e-16 * std::sqrt(dot(p.s, p.s) * dot(p.y, p.y)) && sy > 0.0) {
      p.rho = 1.0 / sy;
      memory.push_back(std::move(p));
      if (static_cast<int>(memory.size()) > cfg.lbfgs_memory) memory.pop_front();
    }

    const double gain = next.fitness - fg.fitness;
    u = std::move(trial);
    fg = std::move(next);
    res.fitness_trace.push_back(fg.fitness);
    stall = gain < cfg.stall_tolerance ? stall + 1 : 0;
    if (stall >= cfg.stall_window) break;
  }
  if (fg.fitness >= cfg.fitness_goal) res.converged = true;
  res.iterations = it;
  res.final_fitness = fg.fitness;
  res.waveform = std::move(u);
  return res;
}

}  // namespace robustspin
