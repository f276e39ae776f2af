#pragma once

// The family of oscillation-free time integrators. A step of size
// tau = m T (T the fast period 2 pi / c^2) propagates the twisted state
// w = (u, v) by the level-l scheme: the twisted semigroup plus a composite
// quadrature of the twisted nonlinearity. The fast phase sigma in [0, 1)
// is kept separate from the whole period count throughout, so the rotation
// angles 2 pi sigma never degrade as c grows.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>

#include "oscint/calculus.hpp"
#include "oscint/core.hpp"
#include "oscint/quadrature.hpp"

namespace oscint {

// ============================================================
// Phase-split time
// ============================================================

/// A nonnegative time measured in fast periods, split into the whole
/// period count and the fractional phase in [0, 1).
struct PhaseSplit {
  long whole = 0;
  double frac = 0.0;

  [[nodiscard]] double periods() const { return static_cast<double>(whole) + frac; }
  [[nodiscard]] double absolute(double T) const { return periods() * T; }
};

/// Split a period count q >= 0 into whole + frac, snapping to the nearest
/// integer when q sits within a few ulps of one, so that step sizes meant
/// as whole numbers of periods are treated exactly.
[[nodiscard]] inline PhaseSplit split_periods(double q) {
  if (!(q >= 0.0)) throw std::domain_error("split_periods: need a nonnegative time");
  double fl = std::floor(q);
  double frac = q - fl;
  const double snap =
      32.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(q));
  if (frac <= snap) {
    frac = 0.0;
  } else if (1.0 - frac <= snap) {
    fl += 1.0;
    frac = 0.0;
  }
  return {static_cast<long>(fl), frac};
}

[[nodiscard]] inline PhaseSplit split_phase(double z, double T) {
  if (!(T > 0.0)) throw std::domain_error("split_phase: need T > 0");
  return split_periods(z / T);
}

/// Add a fractional phase df in [0, 1) with carry.
[[nodiscard]] inline PhaseSplit phase_add(PhaseSplit a, double df) {
  if (!(df >= 0.0 && df < 1.0))
    throw std::domain_error("phase_add: increment must lie in [0, 1)");
  double f = a.frac + df;
  long w = a.whole;
  if (f >= 1.0) {
    f -= 1.0;
    w += 1;
  }
  return {w, f};
}

// ============================================================
// Scheme parameters
// ============================================================

struct SchemeParams {
  int order = 1;             // scheme level l
  int gram_degree = 1;       // M, degree of the slow compression rule
  int gauss_nodes = 8;       // N, per-period Gauss nodes for the fast phase
  double gamma = 0.5;        // geometric rate used for error-floor estimates
  double c = 10.0;           // scaling parameter
  int periods_per_step = 1;  // m, step size in fast periods

  [[nodiscard]] double period() const { return 2.0 * pi / (c * c); }
  [[nodiscard]] double tau() const { return periods_per_step * period(); }

  /// Default slow-rule degree for a level-l scheme: floor((l + 1) / 2)
  /// balances the slow quadrature against the scheme order.
  [[nodiscard]] static int default_gram_degree(int level) { return (level + 1) / 2; }

  void validate() const {
    if (order < 1 || order > 4)
      throw std::invalid_argument("SchemeParams: order must be in 1..4");
    if (gram_degree < 1) throw std::invalid_argument("SchemeParams: gram_degree < 1");
    if (gauss_nodes < 1 || gauss_nodes > 64)
      throw std::invalid_argument("SchemeParams: gauss_nodes must be in 1..64");
    if (!(gamma > 0.0 && gamma < 1.0))
      throw std::invalid_argument("SchemeParams: gamma must lie in (0, 1)");
    if (!(c >= 1.0)) throw std::invalid_argument("SchemeParams: c must be >= 1");
    if (periods_per_step < 1)
      throw std::invalid_argument("SchemeParams: periods_per_step < 1");
  }
};

struct StepDiagnostics {
  long f_evals = 0;   // nonlinearity evaluations in the last step
  int max_depth = 0;  // deepest scheme level reached by the recursion
};

// ============================================================
// Twisting of initial data
// ============================================================

/// Twisted initial state w0 = (phi0, phi0) - c^{-2} JJ Binv (phi1, phi1),
/// where phi1 is the initial velocity and JJ = diag(J, -J).
template <class JP>
[[nodiscard]] State<JP> initial_twist(const Block<typename JP::Coeff>& phi0,
                                      const Block<typename JP::Coeff>& phi1,
                                      const SpectralBasis& basis, double c) {
  if (phi0.size() != basis.size() || phi1.size() != basis.size())
    throw std::invalid_argument("initial_twist: size mismatch");
  State<JP> w(phi0.size());
  const double c2 = 1.0 / (c * c);
  for (std::size_t k = 0; k < phi0.size(); ++k) {
    const auto bp = bc_inv_symbol(basis.eigenvalue(k), c) * phi1[k];
    const auto jb = JP::apply_j(bp);
    w.u[k] = phi0[k] - c2 * jb;
    w.v[k] = phi0[k] + c2 * jb;
  }
  return w;
}

/// Solution value phi = (u + v) / 2; exact whenever the elapsed time is a
/// whole number of fast periods.
template <class JP>
[[nodiscard]] Block<typename JP::Coeff> untwist_phi(const State<JP>& w) {
  Block<typename JP::Coeff> phi(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) phi[k] = 0.5 * (w.u[k] + w.v[k]);
  return phi;
}

/// Velocity recovery phi' = (c^2 / 2) J B (u - v), the exact inverse of the
/// initial twist.
template <class JP>
[[nodiscard]] Block<typename JP::Coeff> untwist_phi_dot(const State<JP>& w,
                                                        const SpectralBasis& basis,
                                                        double c) {
  if (w.size() != basis.size())
    throw std::invalid_argument("untwist_phi_dot: size mismatch");
  Block<typename JP::Coeff> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double bsym = std::sqrt(basis.eigenvalue(k) + c * c) / c;
    const auto d = bsym * (w.u[k] - w.v[k]);
    out[k] = (0.5 * c * c) * JP::apply_j(d);
  }
  return out;
}

// ============================================================
// Twisted nonlinearity
// ============================================================

/// Lift of the nonlinearity to the two-component state:
/// calF(W, t) = (J f(psi, t), -J f(psi, t)) with psi = (U + V) / 2. The
/// component signs are fixed by requiring that the twisted flow, with the
/// quadrature term subtracted, untwists to a solution of the original
/// second-order equation; a unit test integrates that equation directly to
/// pin this down.
template <class JP, class F>
[[nodiscard]] State<JP> cal_f(const State<JP>& w, double t, F& f) {
  Block<typename JP::Coeff> psi(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) psi[k] = 0.5 * (w.u[k] + w.v[k]);
  const Block<typename JP::Coeff> fv = f(psi, t);
  if (fv.size() != w.size())
    throw std::invalid_argument("cal_f: nonlinearity changed the size");
  State<JP> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const auto jf = JP::apply_j(fv[k]);
    out.u[k] = jf;
    out.v[k] = -jf;
  }
  return out;
}

// ============================================================
// Scheme engine
// ============================================================

/// Evaluates the level-l schemes. The nonlinearity NL is a callable
/// Block(const Block&, double t); it is shared by every level. All inner
/// times are carried as PhaseSplit values, so fast phases stay exact.
template <class JP, class NL>
class SchemeEngine {
 public:
  using C = typename JP::Coeff;

  SchemeEngine(SchemeParams params, SpectralBasis basis, NL f)
      : p_(params), basis_(std::move(basis)), f_(std::move(f)),
        gauss_(gauss_legendre(params.gauss_nodes)), slow_(gauss_legendre(6)) {
    p_.validate();
  }

  [[nodiscard]] const SchemeParams& params() const { return p_; }
  [[nodiscard]] const SpectralBasis& basis() const { return basis_; }
  [[nodiscard]] StepDiagnostics last_diagnostics() const { return last_diag_; }

  /// One full step of tau = m T at the configured level.
  [[nodiscard]] State<JP> step(const State<JP>& w, double t0) {
    Workspace ws;
    const PhaseSplit z{p_.periods_per_step, 0.0};
    State<JP> out = psi(p_.order, w, z, t0, ws);
    last_diag_ = ws.diag;
    return out;
  }

  /// Level-l scheme value at an arbitrary nonnegative z < 1.
  [[nodiscard]] State<JP> scheme(int level, const State<JP>& w, double z, double t0) {
    Workspace ws;
    State<JP> out = psi(level, w, split_phase(z, p_.period()), t0, ws);
    last_diag_ = ws.diag;
    return out;
  }

 private:
  struct Workspace {
    std::map<std::tuple<int, long, std::uint64_t>, State<JP>> memo;
    // smooth-extension caches for the compressed slow rule, keyed by the
    // raw bits of the slow offset and fast phase
    std::map<std::tuple<int, std::uint64_t, std::uint64_t>, State<JP>> lift_memo;
    std::map<std::pair<int, std::uint64_t>, State<JP>> avg_memo;
    std::map<std::pair<int, std::uint64_t>, State<JP>> prefix_memo;
    StepDiagnostics diag;
    int depth = 0;
  };

  [[nodiscard]] const GramRule& gram_for(int m) {
    auto it = gram_cache_.find(m);
    if (it == gram_cache_.end())
      it = gram_cache_.emplace(m, gram_rule(p_.gram_degree, m)).first;
    return it->second;
  }

  State<JP> psi(int level, const State<JP>& w, PhaseSplit z, double t0, Workspace& ws) {
    if (level < 1) throw std::invalid_argument("scheme level must be >= 1");
    if (z.whole == 0 && z.frac == 0.0) return w;
    if (!(z.absolute(p_.period()) < 1.0))
      throw std::domain_error("scheme step z must be below 1, got z = " +
                              std::to_string(z.absolute(p_.period())));
    ws.depth = std::max(ws.depth, level);
    ws.diag.max_depth = std::max(ws.diag.max_depth, ws.depth);

    const auto key = std::make_tuple(level, z.whole, std::bit_cast<std::uint64_t>(z.frac));
    if (auto it = ws.memo.find(key); it != ws.memo.end()) return it->second;

    const State<JP> q = quad_sum(level, w, z, t0, ws);
    State<JP> out;
    if (level == 1) {
      // first level: quadrature terms stay outside the semigroup
      out = semigroup_jac(w, z.absolute(p_.period()), basis_, p_.c) - q;
    } else {
      out = semigroup_jac(w - q, z.absolute(p_.period()), basis_, p_.c);
    }
    ws.memo.emplace(key, out);
    return out;
  }

  /// Composite quadrature of the level integrand over [0, z]: per-period
  /// Gauss in the fast phase; the whole-period sum is exact for few
  /// periods and compressed by the grid rule otherwise; a scaled Gauss
  /// rule covers the partial tail period.
  State<JP> quad_sum(int level, const State<JP>& w, PhaseSplit z, double t0,
                     Workspace& ws) {
    const double T = p_.period();
    State<JP> acc(w.size());
    const long mz = z.whole;

    if (mz >= 1) {
      if (mz <= p_.gram_degree) {
        for (long j = 0; j < mz; ++j) {
          const PhaseSplit rho{j, 0.0};
          for (std::size_t k = 0; k < gauss_.size(); ++k) {
            const double eta = 0.5 * (gauss_.nodes[k] + 1.0);
            acc.axpy(0.5 * T * gauss_.weights[k], eval_g(level, w, rho, eta, t0, ws));
          }
        }
      } else {
        const GramRule& gram = gram_for(static_cast<int>(mz));
        for (std::size_t i = 0; i < gram.size(); ++i) {
          // slow nodes live on the period starts 0, T, ..., (m_z - 1) T
          const double qi = 0.5 * (gram.nodes[i] + 1.0) * static_cast<double>(mz - 1);
          for (std::size_t k = 0; k < gauss_.size(); ++k) {
            const double eta = 0.5 * (gauss_.nodes[k] + 1.0);
            acc.axpy(0.25 * mz * T * gram.weights[i] * gauss_.weights[k],
                     smooth_g(level, w, qi * T, eta, t0, ws));
          }
        }
      }
    }

    if (z.frac > 0.0) {
      const PhaseSplit rho{mz, 0.0};
      for (std::size_t k = 0; k < gauss_.size(); ++k) {
        const double eta = 0.5 * (gauss_.nodes[k] + 1.0);
        acc.axpy(0.5 * z.frac * T * gauss_.weights[k],
                 eval_g(level, w, rho, z.frac * eta, t0, ws));
      }
    }
    return acc;
  }

  /// Quadrature integrand. Level 1 uses the frozen state w; higher levels
  /// evaluate the level below at the inner time and add the backward
  /// semigroup factor. Rotations use the fast phase sigma only; the slow
  /// offset rho feeds the time argument (and the semigroup at level >= 2).
  State<JP> eval_g(int level, const State<JP>& w, PhaseSplit rho, double sigma,
                   double t0, Workspace& ws) {
    const double T = p_.period();
    if (level == 1) {
      const double t_arg = t0 + (rho.periods() + sigma) * T;
      const State<JP> wr = rotate_fast(w, 2.0 * pi * sigma);
      ws.diag.f_evals += 1;
      const State<JP> fw = cal_f(wr, t_arg, f_);
      return apply_bc_inv(rotate_fast(fw, -2.0 * pi * sigma), basis_, p_.c);
    }
    const PhaseSplit zin = phase_add(rho, sigma);
    const int hold = ws.depth;
    const State<JP> inner = psi(level - 1, w, zin, t0, ws);
    ws.depth = hold;
    const double t_arg = t0 + zin.absolute(T);
    const State<JP> wr = rotate_fast(inner, 2.0 * pi * sigma);
    ws.diag.f_evals += 1;
    const State<JP> fw = cal_f(wr, t_arg, f_);
    const State<JP> fb = rotate_fast(fw, -2.0 * pi * sigma);
    return apply_bc_inv(semigroup_jac(fb, -zin.absolute(T), basis_, p_.c), basis_, p_.c);
  }

  /// Integrand for the compressed slow rule, whose nodes fall between
  /// period starts. The plain scheme value at such an offset carries a
  /// period-size ripple in its time argument, which would void the degree
  /// of the slow rule, so levels >= 2 draw the inner state from the
  /// two-scale lift: smooth in the slow offset and equal to the plain
  /// value whenever the slow offset is a whole number of periods.
  State<JP> smooth_g(int level, const State<JP>& w, double rho, double sigma,
                     double t0, Workspace& ws) {
    const double T = p_.period();
    const double t_arg = t0 + rho + sigma * T;
    State<JP> src;
    if (level == 1) {
      src = rotate_fast(w, 2.0 * pi * sigma);
    } else {
      const int hold = ws.depth;
      src = rotate_fast(lift(level - 1, w, rho, sigma, t0, ws), 2.0 * pi * sigma);
      ws.depth = hold;
    }
    ws.diag.f_evals += 1;
    const State<JP> fw = cal_f(src, t_arg, f_);
    const State<JP> fb = rotate_fast(fw, -2.0 * pi * sigma);
    if (level == 1) return apply_bc_inv(fb, basis_, p_.c);
    return apply_bc_inv(semigroup_jac(fb, -(rho + sigma * T), basis_, p_.c), basis_, p_.c);
  }

  /// Fast-phase average of the level integrand at slow offset rho.
  State<JP> phase_avg(int level, const State<JP>& w, double rho, double t0,
                      Workspace& ws) {
    const auto key = std::make_pair(level, std::bit_cast<std::uint64_t>(rho));
    if (auto it = ws.avg_memo.find(key); it != ws.avg_memo.end()) return it->second;
    State<JP> acc(w.size());
    for (std::size_t k = 0; k < gauss_.size(); ++k) {
      const double eta = 0.5 * (gauss_.nodes[k] + 1.0);
      acc.axpy(0.5 * gauss_.weights[k], smooth_g(level, w, rho, eta, t0, ws));
    }
    ws.avg_memo.emplace(key, acc);
    return acc;
  }

  /// Smooth extension of the cumulative per-period integrals: the running
  /// integral of the fast-phase average plus an endpoint correction that
  /// turns it into an interpolant of the period-start partial sums. The
  /// correction is the first Euler-Maclaurin boundary term; the residue is
  /// two powers of the period smaller than the sums themselves.
  State<JP> prefix_lift(int level, const State<JP>& w, double rho, double t0,
                        Workspace& ws) {
    State<JP> acc(w.size());
    if (rho <= 0.0) return acc;
    const auto key = std::make_pair(level, std::bit_cast<std::uint64_t>(rho));
    if (auto it = ws.prefix_memo.find(key); it != ws.prefix_memo.end()) return it->second;
    for (std::size_t i = 0; i < slow_.size(); ++i) {
      const double r = 0.5 * (slow_.nodes[i] + 1.0) * rho;
      acc.axpy(0.5 * rho * slow_.weights[i], phase_avg(level, w, r, t0, ws));
    }
    const double T = p_.period();
    acc.axpy(-0.5 * T, phase_avg(level, w, rho, t0, ws));
    acc.axpy(0.5 * T, phase_avg(level, w, 0.0, t0, ws));
    ws.prefix_memo.emplace(key, acc);
    return acc;
  }

  /// Two-scale value of the level-lam scheme at slow offset rho and fast
  /// phase sigma: prefix sums up to rho plus the fast tail to sigma. The
  /// two arguments move independently, so the value stays smooth in rho at
  /// fixed sigma while matching the plain scheme at whole periods.
  State<JP> lift(int lam, const State<JP>& w, double rho, double sigma,
                 double t0, Workspace& ws) {
    ws.depth = std::max(ws.depth, lam);
    ws.diag.max_depth = std::max(ws.diag.max_depth, ws.depth);
    const auto key = std::make_tuple(lam, std::bit_cast<std::uint64_t>(rho),
                                     std::bit_cast<std::uint64_t>(sigma));
    if (auto it = ws.lift_memo.find(key); it != ws.lift_memo.end()) return it->second;

    const double T = p_.period();
    State<JP> q = prefix_lift(lam, w, rho, t0, ws);
    if (sigma > 0.0) {
      for (std::size_t k = 0; k < gauss_.size(); ++k) {
        const double eta = 0.5 * (gauss_.nodes[k] + 1.0);
        q.axpy(0.5 * sigma * T * gauss_.weights[k],
               smooth_g(lam, w, rho, sigma * eta, t0, ws));
      }
    }
    State<JP> out;
    if (lam == 1) {
      out = semigroup_jac(w, rho + sigma * T, basis_, p_.c) - q;
    } else {
      out = semigroup_jac(w - q, rho + sigma * T, basis_, p_.c);
    }
    ws.lift_memo.emplace(key, out);
    return out;
  }

  SchemeParams p_;
  SpectralBasis basis_;
  NL f_;
  QuadratureRule gauss_;
  QuadratureRule slow_;
  std::map<int, GramRule> gram_cache_;
  StepDiagnostics last_diag_;
};

/// First-level scheme over a whole number of periods with the per-period
/// Gauss rule replaced by one periodic trapezoid sum. Valid only when the
/// nonlinearity is autonomous: the integrand is then exactly 1-periodic in
/// the fast phase and independent of the slow offset, so the whole
/// integral collapses to m T times one period average.
template <class JP, class NL>
[[nodiscard]] State<JP> psi1_autonomous_trapezoid(const State<JP>& w, int m, int n_nodes,
                                       double t0, const SpectralBasis& basis, double c,
                                       NL&& f) {
  if (m < 1) throw std::invalid_argument("psi1_autonomous_trapezoid: need m >= 1");
  if (n_nodes < 1) throw std::invalid_argument("psi1_autonomous_trapezoid: need n_nodes >= 1");
  const double T = 2.0 * pi / (c * c);
  State<JP> acc(w.size());
  for (int k = 0; k < n_nodes; ++k) {
    const double sigma = static_cast<double>(k) / n_nodes;
    const State<JP> wr = rotate_fast(w, 2.0 * pi * sigma);
    const State<JP> fw = cal_f(wr, t0 + sigma * T, f);
    acc.axpy(1.0 / n_nodes, apply_bc_inv(rotate_fast(fw, -2.0 * pi * sigma), basis, c));
  }
  return semigroup_jac(w, m * T, basis, c) - (m * T) * acc;
}

}  // namespace oscint
