#pragma once

// Reference solutions for validation: a fixed-step fifth-order propagator
// for the exact twisted system, marched in the fast phase variable with
// run-doubling verification, and an adaptive-quadrature evaluator for the
// exact-integral pre-schemes.

#include <cmath>
#include <cstddef>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "oscint/calculus.hpp"
#include "oscint/core.hpp"
#include "oscint/integrator.hpp"
#include "oscint/quadrature.hpp"

namespace oscint {

// ============================================================
// Twisted-system propagator
// ============================================================

template <class JP>
struct ReferenceResult {
  std::vector<State<JP>> samples;  // one per requested sample phase
  bool converged = false;          // run-doubling agreement reached
  double err_est = 0.0;            // extrapolated error of the finer run
  long nodes_per_period = 0;       // resolution of the returned run
};

namespace detail {

/// One 6-stage fifth-order explicit step (Dormand-Prince coefficients) of
/// size h in the phase variable, starting at phase wh + fr.
template <class JP, class Rhs>
[[nodiscard]] State<JP> dp5_step(const State<JP>& y, long wh, double fr, double h,
                                 Rhs&& rhs) {
  const State<JP> k1 = rhs(y, wh, fr);
  State<JP> t2 = y;
  t2.axpy(h * (1.0 / 5.0), k1);
  const State<JP> k2 = rhs(t2, wh, fr + h / 5.0);
  State<JP> t3 = y;
  t3.axpy(h * (3.0 / 40.0), k1);
  t3.axpy(h * (9.0 / 40.0), k2);
  const State<JP> k3 = rhs(t3, wh, fr + 3.0 * h / 10.0);
  State<JP> t4 = y;
  t4.axpy(h * (44.0 / 45.0), k1);
  t4.axpy(h * (-56.0 / 15.0), k2);
  t4.axpy(h * (32.0 / 9.0), k3);
  const State<JP> k4 = rhs(t4, wh, fr + 4.0 * h / 5.0);
  State<JP> t5 = y;
  t5.axpy(h * (19372.0 / 6561.0), k1);
  t5.axpy(h * (-25360.0 / 2187.0), k2);
  t5.axpy(h * (64448.0 / 6561.0), k3);
  t5.axpy(h * (-212.0 / 729.0), k4);
  const State<JP> k5 = rhs(t5, wh, fr + 8.0 * h / 9.0);
  State<JP> t6 = y;
  t6.axpy(h * (9017.0 / 3168.0), k1);
  t6.axpy(h * (-355.0 / 33.0), k2);
  t6.axpy(h * (46732.0 / 5247.0), k3);
  t6.axpy(h * (49.0 / 176.0), k4);
  t6.axpy(h * (-5103.0 / 18656.0), k5);
  const State<JP> k6 = rhs(t6, wh, fr + h);
  State<JP> out = y;
  out.axpy(h * (35.0 / 384.0), k1);
  out.axpy(h * (500.0 / 1113.0), k3);
  out.axpy(h * (125.0 / 192.0), k4);
  out.axpy(h * (-2187.0 / 6784.0), k5);
  out.axpy(h * (11.0 / 84.0), k6);
  return out;
}

}  // namespace detail

/// Propagate the twisted system through the requested sample phases (in
/// fast periods, ascending, >= 0) with fixed steps of 1/npp periods. The
/// whole period count is carried as an integer so rotation angles stay
/// accurate over arbitrarily many periods; samples falling inside a step
/// are produced by a branched partial step that leaves the march intact.
template <class JP, class NL>
[[nodiscard]] std::vector<State<JP>> reference_march(
    const State<JP>& w0, double t0, const SpectralBasis& basis, double c, NL& f,
    const std::vector<double>& sample_phases, long npp) {
  if (npp < 2) throw std::invalid_argument("reference_march: need npp >= 2");
  for (std::size_t i = 0; i < sample_phases.size(); ++i) {
    if (!(sample_phases[i] >= 0.0))
      throw std::invalid_argument("reference_march: negative sample phase");
    if (i > 0 && sample_phases[i] < sample_phases[i - 1])
      throw std::invalid_argument("reference_march: sample phases must ascend");
  }

  const double T = 2.0 * pi / (c * c);
  const auto rhs = [&](const State<JP>& y, long wh, double fr) {
    // fr may reach into the next period mid-step; reduce for the rotation
    const double frm = (fr >= 1.0) ? fr - 1.0 : fr;
    const double ang = 2.0 * pi * frm;
    State<JP> out = jac_apply(y, basis, c);
    const State<JP> wr = rotate_fast(y, ang);
    const State<JP> fw = cal_f(wr, t0 + (static_cast<double>(wh) + fr) * T, f);
    out -= apply_bc_inv(rotate_fast(fw, -ang), basis, c);
    out *= T;
    return out;
  };

  std::vector<State<JP>> out;
  out.reserve(sample_phases.size());
  const double h = 1.0 / static_cast<double>(npp);
  long wh = 0;
  double fr = 0.0;
  State<JP> y = w0;
  std::size_t ti = 0;
  while (ti < sample_phases.size()) {
    const double target = sample_phases[ti];
    const double snap = 1e-10 * std::max(1.0, target);
    const double remaining = (target - static_cast<double>(wh)) - fr;
    if (remaining <= snap) {
      out.push_back(y);
      ++ti;
      continue;
    }
    if (remaining < h - snap) {
      out.push_back(detail::dp5_step(y, wh, fr, remaining, rhs));
      ++ti;
      continue;
    }
    y = detail::dp5_step(y, wh, fr, h, rhs);
    fr += h;
    if (fr >= 1.0) {
      fr -= 1.0;
      wh += 1;
    }
  }
  return out;
}

/// Run-doubling wrapper: march at npp and 2 npp, accept when the worst
/// sample difference is at or below tol, otherwise keep doubling up to the
/// cap. The error estimate divides by 2^5 - 1, the fifth-order Richardson
/// factor.
template <class JP, class NL>
[[nodiscard]] ReferenceResult<JP> reference_run(const State<JP>& w0, double t0,
                                                const SpectralBasis& basis, double c,
                                                NL& f,
                                                const std::vector<double>& sample_phases,
                                                double tol, long npp0 = 64,
                                                long npp_cap = 8192) {
  ReferenceResult<JP> res;
  long npp = npp0;
  std::vector<State<JP>> prev = reference_march(w0, t0, basis, c, f, sample_phases, npp);
  for (;;) {
    std::vector<State<JP>> next =
        reference_march(w0, t0, basis, c, f, sample_phases, 2 * npp);
    double diff = 0.0;
    for (std::size_t i = 0; i < prev.size(); ++i)
      diff = std::max(diff, norm(next[i] - prev[i]));
    res.samples = std::move(next);
    res.nodes_per_period = 2 * npp;
    res.err_est = diff / 31.0;
    if (diff <= tol) {
      res.converged = true;
      return res;
    }
    if (2 * npp >= npp_cap) return res;
    prev = std::move(res.samples);
    res.samples.clear();
    npp *= 2;
  }
}

// ============================================================
// Pre-scheme evaluator
// ============================================================

/// Evaluates the exact-integral iterates bound to one initial state: level
/// 1 applies the semigroup and subtracts the exact oscillatory integral of
/// the frozen state; each further level feeds the previous iterate through
/// the integrand. All integrals run on adaptive panel-doubling quadrature
/// with prefix caching, so repeated queries at increasing times pay only
/// for the new interval.
template <class JP, class NL>
class PreSchemeOracle {
 public:
  struct Result {
    State<JP> value;
    bool converged = true;
  };

  PreSchemeOracle(State<JP> w0, double t0, SpectralBasis basis, double c, NL f,
                  int max_level = 3)
      : w0_(std::move(w0)), t0_(t0), basis_(std::move(basis)), c_(c),
        f_(std::move(f)), period_(2.0 * pi / (c * c)),
        cache_(static_cast<std::size_t>(max_level) + 1) {
    if (max_level < 1) throw std::invalid_argument("PreSchemeOracle: max_level >= 1");
  }

  [[nodiscard]] Result eval(int level, double z) {
    if (level < 1 || level >= static_cast<int>(cache_.size()))
      throw std::invalid_argument("PreSchemeOracle: level out of range");
    if (!(z >= 0.0)) throw std::domain_error("PreSchemeOracle: need z >= 0");
    ok_ = true;
    State<JP> v = value(level, z);
    return {std::move(v), ok_};
  }

 private:
  [[nodiscard]] State<JP> value(int level, double z) {
    if (z == 0.0) return w0_;
    const State<JP> p = apply_bc_inv(prefix(level, z), basis_, c_);
    if (level == 1) return semigroup_jac(w0_, z, basis_, c_) - p;
    return semigroup_jac(w0_ - p, z, basis_, c_);
  }

  [[nodiscard]] State<JP> integrand(int level, double s) {
    const double ang = 2.0 * pi * (s / period_);
    if (level == 1) {
      const State<JP> wr = rotate_fast(w0_, ang);
      const State<JP> fw = cal_f(wr, t0_ + s, f_);
      return rotate_fast(fw, -ang);
    }
    const State<JP> inner = value(level - 1, s);
    const State<JP> wr = rotate_fast(inner, ang);
    const State<JP> fw = cal_f(wr, t0_ + s, f_);
    return semigroup_jac(rotate_fast(fw, -ang), -s, basis_, c_);
  }

  /// Running integral of the level integrand from 0 to s, extended from
  /// the nearest cached prefix below s.
  [[nodiscard]] State<JP> prefix(int level, double s) {
    auto& cache = cache_[static_cast<std::size_t>(level)];
    double s0 = 0.0;
    State<JP> base(w0_.size());
    if (auto it = cache.upper_bound(s); it != cache.begin()) {
      --it;
      s0 = it->first;
      base = it->second;
    }
    if (s - s0 <= 1e-18 * std::max(1.0, s)) return base;
    // deeper levels see quadrature jitter from the level below, so their
    // panel doubling cannot settle as tightly
    const double tol = (level == 1) ? 1e-14 : 1e-13;
    const auto res = detail::adaptive_gauss(
        [this, level](double ss) { return integrand(level, ss); }, s0, s, tol, 24);
    if (!res.converged) ok_ = false;
    State<JP> val = base + res.value;
    cache.emplace(s, val);
    return val;
  }

  State<JP> w0_;
  double t0_;
  SpectralBasis basis_;
  double c_;
  NL f_;
  double period_;
  std::vector<std::map<double, State<JP>>> cache_;
  bool ok_ = true;
};

}  // namespace oscint
