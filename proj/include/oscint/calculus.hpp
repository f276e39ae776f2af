#pragma once

// Functional calculus for the diagonal operators built from L and the
// scaling parameter c: the frequency-shift symbol a_c, the bounded inverse
// symbol of B_c, the blockwise rotation generated by the skew structure,
// and the semigroup generated by the twisted linear part.

#include <cmath>
#include <stdexcept>
#include <string>

#include "oscint/core.hpp"

namespace oscint {

// ============================================================
// Scalar symbols
// ============================================================

namespace detail {
inline void check_symbol_args(double lambda, double c) {
  if (!(c > 0.0)) throw std::domain_error("symbol: c must be positive");
  if (!(lambda >= 0.0))
    throw std::domain_error("symbol: eigenvalue must be nonnegative, got " +
                            std::to_string(lambda));
}
}  // namespace detail

/// Symbol of B_c^{-1}: c / sqrt(lambda + c^2), in (0, 1].
[[nodiscard]] inline double bc_inv_symbol(double lambda, double c) {
  detail::check_symbol_args(lambda, c);
  return c / std::sqrt(lambda + c * c);
}

/// Symbol of A_c: c (sqrt(lambda + c^2) - c), evaluated in the
/// cancellation-free form c * lambda / (sqrt(lambda + c^2) + c).
/// Bounded by lambda / 2 uniformly in c; tends to lambda / 2 as c grows.
[[nodiscard]] inline double ac_symbol(double lambda, double c) {
  detail::check_symbol_args(lambda, c);
  return c * lambda / (std::sqrt(lambda + c * c) + c);
}

// ============================================================
// Diagonal operator application
// ============================================================

/// Apply the scalar symbol(lambda_k, c) multiplicatively to every mode of
/// both components. Symbol is any callable (double, double) -> double.
template <class JP, class Symbol>
[[nodiscard]] State<JP> apply_symbol(const State<JP>& w, const SpectralBasis& basis,
                                     Symbol&& symbol, double c) {
  if (w.size() != basis.size())
    throw std::invalid_argument("apply_symbol: state/basis size mismatch");
  State<JP> out = w;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double s = symbol(basis.eigenvalue(k), c);
    out.u[k] = s * out.u[k];
    out.v[k] = s * out.v[k];
  }
  return out;
}

template <class JP>
[[nodiscard]] State<JP> apply_bc_inv(const State<JP>& w, const SpectralBasis& basis,
                                     double c) {
  return apply_symbol(w, basis, [](double l, double cc) { return bc_inv_symbol(l, cc); }, c);
}

template <class JP>
[[nodiscard]] State<JP> apply_ac(const State<JP>& w, const SpectralBasis& basis,
                                 double c) {
  return apply_symbol(w, basis, [](double l, double cc) { return ac_symbol(l, cc); }, c);
}

// ============================================================
// Blockwise rotation e^{s JJ}, JJ = diag(J, -J)
// ============================================================

/// Rotate by angle s: u' = cos(s) u + sin(s) J u, v' = cos(s) v - sin(s) J v.
/// Exact isometry for every s; used with s = 2 pi sigma for the fast phase.
template <class JP>
[[nodiscard]] State<JP> rotate_fast(const State<JP>& w, double s) {
  const double cs = std::cos(s);
  const double sn = std::sin(s);
  State<JP> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    out.u[k] = cs * w.u[k] + sn * JP::apply_j(w.u[k]);
    out.v[k] = cs * w.v[k] - sn * JP::apply_j(w.v[k]);
  }
  return out;
}

// ============================================================
// Semigroup e^{t JJ A_c}
// ============================================================

/// Per-mode rotation by angle t * a_c(lambda_k): the u component rotates
/// forward, the v component backward. Isometry for every t.
template <class JP>
[[nodiscard]] State<JP> semigroup_jac(const State<JP>& w, double t,
                                      const SpectralBasis& basis, double c) {
  if (w.size() != basis.size())
    throw std::invalid_argument("semigroup_jac: state/basis size mismatch");
  State<JP> out(w.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double th = t * ac_symbol(basis.eigenvalue(k), c);
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    out.u[k] = cs * w.u[k] + sn * JP::apply_j(w.u[k]);
    out.v[k] = cs * w.v[k] - sn * JP::apply_j(w.v[k]);
  }
  return out;
}

/// Generator application JJ A_c w: u' = a_c(lambda_k) J u_k,
/// v' = -a_c(lambda_k) J v_k. Used by the reference propagator's RHS.
template <class JP>
[[nodiscard]] State<JP> jac_apply(const State<JP>& w, const SpectralBasis& basis,
                                  double c) {
  if (w.size() != basis.size())
    throw std::invalid_argument("jac_apply: state/basis size mismatch");
  State<JP> out(w.size());
  for (std::size_t k = 0; k < basis.size(); ++k) {
    const double a = ac_symbol(basis.eigenvalue(k), c);
    out.u[k] = a * JP::apply_j(w.u[k]);
    out.v[k] = -a * JP::apply_j(w.v[k]);
  }
  return out;
}

}  // namespace oscint
