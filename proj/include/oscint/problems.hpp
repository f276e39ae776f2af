#pragma once

// Concrete problem instances for the integrator: the cubic Klein-Gordon
// equation on the one-dimensional torus in a truncated Fourier basis, the
// rotating-potential toy system, and a free (zero nonlinearity) variant
// used by propagation tests. Each is packaged as (basis, nonlinearity,
// initial data) ready for twisting.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "oscint/core.hpp"

namespace oscint {

namespace detail {

/// In-place radix-2 transform. sign = -1 is the analysis direction
/// sum_m x_m e^{-2 pi i k m / n}; sign = +1 the unnormalized synthesis.
inline void fft_radix2(std::vector<Cplx>& x, int sign) {
  const std::size_t n = x.size();
  if (n < 2) return;
  if (n & (n - 1))
    throw std::invalid_argument("fft_radix2: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * pi / static_cast<double>(len);
    const Cplx wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      Cplx w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const Cplx a = x[i + k];
        const Cplx b = x[i + k + len / 2] * w;
        x[i + k] = a + b;
        x[i + k + len / 2] = a - b;
        w *= wl;
      }
    }
  }
}

/// Signed wavenumber of FFT slot j on an n-point grid.
[[nodiscard]] inline int fft_wavenumber(std::size_t j, std::size_t n) {
  return j < n / 2 ? static_cast<int>(j)
                   : static_cast<int>(j) - static_cast<int>(n);
}

}  // namespace detail

// ============================================================
// Nonlinearities
// ============================================================

/// Cubic nonlinearity |phi|^2 phi on the torus, evaluated pseudospectrally:
/// synthesize to the collocation grid, apply the cubic pointwise, analyze
/// back, then zero the top third of wavenumbers so the cubic's spectral
/// spill never aliases back into resolved modes.
class CubicTorusNL {
 public:
  explicit CubicTorusNL(int n_modes) : n_(n_modes), cutoff_(n_modes / 3) {
    if (n_modes < 4 || (n_modes & (n_modes - 1)))
      throw std::invalid_argument("CubicTorusNL: n_modes must be a power of two >= 4");
  }

  [[nodiscard]] Block<Cplx> operator()(const Block<Cplx>& phi_hat, double) const {
    const auto n = static_cast<std::size_t>(n_);
    if (phi_hat.size() != n)
      throw std::invalid_argument("CubicTorusNL: coefficient count mismatch");
    std::vector<Cplx> grid(n);
    for (std::size_t j = 0; j < n; ++j) grid[j] = phi_hat[j];
    detail::fft_radix2(grid, +1);
    for (auto& g : grid) {
      const double m2 = abs2(g);
      g = m2 * g;
    }
    detail::fft_radix2(grid, -1);
    Block<Cplx> out(n);
    for (std::size_t j = 0; j < n; ++j) {
      const int k = detail::fft_wavenumber(j, n);
      out[j] = std::abs(k) > cutoff_ ? Cplx(0.0, 0.0)
                                     : grid[j] / static_cast<double>(n_);
    }
    return out;
  }

 private:
  int n_;
  int cutoff_;
};

/// Rotating-frame gradient force -2 e^{-c^2 t J} grad V(e^{c^2 t J} phi)
/// for a radial polynomial potential V(q) = sum_j coeff[j] |q|^{2j}, acting
/// blockwise through J(a, b) = (b, -a). A radial V makes the composition
/// independent of t; the rotations are carried out anyway so that exactly
/// the stated form is what gets computed.
class RotatingODENL {
 public:
  RotatingODENL(std::vector<double> radial, double c)
      : radial_(std::move(radial)), c_(c) {
    if (radial_.empty())
      throw std::invalid_argument("RotatingODENL: empty potential");
  }

  [[nodiscard]] Block<PairCoeff> operator()(const Block<PairCoeff>& phi,
                                            double t) const {
    const double th = c_ * c_ * t;
    const double cs = std::cos(th);
    const double sn = std::sin(th);
    Block<PairCoeff> q(phi.size());
    double s = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
      q[k] = cs * phi[k] + sn * SymplecticJ::apply_j(phi[k]);
      s += abs2(q[k]);
    }
    double vp = 0.0;  // V'(s) at s = |q|^2, by Horner over the high powers
    for (std::size_t j = radial_.size(); j-- > 1;)
      vp = vp * s + static_cast<double>(j) * radial_[j];
    Block<PairCoeff> out(phi.size());
    for (std::size_t k = 0; k < phi.size(); ++k) {
      const PairCoeff g = (2.0 * vp) * q[k];
      out[k] = -2.0 * (cs * g - sn * SymplecticJ::apply_j(g));
    }
    return out;
  }

  [[nodiscard]] const std::vector<double>& potential() const { return radial_; }

 private:
  std::vector<double> radial_;
  double c_;
};

// ============================================================
// Problem packaging
// ============================================================

template <class JP>
struct Problem {
  using Coeff = typename JP::Coeff;
  using NL = std::function<Block<Coeff>(const Block<Coeff>&, double)>;

  SpectralBasis basis;
  NL f;
  Block<Coeff> phi0;
  Block<Coeff> phi0_prime;
  bool autonomous = true;
  std::string name;
};

/// Torus problem with lambda_k = k^2 in FFT slot order and a smooth real
/// bump as initial data; the velocity is an odd bump so both components of
/// the twist are exercised.
[[nodiscard]] inline Problem<ComplexJ> make_kg_problem(int n_modes) {
  CubicTorusNL nl(n_modes);
  const auto n = static_cast<std::size_t>(n_modes);
  std::vector<double> lam(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double k = detail::fft_wavenumber(j, n);
    lam[j] = k * k;
  }
  std::vector<Cplx> g0(n), g1(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double x = 2.0 * pi * static_cast<double>(m) / static_cast<double>(n);
    const double bump = std::exp(std::cos(x) - 1.0);
    g0[m] = 0.5 * bump;
    g1[m] = 0.25 * std::sin(x) * bump;
  }
  detail::fft_radix2(g0, -1);
  detail::fft_radix2(g1, -1);
  Problem<ComplexJ> p;
  p.basis = SpectralBasis(lam);
  p.f = std::move(nl);
  p.phi0 = Block<Cplx>(n);
  p.phi0_prime = Block<Cplx>(n);
  for (std::size_t j = 0; j < n; ++j) {
    p.phi0[j] = g0[j] / static_cast<double>(n_modes);
    p.phi0_prime[j] = g1[j] / static_cast<double>(n_modes);
  }
  p.autonomous = true;
  p.name = "kg";
  return p;
}

/// Rotating toy system in d pair-blocks. Initial data comes from phase
/// space values (q0, p0) of the standard first-order form: phi(0) = q0 and
/// phi'(0) = p0 - c^2 J q0, which is the time derivative of the
/// back-rotated trajectory at t = 0.
[[nodiscard]] inline Problem<SymplecticJ> make_ode_problem(
    int d, std::vector<double> radial, const std::vector<double>& q0,
    const std::vector<double>& p0, double c) {
  if (d < 1) throw std::invalid_argument("make_ode_problem: d must be >= 1");
  const auto n = static_cast<std::size_t>(d);
  if (q0.size() != 2 * n || p0.size() != 2 * n)
    throw std::invalid_argument("make_ode_problem: q0/p0 must have length 2 d");
  Problem<SymplecticJ> p;
  p.basis = SpectralBasis(std::vector<double>(n, 0.0));
  p.f = RotatingODENL(std::move(radial), c);
  p.phi0 = Block<PairCoeff>(n);
  p.phi0_prime = Block<PairCoeff>(n);
  const double c2 = c * c;
  for (std::size_t k = 0; k < n; ++k) {
    const PairCoeff q{q0[2 * k], q0[2 * k + 1]};
    const PairCoeff v{p0[2 * k], p0[2 * k + 1]};
    p.phi0[k] = q;
    p.phi0_prime[k] = v - c2 * SymplecticJ::apply_j(q);
  }
  p.autonomous = true;  // radial potential commutes with the rotations
  p.name = "ode";
  return p;
}

/// Zero nonlinearity on a k^2 spectrum with geometrically decaying smooth
/// initial data; exercises the pure twisted propagator.
[[nodiscard]] inline Problem<SymplecticJ> make_free_problem(int n_modes) {
  if (n_modes < 1)
    throw std::invalid_argument("make_free_problem: n_modes must be >= 1");
  const auto n = static_cast<std::size_t>(n_modes);
  std::vector<double> lam(n);
  for (std::size_t k = 0; k < n; ++k) lam[k] = static_cast<double>(k * k);
  Problem<SymplecticJ> p;
  p.basis = SpectralBasis(lam);
  p.f = [](const Block<PairCoeff>& phi, double) { return Block<PairCoeff>(phi.size()); };
  p.phi0 = Block<PairCoeff>(n);
  p.phi0_prime = Block<PairCoeff>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::pow(0.5, static_cast<double>(k));
    p.phi0[k] = PairCoeff{a, 0.0};
    p.phi0_prime[k] = PairCoeff{0.0, a};
  }
  p.autonomous = true;
  p.name = "free";
  return p;
}

// ============================================================
// Configuration entry point
// ============================================================

using ProblemVariant = std::variant<Problem<ComplexJ>, Problem<SymplecticJ>>;

/// Assemble a problem from its configuration block. c comes from the
/// scheme parameters so the rotating force and the twist agree on it.
[[nodiscard]] inline ProblemVariant build_problem(const nlohmann::json& spec,
                                                  double c) {
  if (!spec.is_object() || !spec.contains("kind"))
    throw std::invalid_argument("problem: configuration must name a kind");
  const std::string kind = spec.at("kind").get<std::string>();
  if (kind == "kg") {
    return make_kg_problem(spec.value("n_modes", 32));
  }
  if (kind == "ode") {
    const int d = spec.value("d", 1);
    const std::vector<double> quartic{0.0, 0.0, 0.25};
    return make_ode_problem(d, spec.value("potential", quartic),
                            spec.value("q0", std::vector<double>{1.0, 0.0}),
                            spec.value("p0", std::vector<double>{0.0, 1.0}), c);
  }
  if (kind == "free") {
    return make_free_problem(spec.value("n_modes", 8));
  }
  throw std::invalid_argument("problem: unknown kind \"" + kind + "\"");
}

}  // namespace oscint
