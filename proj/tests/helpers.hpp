#pragma once

// Shared helpers for the unit tests: seeded random states and bases.

#include <random>
#include <vector>

#include "oscint/core.hpp"

namespace testutil {

inline std::vector<double> random_eigenvalues(std::size_t n, unsigned seed,
                                              double lambda_max = 25.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(0.0, lambda_max);
  std::vector<double> lam(n);
  for (auto& l : lam) l = dist(gen);
  if (!lam.empty()) lam[0] = 0.0;  // keep one zero mode in play
  return lam;
}

inline oscint::SpectralBasis random_basis(std::size_t n, unsigned seed,
                                          double lambda_max = 25.0) {
  return oscint::SpectralBasis(random_eigenvalues(n, seed, lambda_max));
}

template <class JP>
oscint::State<JP> random_state(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  oscint::State<JP> w(n);
  if constexpr (std::is_same_v<JP, oscint::ComplexJ>) {
    for (std::size_t k = 0; k < n; ++k) {
      w.u[k] = {dist(gen), dist(gen)};
      w.v[k] = {dist(gen), dist(gen)};
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      w.u[k] = {dist(gen), dist(gen)};
      w.v[k] = {dist(gen), dist(gen)};
    }
  }
  return w;
}

}  // namespace testutil
