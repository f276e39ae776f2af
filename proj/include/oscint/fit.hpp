#pragma once

// Log-log order fitting for convergence studies. Points whose error sits
// at or below a resolution floor carry no order information and are
// excluded before the least-squares fit.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace oscint {

struct OrderFit {
  double slope = 0.0;      // fitted convergence order
  double intercept = 0.0;  // log10 of the fitted error at step size 1
  int n_used = 0;          // points surviving the floor filter
  bool ok = false;         // false when too few usable points remain
};

/// Least-squares slope of log10(err) against log10(tau). `pairs` holds
/// (tau, err) samples; samples with err <= floor are dropped. At least
/// three input samples and two surviving ones are required.
[[nodiscard]] inline OrderFit fit_order(const std::vector<std::pair<double, double>>& pairs,
                                        double floor_value) {
  OrderFit fit;
  if (pairs.size() < 3) return fit;

  std::vector<std::pair<double, double>> kept;
  for (const auto& [tau, err] : pairs)
    if (tau > 0.0 && err > floor_value) kept.emplace_back(tau, err);
  fit.n_used = static_cast<int>(kept.size());
  if (kept.size() < 2) return fit;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (const auto& [tau, err] : kept) {
    const double x = std::log10(tau);
    const double y = std::log10(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(kept.size());
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  fit.ok = true;
  return fit;
}

}  // namespace oscint
