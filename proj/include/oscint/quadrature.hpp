#pragma once

// Quadrature toolbox: periodic trapezoid sums, Gauss-Legendre rules,
// discrete-orthogonality compression rules for equidistant sums, the
// combined two-level rule used by the integrator, and an adaptive
// panel-doubling integrator used as an independent reference.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "oscint/core.hpp"

namespace oscint {

/// Nodes and weights on the reference interval [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

/// Affine image of x in [-1, 1] under the map onto [a, b].
[[nodiscard]] inline double affine_map(double x, double a, double b) {
  return 0.5 * (b - a) * (x + 1.0) + a;
}

// ============================================================
// Gauss-Legendre
// ============================================================

namespace detail {

/// Value of P_n(x) and P_{n-1}(x) by the three-term recurrence.
inline void legendre_pair(int n, double x, double& pn, double& pnm1) {
  double p0 = 1.0;
  double p1 = x;
  if (n == 0) {
    pn = p0;
    pnm1 = 0.0;
    return;
  }
  for (int j = 1; j < n; ++j) {
    const double p2 = ((2.0 * j + 1.0) * x * p1 - j * p0) / (j + 1.0);
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  pnm1 = p0;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1]. Roots by Newton iteration from
/// Chebyshev starting values; the rule is symmetrized exactly.
[[nodiscard]] inline QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: need n >= 1");
  QuadratureRule rule;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);

  // Roots come out in decreasing order for k = 1, 2, ...; only the positive
  // half is iterated, the rest follows by symmetry.
  const int half = n / 2;
  for (int k = 1; k <= half; ++k) {
    double x = std::cos(pi * (k - 0.25) / (n + 0.5));
    double pn = 0.0, pnm1 = 0.0;
    for (int it = 0; it < 100; ++it) {
      detail::legendre_pair(n, x, pn, pnm1);
      const double dp = n * (x * pn - pnm1) / (x * x - 1.0);
      const double dx = pn / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    detail::legendre_pair(n, x, pn, pnm1);
    const double dp = n * (x * pn - pnm1) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[static_cast<std::size_t>(n - k)] = x;
    rule.nodes[static_cast<std::size_t>(k - 1)] = -x;
    rule.weights[static_cast<std::size_t>(n - k)] = w;
    rule.weights[static_cast<std::size_t>(k - 1)] = w;
  }
  if (n % 2 == 1) {
    double pn = 0.0, pnm1 = 0.0;
    detail::legendre_pair(n, 0.0, pn, pnm1);
    const double dp = n * (0.0 - pnm1) / (-1.0);
    rule.nodes[static_cast<std::size_t>(half)] = 0.0;
    rule.weights[static_cast<std::size_t>(half)] = 2.0 / (dp * dp);
  }
  return rule;
}

// ============================================================
// Compression rule for equidistant sums
// ============================================================

/// Gauss-type rule for the discrete measure mu = (2/m) sum_j delta(x_j) on
/// the equidistant grid x_j = -1 + 2j/(m-1). The degree-M rule integrates
/// polynomials of degree <= 2M-1 exactly against mu, so an m-term
/// equidistant sum collapses to M evaluations.
struct GramRule {
  std::vector<double> nodes;    // M roots of the degree-M grid polynomial
  std::vector<double> weights;  // positive, summing to 2
  int grid_points = 0;          // m
  int degree = 0;               // M
  std::vector<double> rec_b;    // recurrence offdiagonals b_1..b_M
  std::vector<double> lead;     // leading coefficients of p_0..p_M

  [[nodiscard]] std::size_t size() const { return nodes.size(); }
};

namespace detail {

/// Evaluate the orthonormal grid polynomials p_0..p_top at x via the
/// symmetric recurrence p_{j+1} = (x p_j - b_j p_{j-1}) / b_{j+1}.
inline std::vector<double> gram_poly_values(const GramRule& rule, int top, double x) {
  std::vector<double> p(static_cast<std::size_t>(top) + 1);
  p[0] = 1.0 / std::sqrt(static_cast<double>(rule.grid_points));
  if (top >= 1) p[1] = x * p[0] / rule.rec_b[0];
  for (int j = 1; j < top; ++j)
    p[static_cast<std::size_t>(j) + 1] =
        (x * p[static_cast<std::size_t>(j)] -
         rule.rec_b[static_cast<std::size_t>(j) - 1] * p[static_cast<std::size_t>(j) - 1]) /
        rule.rec_b[static_cast<std::size_t>(j)];
  return p;
}

/// Solve the small dense system A x = b by Gaussian elimination with
/// partial pivoting. A is row-major n x n.
inline std::vector<double> solve_dense(std::vector<double> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r * n + col]) > std::abs(A[piv * n + col])) piv = r;
    if (A[piv * n + col] == 0.0)
      throw std::runtime_error("solve_dense: singular matrix");
    if (piv != col) {
      for (std::size_t cc = 0; cc < n; ++cc) std::swap(A[col * n + cc], A[piv * n + cc]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] / A[col * n + col];
      for (std::size_t cc = col; cc < n; ++cc) A[r * n + cc] -= f * A[col * n + cc];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n, 0.0);
  for (std::size_t ri = n; ri-- > 0;) {
    double s = b[ri];
    for (std::size_t cc = ri + 1; cc < n; ++cc) s -= A[ri * n + cc] * x[cc];
    x[ri] = s / A[ri * n + ri];
  }
  return x;
}

}  // namespace detail

/// Value of the orthonormal grid polynomial p_j at x (any real x).
[[nodiscard]] inline double gram_polynomial_value(const GramRule& rule, int j, double x) {
  if (j < 0 || j > rule.degree)
    throw std::invalid_argument("gram_polynomial_value: index out of range");
  return detail::gram_poly_values(rule, j, x).back();
}

/// Build the degree-M compression rule for the m-point grid. Requires
/// m >= M + 1 so that the degree-M grid polynomial exists and has M
/// distinct roots inside (-1, 1).
[[nodiscard]] inline GramRule gram_rule(int M, int m) {
  if (M < 1) throw std::invalid_argument("gram_rule: need degree M >= 1");
  if (m < M + 1)
    throw std::invalid_argument("gram_rule: need m >= M + 1 grid points, got m = " +
                                std::to_string(m));

  GramRule rule;
  rule.grid_points = m;
  rule.degree = M;

  std::vector<double> grid(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j)
    grid[static_cast<std::size_t>(j)] = -1.0 + 2.0 * j / (m - 1.0);

  // Stieltjes run on grid values. The grid is symmetric, so the diagonal
  // recurrence coefficients vanish identically and only the b's are kept.
  const std::size_t mm = static_cast<std::size_t>(m);
  std::vector<double> pjm1(mm, 0.0);
  std::vector<double> pj(mm, 1.0 / std::sqrt(static_cast<double>(m)));
  rule.lead.push_back(1.0 / std::sqrt(static_cast<double>(m)));
  for (int j = 0; j < M; ++j) {
    std::vector<double> q(mm);
    const double bj = (j == 0) ? 0.0 : rule.rec_b[static_cast<std::size_t>(j) - 1];
    for (std::size_t i = 0; i < mm; ++i) q[i] = grid[i] * pj[i] - bj * pjm1[i];
    double nrm = 0.0;
    for (double qi : q) nrm += qi * qi;
    nrm = std::sqrt(nrm);
    if (!(nrm > 0.0))
      throw std::runtime_error("gram_rule: degenerate recurrence at step " +
                               std::to_string(j));
    rule.rec_b.push_back(nrm);
    rule.lead.push_back(rule.lead.back() / nrm);
    pjm1 = pj;
    for (std::size_t i = 0; i < mm; ++i) pj[i] = q[i] / nrm;
  }

  // Roots of p_M by sign-change scan plus bisection. Roots are simple and
  // lie strictly inside (-1, 1); the scan is refined until all M show up.
  const auto pM = [&rule, M](double x) {
    return detail::gram_poly_values(rule, M, x).back();
  };
  std::vector<double> roots;
  int scan = 64 * M;
  for (int attempt = 0; attempt < 8 && static_cast<int>(roots.size()) != M; ++attempt) {
    roots.clear();
    double xl = -1.0;
    double fl = pM(xl);
    for (int i = 1; i <= scan; ++i) {
      const double xr = -1.0 + 2.0 * i / scan;
      const double fr = pM(xr);
      if (fl == 0.0) roots.push_back(xl);
      else if (fl * fr < 0.0) {
        double a = xl, b = xr, fa = fl;
        for (int it = 0; it < 200 && b - a > 4e-16; ++it) {
          const double mid = 0.5 * (a + b);
          const double fm = pM(mid);
          if (fm == 0.0) {
            a = b = mid;
            break;
          }
          if (fa * fm < 0.0) b = mid;
          else {
            a = mid;
            fa = fm;
          }
        }
        roots.push_back(0.5 * (a + b));
      }
      xl = xr;
      fl = fr;
    }
    scan *= 4;
  }
  if (static_cast<int>(roots.size()) != M)
    throw std::runtime_error("gram_rule: root scan found " +
                             std::to_string(roots.size()) + " of " + std::to_string(M));

  // Symmetrize the root set exactly.
  for (int k = 0; k < M / 2; ++k) {
    const double r = 0.5 * (roots[static_cast<std::size_t>(M - 1 - k)] -
                            roots[static_cast<std::size_t>(k)]);
    roots[static_cast<std::size_t>(k)] = -r;
    roots[static_cast<std::size_t>(M - 1 - k)] = r;
  }
  if (M % 2 == 1) roots[static_cast<std::size_t>(M / 2)] = 0.0;
  rule.nodes = roots;

  // Weights from moment matching: sum_k w_k xi_k^d = (2/m) sum_j x_j^d for
  // d = 0..M-1. The Vandermonde system is tiny and well conditioned for the
  // degrees in play.
  std::vector<double> A(static_cast<std::size_t>(M) * static_cast<std::size_t>(M));
  std::vector<double> mom(static_cast<std::size_t>(M));
  for (int d = 0; d < M; ++d) {
    double s = 0.0;
    for (double xj : grid) s += std::pow(xj, d);
    mom[static_cast<std::size_t>(d)] = 2.0 * s / m;
    for (int k = 0; k < M; ++k)
      A[static_cast<std::size_t>(d) * static_cast<std::size_t>(M) +
        static_cast<std::size_t>(k)] = std::pow(rule.nodes[static_cast<std::size_t>(k)], d);
  }
  rule.weights = detail::solve_dense(std::move(A), std::move(mom));
  return rule;
}

// ============================================================
// Rule application
// ============================================================

/// Periodic trapezoid value (1/n) sum_{k=0}^{n-1} F(k/n) for a 1-periodic
/// integrand; spectrally accurate for smooth periodic F.
template <class F>
[[nodiscard]] auto trapezoid_periodic(F&& f, int n) {
  if (n < 1) throw std::invalid_argument("trapezoid_periodic: need n >= 1");
  auto acc = f(0.0);
  for (int k = 1; k < n; ++k) acc += f(static_cast<double>(k) / n);
  acc *= 1.0 / n;
  return acc;
}

/// Gauss approximation of the integral of f over [a, b].
template <class F>
[[nodiscard]] auto gauss_integrate(F&& f, double a, double b, const QuadratureRule& rule) {
  auto acc = rule.weights[0] * f(affine_map(rule.nodes[0], a, b));
  for (std::size_t k = 1; k < rule.size(); ++k)
    acc += rule.weights[k] * f(affine_map(rule.nodes[k], a, b));
  acc *= 0.5 * (b - a);
  return acc;
}

/// Exact equidistant sum h * sum_{j=0}^{m-1} f(a + j h) with h = (b-a)/(m-1).
template <class F>
[[nodiscard]] auto equidistant_sum(F&& f, double a, double b, int m) {
  if (m < 2) throw std::invalid_argument("equidistant_sum: need m >= 2");
  const double h = (b - a) / (m - 1.0);
  auto acc = f(a);
  for (int j = 1; j < m; ++j) acc += f(a + j * h);
  acc *= h;
  return acc;
}

/// Compressed value of the equidistant sum h * sum_{j=0}^{m-1} f(a + j h)
/// using the grid rule: prefactor m (b-a) / (2 (m-1)) times the weighted
/// sum over mapped nodes.
template <class F>
[[nodiscard]] auto gram_sum_quadrature(F&& f, double a, double b, const GramRule& rule) {
  auto acc = rule.weights[0] * f(affine_map(rule.nodes[0], a, b));
  for (std::size_t k = 1; k < rule.size(); ++k)
    acc += rule.weights[k] * f(affine_map(rule.nodes[k], a, b));
  acc *= rule.grid_points * (b - a) / (2.0 * (rule.grid_points - 1.0));
  return acc;
}

// ============================================================
// Combined two-level rule
// ============================================================

/// Two-level approximation of int_0^tau g(s, s/T mod 1) ds with T = tau/m:
/// the fast phase sigma is integrated per period by N-point Gauss, the slow
/// period-start variable rho by the degree-M grid rule over the m period
/// starts 0, T, ..., (m-1)T. G takes (rho, sigma) with sigma in [0, 1].
/// m == 1 needs no compression; 2 <= m <= M is rejected because the grid
/// rule needs m >= M + 1.
template <class G>
[[nodiscard]] double double_rule(G&& g, double tau, int m, int M, int N) {
  if (m < 1) throw std::invalid_argument("double_rule: need m >= 1");
  const double T = tau / m;
  const QuadratureRule gauss = gauss_legendre(N);

  const auto period_value = [&](double rho) {
    double acc = 0.0;
    for (std::size_t k = 0; k < gauss.size(); ++k) {
      const double eta = 0.5 * (gauss.nodes[k] + 1.0);
      acc += gauss.weights[k] * g(rho, eta);
    }
    return 0.5 * acc;
  };

  if (m == 1) return T * period_value(0.0);
  if (m <= M)
    throw std::invalid_argument("double_rule: m = " + std::to_string(m) +
                                " grid points cannot carry a degree " +
                                std::to_string(M) + " rule");

  const GramRule gram = gram_rule(M, m);
  double acc = 0.0;
  for (std::size_t i = 0; i < gram.size(); ++i) {
    const double rho = affine_map(gram.nodes[i], 0.0, (m - 1.0) * T);
    acc += gram.weights[i] * period_value(rho);
  }
  return acc * (m * T / 2.0);
}

// ============================================================
// Adaptive reference integrator
// ============================================================

namespace detail {

template <class V>
struct AdaptiveResult {
  V value{};
  bool converged = false;
  double err_est = 0.0;
  long evals = 0;
};

/// Panel-doubling integrator: fixed 16-point Gauss per panel, doubling the
/// panel count until two successive levels agree to tol in norm. Meant as a
/// slow, independent reference, not for production paths.
template <class F>
[[nodiscard]] auto adaptive_gauss(F&& f, double a, double b, double tol,
                                  int max_doublings = 20) {
  static const QuadratureRule g16 = gauss_legendre(16);
  using V = decltype(1.0 * f(a));
  const auto level_value = [&](long panels) {
    const double h = (b - a) / static_cast<double>(panels);
    bool first = true;
    V acc{};
    for (long p = 0; p < panels; ++p) {
      const double pa = a + p * h;
      V pv = gauss_integrate(f, pa, pa + h, g16);
      if (first) {
        acc = std::move(pv);
        first = false;
      } else {
        acc += pv;
      }
    }
    return acc;
  };

  AdaptiveResult<V> res;
  long panels = 1;
  V prev = level_value(panels);
  res.evals = 16;
  for (int d = 0; d < max_doublings; ++d) {
    panels *= 2;
    V next = level_value(panels);
    res.evals += 16 * panels;
    const double diff = norm(next - prev);
    if (diff <= tol) {
      res.value = std::move(next);
      res.converged = true;
      res.err_est = diff;
      return res;
    }
    prev = std::move(next);
  }
  res.value = std::move(prev);
  res.err_est = tol;
  return res;
}

}  // namespace detail

}  // namespace oscint
