// SPDX-License-Identifier: Apache-2.0
//
// Shared helpers for the test binaries: small random instances and
// independent reference solvers that share no code with the library.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "cyclic_ot/core.hpp"
#include "cyclic_ot/matrix.hpp"

namespace cyclic_ot::testing {

inline double rel_diff(double a, double b) {
  const double s = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) / s;
}

inline double max_abs_diff(const Matrix& x, const Matrix& y) {
  double out = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out = std::max(out, std::abs(x.values()[i] - y.values()[i]));
  }
  return out;
}

/// Positive integer weights scaled to sum `total`.
inline std::vector<double> random_weights(std::mt19937_64& gen, std::size_t m,
                                          double total, int max_weight = 10) {
  std::uniform_int_distribution<int> pick(1, max_weight);
  std::vector<double> w(m);
  double s = 0.0;
  for (double& x : w) {
    x = pick(gen);
    s += x;
  }
  for (double& x : w) x = x / s * total;
  return w;
}

inline Matrix random_matrix(std::mt19937_64& gen, std::size_t r, std::size_t c,
                            double lo = 0.0, double hi = 10.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix out(r, c);
  for (double& x : out.values()) x = u(gen);
  return out;
}

/// Strictly symmetric problem with rational marginals.
inline CyclicProblem random_cyclic(std::mt19937_64& gen, std::size_t m,
                                   std::size_t n, double cost_hi = 10.0) {
  const double total = 1.0 / static_cast<double>(n);
  std::vector<double> alpha = random_weights(gen, m, total);
  std::vector<double> beta = random_weights(gen, m, total);
  std::vector<Matrix> blocks;
  for (std::size_t k = 0; k < n; ++k) {
    blocks.push_back(random_matrix(gen, m, m, 0.0, cost_hi));
  }
  return CyclicProblem(std::move(alpha), std::move(beta), std::move(blocks));
}

/// Straight placement C[i + m r][j + m s] = C_{(s - r) mod n}[i][j].
inline Matrix naive_expand(const CyclicProblem& p) {
  const std::size_t m = p.block_size();
  const std::size_t n = p.order();
  Matrix out(m * n, m * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t s = 0; s < n; ++s) {
      const Matrix& b = p.block((s + n - r) % n);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) out(i + m * r, j + m * s) = b(i, j);
      }
    }
  }
  return out;
}

/// Minimizer of sum_k <C_k, T_k> + sum T^2 / (2 gamma) over the reduced
/// transport polytope, computed as the Euclidean projection of -gamma C by
/// Dykstra's alternating projections (row sums, column sums, T >= 0).
inline std::vector<Matrix> dykstra_squared(const CyclicProblem& p, double gamma,
                                           int iterations = 200000,
                                           double tol = 1e-13) {
  const std::size_t m = p.block_size();
  const std::size_t n = p.order();
  const std::size_t len = n * m * m;
  auto at = [m](std::size_t k, std::size_t i, std::size_t j) {
    return (k * m + i) * m + j;
  };
  std::vector<double> x(len);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) x[at(k, i, j)] = -gamma * p.block(k)(i, j);
    }
  }
  // Corrections are only needed for the non-affine set.
  std::vector<double> corr(len, 0.0);
  const double per_line = static_cast<double>(n * m);
  for (int it = 0; it < iterations; ++it) {
    for (std::size_t i = 0; i < m; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < m; ++j) s += x[at(k, i, j)];
      }
      const double shift = (s - p.alpha()[i]) / per_line;
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t j = 0; j < m; ++j) x[at(k, i, j)] -= shift;
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < m; ++i) s += x[at(k, i, j)];
      }
      const double shift = (s - p.beta()[j]) / per_line;
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < m; ++i) x[at(k, i, j)] -= shift;
      }
    }
    double moved = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const double y = x[t] + corr[t];
      const double proj = std::max(y, 0.0);
      corr[t] = y - proj;
      moved = std::max(moved, std::abs(proj - x[t]));
      x[t] = proj;
    }
    if (moved < tol && it > 10) break;
  }
  std::vector<Matrix> out(n, Matrix(m, m));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) out[k](i, j) = x[at(k, i, j)];
    }
  }
  return out;
}

/// Entropic OT for d = 2 in closed parametric form: the plan is
/// [[x, a0 - x], [b0 - x, a1 - b0 + x]] and x is found by bisection on the
/// derivative of <C, T> + lambda sum T (log T - 1).
inline Matrix entropic_2x2(const std::vector<double>& a,
                           const std::vector<double>& b, const Matrix& c,
                           double lambda) {
  const double lo0 = std::max(0.0, b[0] - a[1]);
  const double hi0 = std::min(a[0], b[0]);
  auto deriv = [&](double x) {
    return c(0, 0) - c(0, 1) - c(1, 0) + c(1, 1) +
           lambda * (std::log(x) - std::log(a[0] - x) - std::log(b[0] - x) +
                     std::log(a[1] - b[0] + x));
  };
  double lo = lo0;
  double hi = hi0;
  for (int it = 0; it < 2000 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    (deriv(mid) < 0.0 ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  return Matrix::from_rows({{x, a[0] - x}, {b[0] - x, a[1] - b[0] + x}});
}

}  // namespace cyclic_ot::testing
