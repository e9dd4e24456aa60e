#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace pipeflow {

/// Finest univariate level supported; node keys are positions on its grid.
inline constexpr int kMaxLevel = 12;

/// Number of nested Clenshaw-Curtis nodes on a level.
inline std::size_t level_to_points(int i) {
  if (i < 1) throw std::invalid_argument("level must be >= 1");
  return i == 1 ? 1 : (std::size_t{1} << (i - 1)) + 1;
}

/// Sorted Clenshaw-Curtis nodes of level i (extrema of Chebyshev polynomials).
inline std::vector<double> cc_nodes(int i) {
  const std::size_t m = level_to_points(i);
  if (m == 1) return {0.0};
  std::vector<double> x(m);
  const double n = static_cast<double>(m - 1);
  for (std::size_t j = 0; j < m; ++j) {
    // Symmetrized so that mirrored nodes are exact negatives and the middle is 0.
    if (2 * j + 1 == m) {
      x[j] = 0.0;
    } else if (2 * j < m) {
      x[j] = -std::cos(std::numbers::pi * static_cast<double>(j) / n);
    } else {
      x[j] = std::cos(std::numbers::pi * static_cast<double>(m - 1 - j) / n);
    }
  }
  x.front() = -1.0;
  x.back() = 1.0;
  return x;
}

/// Position of node j of level i on the level-kMaxLevel grid.
inline int cc_position(int i, std::size_t j) {
  if (i == 1) return 1 << (kMaxLevel - 2);
  return static_cast<int>(j) << (kMaxLevel - i);
}

/// Level at which a position on the finest grid first appears.
inline int cc_level_of_position(int pos) {
  if (pos == (1 << (kMaxLevel - 2))) return 1;
  if (pos == 0 || pos == (1 << (kMaxLevel - 1))) return 2;
  int tz = 0;
  while ((pos & 1) == 0) {
    pos >>= 1;
    ++tz;
  }
  return kMaxLevel - tz;
}

/// Quadrature weights for the uniform probability density on [-1,1]
/// (they sum to one). Closed-form Clenshaw-Curtis weights.
inline std::vector<double> cc_weights(int i) {
  const std::size_t m = level_to_points(i);
  if (m == 1) return {1.0};
  const std::size_t n = m - 1;
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t k = 1; k <= n / 2; ++k) {
      const double b = (2 * k == n) ? 1.0 : 2.0;
      s += b / (4.0 * static_cast<double>(k * k) - 1.0) *
           std::cos(2.0 * std::numbers::pi * static_cast<double>(k * j) / static_cast<double>(n));
    }
    const double c = (j == 0 || j == n) ? 1.0 : 2.0;
    w[j] = 0.5 * c / static_cast<double>(n) * (1.0 - s);
  }
  return w;
}

/// Barycentric weights for Chebyshev extrema: alternating signs, halved at the ends.
inline std::vector<double> cc_barycentric_weights(int i) {
  const std::size_t m = level_to_points(i);
  std::vector<double> w(m, 1.0);
  if (m == 1) return w;
  for (std::size_t j = 0; j < m; ++j) w[j] = (j % 2 ? -1.0 : 1.0);
  w.front() *= 0.5;
  w.back() *= 0.5;
  return w;
}

/// Values of all Lagrange basis polynomials of a level at t.
inline std::vector<double> lagrange_basis(int i, double t) {
  const auto x = cc_nodes(i);
  if (x.size() == 1) return {1.0};
  const auto w = cc_barycentric_weights(i);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (t == x[j]) {
      out[j] = 1.0;
      return out;
    }
  }
  double den = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    out[j] = w[j] / (t - x[j]);
    den += out[j];
  }
  for (double& v : out) v /= den;
  return out;
}

}  // namespace pipeflow
