#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace pipeflow {

/// One-dimensional Gaussian kernel density estimate with the bandwidth
/// H = 1.06 sigma N^-0.2 (sigma with the N-1 denominator).
struct KdeModel {
  std::vector<double> samples;
  double H = 0.0;
  double sigma = 0.0;
  bool fallback_bandwidth = false;

  double density(double x) const {
    const double n = static_cast<double>(samples.size());
    double acc = 0.0;
    for (double xi : samples) {
      const double z = (x - xi) / H;
      acc += std::exp(-0.5 * z * z);
    }
    return acc / (n * H * std::sqrt(2.0 * std::numbers::pi));
  }
};

inline double kde_bandwidth(double sigma, std::size_t n) { return 1.06 * sigma * std::pow(static_cast<double>(n), -0.2); }

inline KdeModel kde(std::vector<double> samples) {
  if (samples.size() < 2) throw std::invalid_argument("kernel density estimate needs at least 2 samples");
  KdeModel m;
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  m.sigma = std::sqrt(ss / (n - 1.0));
  m.H = kde_bandwidth(m.sigma, samples.size());
  if (!(m.H > 0)) {
    m.H = std::max(1e-6, 1e-6 * std::abs(samples.front()));
    m.fallback_bandwidth = true;
  }
  m.samples = std::move(samples);
  return m;
}

enum class Side { below, above };

struct ViolationProbability {
  double p_kde = 0.0;
  double p_empirical = 0.0;
};

/// P(X < bound) or P(X > bound) under the Gaussian mixture, with the raw
/// sample fraction alongside.
inline ViolationProbability violation_probability(const KdeModel& m, double bound, Side side) {
  double below = 0.0;
  std::size_t count = 0;
  for (double xi : m.samples) {
    below += 0.5 * std::erfc(-(bound - xi) / (m.H * std::numbers::sqrt2));
    if (xi < bound) ++count;
  }
  const double n = static_cast<double>(m.samples.size());
  below /= n;
  const double emp = static_cast<double>(count) / n;
  if (side == Side::below) return {below, emp};
  return {1.0 - below, 1.0 - emp};
}

/// Density on an equispaced grid covering the samples padded by `pad` bandwidths.
inline std::vector<std::pair<double, double>> kde_curve(const KdeModel& m, std::size_t points = 512, double pad = 4.0) {
  const auto [lo, hi] = std::minmax_element(m.samples.begin(), m.samples.end());
  const double a = *lo - pad * m.H, b = *hi + pad * m.H;
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1);
    out.emplace_back(x, m.density(x));
  }
  return out;
}

}  // namespace pipeflow
