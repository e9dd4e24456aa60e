#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/sgrid.hpp"
#include "pipeflow/uq/sampler.hpp"
#include "pipeflow/uq/schedule.hpp"

namespace pipeflow {

/// Rounds to one significant digit.
inline double round_sig1(double v) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const int ex = static_cast<int>(std::floor(std::log10(std::abs(v))));
  // Divide by an exact power of ten so that 0.3 prints as 0.3.
  if (ex < 0) {
    const double s = std::pow(10.0, -ex);
    return std::round(v * s) / s;
  }
  const double e = std::pow(10.0, ex);
  return std::round(v / e) * e;
}

struct LinearFit {
  double slope = 0.0, intercept = 0.0;
  bool ok = false;
};

/// Ordinary least squares y = intercept + slope * x.
inline LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return f;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) return f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.ok = std::isfinite(f.slope) && std::isfinite(f.intercept);
  return f;
}

struct RateFit {
  RateEstimates raw, rounded;
  bool degenerate = false;
  std::vector<std::string> warnings;
  // Fit data for reporting.
  std::vector<double> pilots, mean_work, max_error;
  std::vector<double> profit_points, profits;
};

/// Center plus the two level-2 nodes on each axis.
inline std::vector<std::vector<double>> pilot_points(int dim) {
  std::vector<std::vector<double>> ys{std::vector<double>(static_cast<std::size_t>(dim), 0.0)};
  for (int n = 0; n < dim; ++n)
    for (double v : {-1.0, 1.0}) {
      std::vector<double> y(static_cast<std::size_t>(dim), 0.0);
      y[static_cast<std::size_t>(n)] = v;
      ys.push_back(y);
    }
  return ys;
}

/// Fits the work and error rates from solves at the pilot points.
///  s, C_W: log W against log(1/eta) over all pilots.
///  C_H: largest |psi(eta) - psi(eta_min)| / eta over coarser pilots and points.
///  mu, C_Y: decay of the hierarchical profits of the pilot interpolant of
///  psi(eta_min) - psi(eta_next) against the point count, scaled by eta_next.
inline RateFit estimate_rates(int dim, SampleStore& store, std::vector<double> pilots, unsigned workers = 1) {
  if (pilots.size() < 3) throw std::invalid_argument("at least three pilot tolerances are required");
  std::sort(pilots.begin(), pilots.end(), std::greater<>());
  for (double p : pilots)
    if (!(p > 0)) throw std::invalid_argument("pilot tolerances must be positive");
  if (pilots.front() / pilots.back() < 10.0 * (1 - 1e-12))
    throw std::invalid_argument("pilot tolerances must span at least one decade");

  RateFit R;
  R.pilots = pilots;
  const auto ys = pilot_points(dim);
  const std::size_t P = pilots.size(), M = ys.size();
  std::vector<std::vector<SampleOutcome>> out(P);
  for (std::size_t p = 0; p < P; ++p)
    out[p] = parallel_map(M, [&](std::size_t m) { return store.get(ys[m], pilots[p]); }, workers);

  // Work rate.
  std::vector<double> lx, lw;
  for (std::size_t p = 0; p < P; ++p) {
    double w = 0;
    for (const auto& o : out[p]) w += o.work;
    w /= static_cast<double>(M);
    R.mean_work.push_back(w);
    lx.push_back(std::log(1.0 / pilots[p]));
    lw.push_back(std::log(w));
  }
  const auto fw = least_squares(lx, lw);
  if (fw.ok && fw.slope > 0) {
    R.raw.s = fw.slope;
    R.raw.C_W = std::exp(fw.intercept);
  } else {
    R.degenerate = true;
    R.warnings.push_back("work fit degenerate; using s = 1");
    R.raw.s = 1.0;
    R.raw.C_W = 1.0;
  }

  // Physical error constant against the finest pilot.
  double ch = 0.0;
  for (std::size_t p = 0; p + 1 < P; ++p) {
    double e = 0.0;
    for (std::size_t m = 0; m < M; ++m) e = std::max(e, std::abs(out[p][m].psi - out[P - 1][m].psi));
    R.max_error.push_back(e);
    ch = std::max(ch, e / pilots[p]);
  }
  if (ch > 0 && std::isfinite(ch)) {
    R.raw.C_H = ch;
  } else {
    R.degenerate = true;
    R.warnings.push_back("physical error fit degenerate; using C_H = 0.25");
    R.raw.C_H = 0.25;
  }

  // Stochastic decay of the finest level difference.
  const double fine = pilots[P - 1], coarse = pilots[P - 2];
  std::vector<MultiIndex> set{MultiIndex(static_cast<std::size_t>(dim), 1)};
  for (int n = 0; n < dim; ++n) {
    MultiIndex i(static_cast<std::size_t>(dim), 1);
    i[static_cast<std::size_t>(n)] = 2;
    set.push_back(i);
  }
  BatchEvaluator diff = [&](const std::vector<std::vector<double>>& pts) {
    return parallel_map(
        pts.size(), [&](std::size_t m) { return std::vector<double>{store.get(pts[m], fine).psi - store.get(pts[m], coarse).psi}; },
        workers);
  };
  const auto I = build_on_index_set(dim, 1, set, diff);
  // Profits in decreasing order beyond the root, paired with the point count
  // an adaptive run would reach when accepting them in that order.
  std::vector<double> axis;
  for (const auto& e : I.indices()) {
    bool root = true;
    for (int v : e.i) root = root && v == 1;
    if (!root) axis.push_back(e.profit);
  }
  std::sort(axis.begin(), axis.end(), std::greater<>());
  R.profit_points.push_back(1.0);
  R.profits.push_back(I.indices().front().profit);
  for (std::size_t a = 0; a < axis.size(); ++a) {
    R.profit_points.push_back(static_cast<double>(3 + 2 * a));
    R.profits.push_back(axis[a]);
  }
  std::vector<double> lq, lp;
  for (std::size_t k = 0; k < R.profits.size(); ++k) {
    if (!(R.profits[k] > 0)) continue;
    lq.push_back(std::log(R.profit_points[k]));
    lp.push_back(std::log(R.profits[k] / coarse));
  }
  const auto fm = least_squares(lq, lp);
  if (fm.ok && fm.slope < 0) {
    R.raw.mu = -fm.slope;
    R.raw.C_Y = std::exp(-fm.intercept);
  } else {
    R.degenerate = true;
    R.warnings.push_back("profit decay fit degenerate; using mu = 2, C_Y = 0.25");
    R.raw.mu = 2.0;
    R.raw.C_Y = 0.25;
  }
  R.raw.C_h = R.raw.C_H;
  R.raw.C_s = R.raw.C_Y;

  R.rounded = R.raw;
  for (double* v : {&R.rounded.C_H, &R.rounded.C_Y, &R.rounded.C_W, &R.rounded.s, &R.rounded.mu, &R.rounded.C_h, &R.rounded.C_s})
    *v = round_sig1(*v);
  return R;
}

inline nlohmann::json to_json(const RateFit& R) {
  return {{"raw", to_json(R.raw)},
          {"rounded", to_json(R.rounded)},
          {"degenerate", R.degenerate},
          {"warnings", R.warnings},
          {"pilots", R.pilots},
          {"mean_work", R.mean_work},
          {"max_error", R.max_error},
          {"profit_points", R.profit_points},
          {"profits", R.profits}};
}

}  // namespace pipeflow
