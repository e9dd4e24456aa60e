#pragma once

#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipeflow/parallel.hpp"
#include "pipeflow/sgrid/interpolant.hpp"

namespace pipeflow {

/// Evaluates the target at a batch of parameter points; results in input order.
using BatchEvaluator = std::function<std::vector<std::vector<double>>(const std::vector<std::vector<double>>&)>;

/// A target evaluation failed at a specific parameter point.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::vector<double>& y, const std::string& what)
      : std::runtime_error(format(y, what)), y_(y) {}
  const std::vector<double>& y() const { return y_; }

 private:
  static std::string format(const std::vector<double>& y, const std::string& what) {
    std::ostringstream os;
    os.precision(17);
    os << "evaluation failed at y = (";
    for (std::size_t n = 0; n < y.size(); ++n) os << (n ? ", " : "") << y[n];
    os << "): " << what;
    return os.str();
  }
  std::vector<double> y_;
};

/// Lifts a pointwise target to a batch evaluator running on `workers` threads.
inline BatchEvaluator make_batch_evaluator(std::function<std::vector<double>(const std::vector<double>&)> f,
                                           unsigned workers = 1) {
  return [f = std::move(f), workers](const std::vector<std::vector<double>>& ys) {
    return parallel_map(
        ys.size(),
        [&](std::size_t k) {
          try {
            return f(ys[k]);
          } catch (const EvaluationError&) {
            throw;
          } catch (const std::exception& e) {
            throw EvaluationError(ys[k], e.what());
          }
        },
        workers);
  };
}

struct SmolyakOptions {
  double tol = 1e-3;
  std::size_t max_points = 100000;
  int max_level = kMaxLevel;
  std::size_t profit_components = 0;  // profits use the first components only (0 = all)
};

/// One accepted index of the adaptation loop.
struct SmolyakStep {
  MultiIndex index;
  double profit = 0.0;
  std::size_t points = 0;  // explored points after its forward neighbors were added
};

struct SmolyakResult {
  SparseInterpolant interp;
  std::vector<SmolyakStep> steps;
  bool converged = false;
  double max_active_profit = 0.0;
};

namespace detail {

inline void add_indices(SparseInterpolant& I, const std::vector<MultiIndex>& idx, const BatchEvaluator& f) {
  std::vector<std::vector<double>> ys;
  std::vector<std::size_t> offs;
  for (const auto& i : idx) {
    offs.push_back(ys.size());
    for (auto& y : I.new_nodes(i)) ys.push_back(std::move(y));
  }
  offs.push_back(ys.size());
  if (ys.empty()) return;
  auto vals = f(ys);
  if (vals.size() != ys.size()) throw std::runtime_error("evaluator returned wrong number of results");
  for (std::size_t k = 0; k < idx.size(); ++k)
    I.add_index(idx[k], std::vector<std::vector<double>>(vals.begin() + static_cast<std::ptrdiff_t>(offs[k]),
                                                         vals.begin() + static_cast<std::ptrdiff_t>(offs[k + 1])));
}

}  // namespace detail

/// Dimension-adaptive Smolyak construction: repeatedly accepts the active
/// index of largest profit and activates its admissible forward neighbors,
/// until the largest active profit drops below tol or a cap is hit.
inline SmolyakResult adapt_smolyak(int dim, std::size_t target_size, const BatchEvaluator& f, const SmolyakOptions& opt) {
  if (!(opt.tol > 0)) throw std::invalid_argument("tolerance must be positive");
  SmolyakResult r{SparseInterpolant(dim, target_size, opt.profit_components), {}, false, 0.0};
  auto& I = r.interp;
  std::vector<MultiIndex> active{MultiIndex(static_cast<std::size_t>(dim), 1)};
  detail::add_indices(I, active, f);
  const int max_level = std::min(opt.max_level, kMaxLevel);

  while (true) {
    if (active.empty()) {
      // Only a zero-dimensional grid runs out of indices legitimately.
      r.converged = dim == 0;
      if (dim > 0) I.set_capped(true);
      break;
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < active.size(); ++k) {
      const double pk = I.entry(active[k]).profit, pb = I.entry(active[best]).profit;
      if (pk > pb || (pk == pb && active[k] < active[best])) best = k;
    }
    r.max_active_profit = I.entry(active[best]).profit;
    if (r.max_active_profit < opt.tol) {
      r.converged = true;
      break;
    }
    const MultiIndex acc = active[best];
    std::vector<MultiIndex> cand;
    std::size_t new_points = 0;
    for (int n = 0; n < dim; ++n) {
      MultiIndex j = acc;
      if (++j[n] > max_level || I.contains(j)) continue;
      // Admissible once acc is old: all other backward neighbors must be old already.
      bool ok = true;
      for (int m = 0; m < dim && ok; ++m) {
        if (m == n || j[m] == 1) continue;
        MultiIndex b = j;
        --b[m];
        ok = I.contains(b) && I.entry(b).old;
      }
      if (!ok) continue;
      cand.push_back(j);
      new_points += I.new_nodes(j).size();
    }
    if (I.point_count() + new_points > opt.max_points) {
      I.set_capped(true);
      break;
    }
    I.mark_old(acc);
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(best));
    std::sort(cand.begin(), cand.end());
    detail::add_indices(I, cand, f);
    active.insert(active.end(), cand.begin(), cand.end());
    r.steps.push_back({acc, r.max_active_profit, I.point_count()});
  }
  return r;
}

/// Builds the interpolant on a prescribed downward-closed index set.
inline SparseInterpolant build_on_index_set(int dim, std::size_t target_size, std::vector<MultiIndex> set,
                                            const BatchEvaluator& f) {
  // Sorting by level sum guarantees backward neighbors come first.
  std::stable_sort(set.begin(), set.end(), [](const MultiIndex& a, const MultiIndex& b) {
    int sa = 0, sb = 0;
    for (int v : a) sa += v;
    for (int v : b) sb += v;
    return sa != sb ? sa < sb : a < b;
  });
  SparseInterpolant I(dim, target_size);
  std::size_t k = 0;
  while (k < set.size()) {
    std::size_t e = k;
    int lvl = 0;
    for (int v : set[k]) lvl += v;
    while (e < set.size()) {
      int s = 0;
      for (int v : set[e]) s += v;
      if (s != lvl) break;
      ++e;
    }
    detail::add_indices(I, std::vector<MultiIndex>(set.begin() + static_cast<std::ptrdiff_t>(k),
                                                   set.begin() + static_cast<std::ptrdiff_t>(e)),
                        f);
    k = e;
  }
  for (const auto& e : I.indices()) I.mark_old(e.i);
  return I;
}

/// Multi-indices of an interpolant, in insertion order.
inline std::vector<MultiIndex> index_set(const SparseInterpolant& I) {
  std::vector<MultiIndex> out;
  for (const auto& e : I.indices()) out.push_back(e.i);
  return out;
}

}  // namespace pipeflow
