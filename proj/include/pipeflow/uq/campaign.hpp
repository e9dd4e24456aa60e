#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/parallel.hpp"
#include "pipeflow/post/surrogate.hpp"
#include "pipeflow/sgrid.hpp"
#include "pipeflow/uq/sampler.hpp"
#include "pipeflow/uq/schedule.hpp"

namespace pipeflow {

struct UqOptions {
  unsigned workers = 1;
  std::size_t max_points = 100000;
  int max_level = kMaxLevel;
  bool traces = true;  // also interpolate exit-pressure traces on the same grid
  std::optional<std::vector<MultiIndex>> forced_index_set;  // skip adaptation
};

/// One telescoping level: the interpolant of psi(eta_h) - psi(eta_h_prev)
/// (or of psi(eta_h) alone when eta_h_prev = 0). Target component 0 is psi,
/// the rest are exit-pressure traces.
struct LevelReport {
  int k = 0;
  double eta_h = 0.0, eta_h_prev = 0.0, eta_s = 0.0;
  std::size_t Q = 0;
  double W = 0.0, W_prev = 0.0;  // mean work per sample at eta_h and eta_h_prev
  double expectation = 0.0;
  bool converged = true, capped = false;
  SparseInterpolant interp;
  std::vector<SmolyakStep> steps;
};

struct UqReport {
  std::string mode;
  int dimension = 0;
  double eps = 0.0;
  double q = 0.0;
  int K = 0;
  RateEstimates rates;
  std::optional<ToleranceSchedule> schedule;
  std::vector<LevelReport> levels;
  double expectation = 0.0;
  std::size_t samples = 0, reused = 0;
  std::size_t pilot_points = 0;
};

namespace detail {

inline std::vector<double> level_target(const SampleOutcome& fine, const SampleOutcome* coarse, bool traces) {
  std::vector<double> v{fine.psi - (coarse ? coarse->psi : 0.0)};
  if (traces) {
    if (coarse && coarse->traces.size() != fine.traces.size()) throw std::runtime_error("trace size mismatch between levels");
    for (std::size_t i = 0; i < fine.traces.size(); ++i) v.push_back(fine.traces[i] - (coarse ? coarse->traces[i] : 0.0));
  }
  return v;
}

inline LevelReport run_level(int dim, SampleStore& store, int k, double eta_h, double eta_h_prev, double eta_s,
                             const UqOptions& opt) {
  const bool traces = opt.traces;
  std::size_t tsize = 1;
  if (traces) tsize += store.get(std::vector<double>(static_cast<std::size_t>(dim), 0.0), eta_h).traces.size();
  BatchEvaluator f = [&](const std::vector<std::vector<double>>& ys) {
    return parallel_map(
        ys.size(),
        [&](std::size_t i) {
          try {
            SampleOutcome a = store.get(ys[i], eta_h);
            if (eta_h_prev > 0) {
              SampleOutcome b = store.get(ys[i], eta_h_prev);
              return level_target(a, &b, traces);
            }
            return level_target(a, nullptr, traces);
          } catch (const EvaluationError&) {
            throw;
          } catch (const std::exception& e) {
            throw EvaluationError(ys[i], e.what());
          }
        },
        opt.workers);
  };
  LevelReport L;
  L.k = k;
  L.eta_h = eta_h;
  L.eta_h_prev = eta_h_prev;
  L.eta_s = eta_s;
  if (opt.forced_index_set) {
    L.interp = build_on_index_set(dim, tsize, *opt.forced_index_set, f);
  } else {
    SmolyakOptions so;
    so.tol = eta_s;
    so.max_points = opt.max_points;
    so.max_level = opt.max_level;
    so.profit_components = 1;
    auto r = adapt_smolyak(dim, tsize, f, so);
    L.interp = std::move(r.interp);
    L.steps = std::move(r.steps);
    L.converged = r.converged;
  }
  L.capped = L.interp.capped();
  L.Q = L.interp.point_count();
  L.expectation = L.interp.expectation()[0];
  for (const auto& y : L.interp.nodes()) {
    L.W += store.get(y, eta_h).work;
    if (eta_h_prev > 0) L.W_prev += store.get(y, eta_h_prev).work;
  }
  L.W /= static_cast<double>(L.Q);
  L.W_prev /= static_cast<double>(L.Q);
  return L;
}

}  // namespace detail

/// Single-level adaptive collocation: eta_h = eps/(2 C_h), eta_s = eps/(2 C_s).
inline UqReport single_level(int dim, SampleStore& store, double eps, const RateEstimates& rates, const UqOptions& opt = {}) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  rates.validate();
  UqReport R;
  R.mode = "single";
  R.dimension = dim;
  R.eps = eps;
  R.rates = rates;
  const std::size_t before = store.calls(), hits = store.hits();
  R.levels.push_back(detail::run_level(dim, store, 0, eps / (2.0 * rates.C_h), 0.0, eps / (2.0 * rates.C_s), opt));
  R.expectation = R.levels[0].expectation;
  R.samples = store.calls() - before;
  R.reused = store.hits() - hits;
  return R;
}

/// Multilevel adaptive collocation over K+1 physical tolerances with
/// reduction factor q. Level k interpolates psi(eta_h_k) - psi(eta_h_{k-1}).
inline UqReport multilevel(int dim, SampleStore& store, double eps, double q, int K, const RateEstimates& rates,
                           const UqOptions& opt = {}) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  rates.validate();
  UqReport R;
  R.mode = "multi";
  R.dimension = dim;
  R.eps = eps;
  R.q = q;
  R.K = K;
  R.rates = rates;
  const std::size_t before = store.calls(), hits = store.hits();

  // Pilot on the coarsest level fixes the scale eta_h_{-1}. The coarsest
  // tolerance depends only on eps, C_H, q and K.
  const double eta0 = std::pow(q, -K) * eps / (2.0 * rates.C_H);
  if (!(q > 0 && q < 1)) throw std::invalid_argument("reduction factor q must lie in (0,1)");
  if (eta0 > 1.0) throw std::invalid_argument("schedule infeasible: coarsest physical tolerance exceeds 1");
  UqOptions pilot_opt = opt;
  pilot_opt.traces = false;
  auto pilot = detail::run_level(dim, store, 0, eta0, 0.0, eta0, pilot_opt);
  R.pilot_points = pilot.Q;
  double em1 = std::abs(pilot.expectation);
  if (!(em1 > 0)) throw std::runtime_error("pilot expectation is zero; cannot scale the tolerance schedule");

  R.schedule = tolerance_schedule(eps, q, K, rates, em1);
  const auto& S = *R.schedule;
  for (int k = 0; k <= K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    R.levels.push_back(detail::run_level(dim, store, k, S.eta_h[ku], k == 0 ? 0.0 : S.eta_h[ku - 1], S.eta_s[ku], opt));
  }
  for (const auto& L : R.levels) R.expectation += L.expectation;
  R.samples = store.calls() - before;
  R.reused = store.hits() - hits;
  return R;
}

/// Cost summary: C = sum_k Q_k (W_k + W_{k-1}), and the asymptotic regime
/// of the multilevel cost bound.
struct CostSummary {
  double total = 0.0;
  std::vector<double> per_level;
  std::string regime;      // "s*mu<1", "s*mu=1", "s*mu>1"
  std::string prediction;  // predicted growth of the cost in eps
};

inline CostSummary cost_ledger(const std::vector<std::size_t>& Q, const std::vector<double>& W, const std::vector<double>& W_prev,
                               double s, double mu) {
  CostSummary c;
  for (std::size_t k = 0; k < Q.size(); ++k) {
    c.per_level.push_back(static_cast<double>(Q[k]) * (W[k] + W_prev[k]));
    c.total += c.per_level.back();
  }
  const double sm = s * mu;
  std::ostringstream os;
  if (std::abs(sm - 1.0) < 1e-9) {
    c.regime = "s*mu=1";
    os << "eps^-" << 1.0 / mu << " |log eps|^" << 1.0 + 1.0 / mu;
  } else if (sm < 1.0) {
    c.regime = "s*mu<1";
    os << "eps^-" << 1.0 / mu;
  } else {
    c.regime = "s*mu>1";
    os << "eps^-" << s;
  }
  c.prediction = os.str();
  return c;
}

inline CostSummary cost_ledger(const UqReport& R) {
  std::vector<std::size_t> Q;
  std::vector<double> W, Wp;
  for (const auto& L : R.levels) {
    Q.push_back(L.Q);
    W.push_back(L.W);
    Wp.push_back(L.W_prev);
  }
  return cost_ledger(Q, W, Wp, R.rates.s, R.rates.mu);
}

inline nlohmann::json to_json(const UqReport& R) {
  nlohmann::json j;
  j["mode"] = R.mode;
  j["dimension"] = R.dimension;
  j["eps"] = R.eps;
  if (R.mode == "multi") {
    j["q"] = R.q;
    j["K"] = R.K;
  }
  j["rates"] = to_json(R.rates);
  if (R.schedule) j["schedule"] = to_json(*R.schedule);
  j["expectation"] = R.expectation;
  j["levels"] = nlohmann::json::array();
  for (const auto& L : R.levels)
    j["levels"].push_back({{"k", L.k}, {"eta_h", L.eta_h}, {"eta_h_prev", L.eta_h_prev}, {"eta_s", L.eta_s}, {"Q", L.Q},
                           {"W", L.W}, {"W_prev", L.W_prev}, {"expectation", L.expectation},
                           {"converged", L.converged}, {"capped", L.capped}});
  const auto c = cost_ledger(R);
  j["cost"] = {{"total", c.total}, {"per_level", c.per_level}, {"regime", c.regime}, {"prediction", c.prediction}};
  j["samples"] = R.samples;
  j["reused"] = R.reused;
  if (R.mode == "multi") j["pilot_points"] = R.pilot_points;
  bool partial = false;
  for (const auto& L : R.levels) partial = partial || L.capped;
  j["partial"] = partial;
  return j;
}

/// Trace part of a campaign as a surrogate for post-processing.
inline TraceSurrogate make_trace_surrogate(const UqReport& R, std::vector<std::string> exit_ids, std::vector<double> grid) {
  TraceSurrogate s;
  s.exit_ids = std::move(exit_ids);
  s.grid = std::move(grid);
  const std::size_t n = s.exit_ids.size() * s.grid.size();
  for (const auto& L : R.levels) {
    if (L.interp.target_size() != 1 + n) throw std::invalid_argument("campaign did not keep exit-pressure traces");
    s.levels.push_back(L.interp.slice(1, n));
  }
  return s;
}

}  // namespace pipeflow
