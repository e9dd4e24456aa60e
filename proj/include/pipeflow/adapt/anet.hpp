#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/adapt/estimate.hpp"
#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/types.hpp"
#include "pipeflow/solver/simulate.hpp"

namespace pipeflow {

enum class ActionKind { halve_dt, halve_dx, promote, double_dt, coarsen_dx, demote };

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::halve_dt: return "halve_dt";
    case ActionKind::halve_dx: return "halve_dx";
    case ActionKind::promote: return "promote";
    case ActionKind::double_dt: return "double_dt";
    case ActionKind::coarsen_dx: return "coarsen_dx";
    case ActionKind::demote: return "demote";
  }
  return "?";
}

struct Action {
  ActionKind kind = ActionKind::halve_dt;
  std::size_t edge = 0;  // unused for time-step actions
  double reduction = 0.0;
  double cost = 0.0;

  bool operator==(const Action& o) const { return kind == o.kind && edge == o.edge; }
};

struct RefinementPlan {
  std::vector<Action> actions;
  bool empty() const { return actions.empty(); }
};

struct AdaptLimits {
  double theta = 0.9;              // safety factor on the per-slab budget
  double min_dx = 1.0;             // m
  double min_dt = 0.5;             // s
  long max_cells = 400000;         // over all pipes
  int max_iterations = 40;         // adaption loops per slab
  double coarsen_fraction = 0.1;   // of budget / #components
};

inline double slab_budget(const Scenario& sc, double eta_h, const AdaptLimits& lim = {}) {
  return lim.theta * eta_h / sc.sim.slabs;
}

namespace detail {

inline long total_cells(const Discretization& d) {
  long n = 0;
  for (int c : d.cells) n += c;
  return n;
}

/// Predicted residual estimate after applying the given action counts.
struct Prediction {
  double t = 0.0;
  std::vector<double> x, m;
  double total() const {
    double s = t;
    for (double v : x) s += v;
    for (double v : m) s += v;
    return s;
  }
};

inline Prediction predict(const ErrorEstimate& est, const std::vector<Action>& acts) {
  Prediction p;
  p.t = std::abs(est.eta_t_total);
  p.x = est.eta_x;
  p.m = est.eta_m;
  for (auto& v : p.x)
    if (!std::isfinite(v)) v = 0.0;  // unreliable pipes are refined unconditionally
  for (const auto& a : acts) {
    if (a.kind == ActionKind::halve_dt) p.t *= 0.5;
    else if (a.kind == ActionKind::halve_dx) p.x[a.edge] *= 0.5;
    else if (a.kind == ActionKind::promote) p.m[a.edge] = 0.0;
  }
  return p;
}

}  // namespace detail

/// Greedy selection of refinement actions by predicted estimate reduction
/// per unit of predicted work, followed by a pruning pass that drops actions
/// not needed to meet the budget. Throws ToleranceUnreachable when the
/// budget is missed and no admissible action remains.
inline RefinementPlan mark_and_refine(const ErrorEstimate& est, double eta_h, const Discretization& disc,
                                      const Scenario& sc, const AdaptLimits& lim = {}) {
  const double budget = slab_budget(sc, eta_h, lim);
  RefinementPlan plan;
  if (est.grand_total < budget) return plan;

  const auto& net = sc.network;
  const double slab_len = sc.sim.horizon / sc.sim.slabs;
  const double steps = std::ceil(slab_len / disc.dt - 1e-9);
  std::vector<Action> chosen;

  // Unreliable space estimates force refinement of that pipe.
  for (std::size_t e = 0; e < est.eta_x.size(); ++e)
    if (!std::isfinite(est.eta_x[e])) chosen.push_back({ActionKind::halve_dx, e, 0.0, 0.0});

  auto state_of = [&](const std::vector<Action>& acts) {
    Discretization d = disc;
    int dt_halvings = 0;
    std::vector<bool> promoted(net.edges.size(), false);
    for (const auto& a : acts) {
      if (a.kind == ActionKind::halve_dt) {
        d.dt *= 0.5;
        ++dt_halvings;
      } else if (a.kind == ActionKind::halve_dx) {
        d.cells[a.edge] *= 2;
      } else if (a.kind == ActionKind::promote) {
        promoted[a.edge] = true;
        if (d.model[a.edge] == ModelId::M3) {
          d.model[a.edge] = ModelId::M2;
          d.cells[a.edge] = cells_for(std::get<Pipe>(net.edges[a.edge].data), std::get<Pipe>(net.edges[a.edge].data).dx);
        } else {
          d.model[a.edge] = ModelId::M1;
        }
      }
    }
    return std::make_tuple(d, dt_halvings, promoted);
  };

  for (int guard = 0; guard < 10000; ++guard) {
    auto pred = detail::predict(est, chosen);
    if (pred.total() < budget) break;
    auto [d, halvings, promoted] = state_of(chosen);
    const double nsteps = steps * std::pow(2.0, halvings);
    const long cells = detail::total_cells(d);

    std::vector<Action> cand;
    if (d.dt * 0.5 >= lim.min_dt && pred.t > 0)
      cand.push_back({ActionKind::halve_dt, 0, pred.t * 0.5, nsteps * step_work(net, d)});
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      const auto* p = std::get_if<Pipe>(&net.edges[e].data);
      if (!p) continue;
      const double w = model_weight(d.model[e]);
      if (d.model[e] != ModelId::M3 && pred.x[e] > 0 && p->length / (2.0 * d.cells[e]) >= lim.min_dx &&
          cells + d.cells[e] <= lim.max_cells)
        cand.push_back({ActionKind::halve_dx, e, pred.x[e] * 0.5, nsteps * d.cells[e] * w});
      if (d.model[e] != ModelId::M1 && !promoted[e] && pred.m[e] > 0) {
        double extra;
        if (d.model[e] == ModelId::M3) {
          int nc = cells_for(*p, p->dx);
          extra = nsteps * (nc * model_weight(ModelId::M2) - d.cells[e] * w);
        } else {
          extra = nsteps * d.cells[e] * (model_weight(ModelId::M1) - w);
        }
        cand.push_back({ActionKind::promote, e, pred.m[e], std::max(extra, 1.0)});
      }
    }
    if (cand.empty()) break;
    auto better = [&](const Action& a, const Action& b) {
      double ra = a.reduction / a.cost, rb = b.reduction / b.cost;
      if (ra != rb) return ra > rb;
      if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
      return net.edges[a.edge].id < net.edges[b.edge].id;
    };
    chosen.push_back(*std::min_element(cand.begin(), cand.end(), [&](const Action& a, const Action& b) { return better(a, b); }));
  }

  // Pruning: drop actions (latest first) whose removal keeps the budget.
  if (detail::predict(est, chosen).total() < budget) {
    for (std::size_t i = chosen.size(); i-- > 0;) {
      if (chosen[i].kind == ActionKind::halve_dx && !std::isfinite(est.eta_x[chosen[i].edge])) continue;
      auto trial = chosen;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
      if (detail::predict(est, trial).total() < budget) chosen = std::move(trial);
    }
  }
  if (chosen.empty())
    throw ToleranceUnreachable("tolerance unreachable: estimate " + std::to_string(est.grand_total) +
                               " exceeds slab budget " + std::to_string(budget) + " and no refinement is admissible");
  plan.actions = std::move(chosen);
  return plan;
}

/// Applies refinement or coarsening actions to a discretization.
inline Discretization apply_plan(const Discretization& disc, const RefinementPlan& plan, const Scenario& sc) {
  Discretization d = disc;
  const auto& net = sc.network;
  const double slab_len = sc.sim.horizon / sc.sim.slabs;
  for (const auto& a : plan.actions) {
    switch (a.kind) {
      case ActionKind::halve_dt: d.dt *= 0.5; break;
      case ActionKind::double_dt: d.dt = std::min(2.0 * d.dt, slab_len); break;
      case ActionKind::halve_dx: d.cells[a.edge] *= 2; break;
      case ActionKind::coarsen_dx: d.cells[a.edge] = std::max(1, (d.cells[a.edge] + 1) / 2); break;
      case ActionKind::promote: {
        const auto& p = std::get<Pipe>(net.edges[a.edge].data);
        if (d.model[a.edge] == ModelId::M3) {
          d.model[a.edge] = ModelId::M2;
          d.cells[a.edge] = cells_for(p, p.dx);
        } else if (d.model[a.edge] == ModelId::M2) {
          d.model[a.edge] = ModelId::M1;
        }
        break;
      }
      case ActionKind::demote:
        if (d.model[a.edge] == ModelId::M1) d.model[a.edge] = ModelId::M2;
        else if (d.model[a.edge] == ModelId::M2) d.model[a.edge] = ModelId::M3;
        break;
    }
  }
  return d;
}

/// Coarsening after an accepted slab: every component whose estimate is
/// far below its share of the budget is coarsened one level.
inline RefinementPlan coarsening_plan(const ErrorEstimate& est, double eta_h, const Discretization& disc,
                                      const Scenario& sc, const AdaptLimits& lim = {}) {
  const auto& net = sc.network;
  std::size_t npipes = 0;
  for (const auto& e : net.edges) npipes += e.is_pipe();
  const double thresh = lim.coarsen_fraction * slab_budget(sc, eta_h, lim) / static_cast<double>(1 + 2 * npipes);
  const double slab_len = sc.sim.horizon / sc.sim.slabs;
  RefinementPlan plan;
  if (std::abs(est.eta_t_total) < thresh && disc.dt < slab_len) plan.actions.push_back({ActionKind::double_dt, 0, 0, 0});
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (!net.edges[e].is_pipe()) continue;
    if (disc.cells[e] > 1 && est.eta_x[e] < thresh) plan.actions.push_back({ActionKind::coarsen_dx, e, 0, 0});
    if (disc.model[e] != ModelId::M3 && est.eta_m_down[e] < thresh) plan.actions.push_back({ActionKind::demote, e, 0, 0});
  }
  return plan;
}

struct AnetOptions {
  AdaptLimits limits;
  bool coarsen = true;
  std::ostream* log = nullptr;  // JSON lines
};

struct ModelSplit {
  double m1 = 0, m2 = 0, m3 = 0;  // percent of pipe-slabs
  std::string str() const;
};

inline std::string ModelSplit::str() const {
  auto f = [](double v) {
    char b[16];
    std::snprintf(b, sizeof b, "%.0f", v);
    return std::string(b);
  };
  return f(m1) + ":" + f(m2) + ":" + f(m3);
}

struct SampleResult {
  double psi = 0.0;
  Traces traces;
  double work = 0.0;
  double achieved = 0.0;                      // sum of accepted slab estimates
  std::vector<Discretization> discs;          // accepted per slab
  std::vector<double> slab_estimates;
  int iterations = 0;
  double dt_min = 0, dt_max = 0, dx_min = 0, dx_max = 0;
  ModelSplit split;
};

namespace detail {

inline nlohmann::json log_record(const Scenario& sc, int slab, int iter, const ErrorEstimate& est,
                                 const RefinementPlan& plan, double work, const Discretization& d) {
  nlohmann::json j;
  j["slab"] = slab;
  j["iteration"] = iter;
  j["dt"] = d.dt;
  j["estimate"] = {{"total", est.grand_total}, {"t", est.total_t}, {"x", est.total_x}, {"m", est.total_m}};
  nlohmann::json pipes = nlohmann::json::object();
  for (std::size_t e = 0; e < sc.network.edges.size(); ++e) {
    if (!sc.network.edges[e].is_pipe()) continue;
    pipes[sc.network.edges[e].id] = {{"model", to_string(d.model[e])},
                                     {"cells", d.cells[e]},
                                     {"eta_x", std::isfinite(est.eta_x[e]) ? nlohmann::json(est.eta_x[e]) : nlohmann::json("unreliable")},
                                     {"eta_t", est.eta_t[e]},
                                     {"eta_m", est.eta_m[e]}};
  }
  j["pipes"] = std::move(pipes);
  j["plan"] = nlohmann::json::array();
  for (const auto& a : plan.actions) {
    nlohmann::json aj = {{"action", to_string(a.kind)}};
    if (a.kind != ActionKind::halve_dt && a.kind != ActionKind::double_dt) aj["pipe"] = sc.network.edges[a.edge].id;
    j["plan"].push_back(std::move(aj));
  }
  j["work"] = work;
  return j;
}

inline void finish_stats(const Scenario& sc, SampleResult& r) {
  const auto& net = sc.network;
  r.dt_min = std::numeric_limits<double>::infinity();
  r.dx_min = std::numeric_limits<double>::infinity();
  r.dt_max = r.dx_max = 0.0;
  double n1 = 0, n2 = 0, n3 = 0;
  for (const auto& d : r.discs) {
    r.dt_min = std::min(r.dt_min, d.dt);
    r.dt_max = std::max(r.dt_max, d.dt);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      if (!net.edges[e].is_pipe()) continue;
      const double dx = d.dx(net, e);
      r.dx_min = std::min(r.dx_min, dx);
      r.dx_max = std::max(r.dx_max, dx);
      (d.model[e] == ModelId::M1 ? n1 : d.model[e] == ModelId::M2 ? n2 : n3) += 1;
    }
  }
  const double tot = n1 + n2 + n3;
  if (tot > 0) r.split = {100 * n1 / tot, 100 * n2 / tot, 100 * n3 / tot};
}

}  // namespace detail

/// Adaptive deterministic solve: for every slab, SOLVE, ESTIMATE, MARK and
/// REFINE until the slab estimate meets its share of eta_h, then restart the
/// next slab from the accepted end state.
inline SampleResult anet(const Scenario& sc, std::span<const double> y, double eta_h, const AnetOptions& opt = {}) {
  if (!(eta_h > 0)) throw std::invalid_argument("eta_h must be positive");
  if (y.size() != static_cast<std::size_t>(sc.dimension)) throw std::invalid_argument("parameter dimension mismatch");
  for (double v : y)
    if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("parameter point outside [-1,1]^N");
  const auto& lim = opt.limits;
  const double budget = slab_budget(sc, eta_h, lim);
  std::vector<double> yy(y.begin(), y.end());

  SampleResult res;
  TraceBuilder tb(sc);
  Discretization disc = initial_discretization(sc);
  NetworkState prev_end;

  for (int i = 0; i < sc.sim.slabs; ++i) {
    SlabRun cached;
    bool have_cached = false;
    bool accepted = false;
    ErrorEstimate est;
    SlabRun run;
    for (int it = 0; it < lim.max_iterations; ++it) {
      NetworkState start;
      if (i == 0) {
        start = steady_state(sc, yy, 0.0, disc);
        res.work += step_work(sc.network, disc);
      } else {
        start = remap_state(prev_end, sc.network, disc, sc.gas);
      }
      if (have_cached) {
        run = std::move(cached);
        have_cached = false;
      } else {
        run = step_slab(start, disc, sc, yy, i);
        res.work += run.work;
      }
      SlabContext ctx;
      ctx.scenario = &sc;
      ctx.y = yy;
      ctx.slab = i;
      ctx.disc = disc;
      ctx.start = start;
      ctx.run = &run;
      est = estimate_errors(ctx);
      res.work += ctx.extra_work;
      ++res.iterations;

      RefinementPlan plan;
      if (est.grand_total < budget) {
        accepted = true;
      } else {
        plan = mark_and_refine(est, eta_h, disc, sc, lim);
      }
      if (opt.log) *opt.log << detail::log_record(sc, i, it, est, plan, res.work, disc).dump() << "\n";
      if (accepted) break;
      if (plan.actions.size() == 1 && plan.actions[0].kind == ActionKind::halve_dt) {
        cached = std::move(ctx.half_run);
        have_cached = true;
      }
      disc = apply_plan(disc, plan, sc);
    }
    if (!accepted)
      throw ToleranceUnreachable("tolerance unreachable: slab " + std::to_string(i) + " not accepted after " +
                                 std::to_string(lim.max_iterations) + " iterations (estimate " +
                                 std::to_string(est.grand_total) + ", budget " + std::to_string(budget) + ")");
    tb.append(run);
    prev_end = run.end;
    res.discs.push_back(disc);
    res.slab_estimates.push_back(est.grand_total);
    res.achieved += est.grand_total;
    if (opt.coarsen && i + 1 < sc.sim.slabs) disc = apply_plan(disc, coarsening_plan(est, eta_h, disc, sc, lim), sc);
  }
  res.traces = tb.finish();
  res.traces.work = res.work;
  res.psi = qoi_energy(res.traces, sc);
  detail::finish_stats(sc, res);
  return res;
}

}  // namespace pipeflow
