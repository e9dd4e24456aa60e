#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/types.hpp"
#include "pipeflow/solver/simulate.hpp"

namespace pipeflow {

/// Per-pipe error contributions in QoI units. eta_t is stored both as the
/// slab-global signed value and as per-pipe shares; eta_x and eta_m are
/// magnitudes of sensitivity-weighted proxies and carry no sign.
struct ErrorEstimate {
  std::vector<double> eta_x, eta_t, eta_m;  // per edge (zero for non-pipes)
  std::vector<double> eta_m_down;           // what coarsening the model would cost
  std::vector<bool> unreliable;             // fine re-solve failed for this pipe
  double eta_t_total = 0.0;                 // signed time-step estimate
  double total_x = 0.0, total_t = 0.0, total_m = 0.0;
  double grand_total = 0.0;

  void finalize() {
    total_x = total_m = 0.0;
    for (double v : eta_x) total_x += v;
    for (double v : eta_m) total_m += v;
    total_t = eta_t_total;
    grand_total = std::abs(total_x + total_t + total_m);
  }

  /// Sum of absolute parts, the quantity the marking step reduces.
  double absolute_total() const { return std::abs(eta_t_total) + total_x + total_m; }
};

/// Inputs for estimating one slab.
struct SlabContext {
  const Scenario* scenario = nullptr;
  std::vector<double> y;
  int slab = 0;
  Discretization disc;
  NetworkState start;  // on disc's meshes
  const SlabRun* run = nullptr;
  // Outputs: the half-step solve (reusable when the plan only halves dt)
  // and the work spent on estimator solves.
  SlabRun half_run;
  double extra_work = 0.0;
};

/// QoI contribution of one slab from per-step compressor power.
inline double slab_qoi(const Scenario& sc, const SlabRun& run) {
  return qoi_energy_series(sc, run.times, run.power);
}

namespace detail {

/// Sensitivity of the QoI integrand to compressor mass flow (per kg/s) and
/// to pressure (per Pa), maximized over compressors, per step.
struct Sensitivity {
  std::vector<double> s_m, s_p;
};

inline Sensitivity sensitivity(const Scenario& sc, const SlabRun& run) {
  const auto& net = sc.network;
  Sensitivity s;
  const std::size_t n = run.times.size();
  s.s_m.assign(n, 0.0);
  s.s_p.assign(n, 0.0);
  std::size_t ci = 0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const auto* cp = std::get_if<Compressor>(&net.edges[e].data);
    if (!cp) continue;
    const std::size_t c = ci++;
    const CompressorCost* cost = nullptr;
    for (const auto& cc : sc.qoi.compressors)
      if (cc.id == net.edges[e].id) cost = &cc;
    if (!cost) continue;
    const double kappa = (cp->gamma - 1.0) / cp->gamma;
    for (std::size_t k = 0; k < n; ++k) {
      const double G = run.power[c][k];
      const double a = sc.qoi.alpha * std::abs(cost->g1 + 2.0 * cost->g2 * G);
      const double pin = run.comp_p_in[c][k], pout = run.comp_p_out[c][k], qin = run.comp_q_in[c][k];
      const double r = pout / pin;
      const double sm = a * cp->c_f * sc.gas.z * std::abs(std::pow(r, kappa) - 1.0) / sc.gas.rho0;
      const double sp = a * cp->c_f * std::abs(qin) * sc.gas.z * kappa * std::pow(r, kappa - 1.0) * r / pin;
      s.s_m[k] = std::max(s.s_m[k], sm);
      s.s_p[k] = std::max(s.s_p[k], sp);
    }
  }
  return s;
}

/// Integral over the slab of |S_m dm| + |S_p dp| with per-step values
/// (implicit-Euler weighting: the step value times the step length).
inline double weighted_integral(const Sensitivity& S, const std::vector<double>& times, const std::vector<double>& dm,
                                const std::vector<double>& dp) {
  double acc = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const double h = times[k] - times[k - 1];
    acc += h * (S.s_m[k] * std::abs(dm[k]) + S.s_p[k] * std::abs(dp[k]));
  }
  return acc;
}

/// Re-solves one pipe on a refined mesh with boundary data frozen from the
/// network solution: inlet pressure and outlet mass flux per step.
inline SlabRun fine_pipe_run(const Scenario& sc, std::size_t e, const SlabContext& ctx, int factor) {
  const auto& edge = sc.network.edges[e];
  const Pipe& pipe = std::get<Pipe>(edge.data);
  Network mini;
  mini.nodes = {{"a", NodeKind::source}, {"b", NodeKind::exit}};
  mini.edges = {{edge.id, "a", "b", pipe}};
  Discretization d;
  d.cells = {ctx.disc.cells[e]};
  d.model = {ctx.disc.model[e]};
  d.dt = ctx.disc.dt;

  NetworkState s0;
  s0.t = ctx.start.t;
  s0.node_p = {ctx.start.rho[e].front() * sc.gas.sound_speed2(), ctx.start.rho[e].back() * sc.gas.sound_speed2()};
  s0.rho = {ctx.start.rho[e]};
  s0.flux = {ctx.start.flux[e]};
  s0.edge_flow = {0.0};
  Discretization fine = d;
  fine.cells[0] = d.cells[0] * factor;
  s0 = remap_state(s0, mini, fine, sc.gas);

  const auto& ps = ctx.run->pipes[e];
  const auto& times = ctx.run->times;
  const double c = sc.gas.sound_speed();
  const double A = pipe.area();
  FrameFn frames = [&](double t, double) {
    auto it = std::lower_bound(times.begin(), times.end(), t - 1e-9 * (1.0 + std::abs(t)));
    std::size_t k = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - times.begin(), static_cast<std::ptrdiff_t>(times.size()) - 1));
    Frame f;
    f.source_u = {ps.p_from[k] / NetworkSystem::P0, 0.0};
    f.demand = {0.0, A * ps.q_to[k] * c / NetworkSystem::P0};
    f.jump = {0.0};
    f.valve = {ValveState::open};
    return f;
  };
  return run_steps(mini, sc.gas, fine, s0, times, frames);
}

}  // namespace detail

/// Estimates time, space and model errors of a solved slab.
inline ErrorEstimate estimate_errors(SlabContext& ctx) {
  const Scenario& sc = *ctx.scenario;
  const auto& net = sc.network;
  const SlabRun& run = *ctx.run;
  const std::size_t E = net.edges.size();
  const double c2 = sc.gas.sound_speed2();
  ErrorEstimate est;
  est.eta_x.assign(E, 0.0);
  est.eta_t.assign(E, 0.0);
  est.eta_m.assign(E, 0.0);
  est.eta_m_down.assign(E, 0.0);
  est.unreliable.assign(E, false);

  const auto S = detail::sensitivity(sc, run);
  const auto& times = run.times;
  const std::size_t n = times.size();

  // Time: Richardson pair (dt, dt/2) over the whole slab.
  Discretization half = ctx.disc;
  half.dt = ctx.disc.dt / 2.0;
  ctx.half_run = step_slab(ctx.start, half, sc, ctx.y, ctx.slab);
  ctx.extra_work += ctx.half_run.work;
  est.eta_t_total = slab_qoi(sc, ctx.half_run) - slab_qoi(sc, run);

  std::vector<double> storage(E, 0.0);
  double storage_sum = 0.0;
  std::size_t npipes = 0;
  for (std::size_t e = 0; e < E; ++e) {
    const auto* p = std::get_if<Pipe>(&net.edges[e].data);
    if (!p) continue;
    ++npipes;
    const auto& ps = run.pipes[e];
    const double A = p->area();
    // Storage rate (kg/s) and inertia (Pa) per step, and the kinetic
    // pressure difference along the pipe.
    std::vector<double> dm(n, 0.0), dp(n, 0.0), dk(n, 0.0), zero(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) {
      const double h = times[k] - times[k - 1];
      dm[k] = A * p->length / c2 * (ps.p_mean[k] - ps.p_mean[k - 1]) / h;
      dp[k] = p->length * (ps.q_mean[k] - ps.q_mean[k - 1]) / h;
      dk[k] = ps.kin_to[k] - ps.kin_from[k];
      storage[e] += std::abs(dm[k]) * h;
    }
    storage_sum += storage[e];
    const double est_storage = detail::weighted_integral(S, times, dm, dp);
    const double est_kinetic = detail::weighted_integral(S, times, zero, dk);

    switch (ctx.disc.model[e]) {
      case ModelId::M3:
        est.eta_m[e] = est_storage;
        est.eta_m_down[e] = std::numeric_limits<double>::infinity();
        break;
      case ModelId::M2:
        est.eta_m[e] = est_kinetic;
        est.eta_m_down[e] = est_storage;
        break;
      case ModelId::M1:
        est.eta_m[e] = 0.0;
        est.eta_m_down[e] = est_kinetic;
        break;
    }

    // Space: the algebraic model is exact on any mesh.
    if (ctx.disc.model[e] != ModelId::M3) {
      try {
        SlabRun fine = detail::fine_pipe_run(sc, e, ctx, 2);
        ctx.extra_work += fine.work;
        const auto& fp = fine.pipes[0];
        std::vector<double> dq(n, 0.0), dpo(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
          dq[k] = A * (fp.q_from[k] - ps.q_from[k]);
          dpo[k] = fp.p_to[k] - ps.p_to[k];
        }
        est.eta_x[e] = detail::weighted_integral(S, times, dq, dpo);
      } catch (const SolverError&) {
        est.unreliable[e] = true;
        est.eta_x[e] = std::numeric_limits<double>::infinity();
      }
    }
  }
  for (std::size_t e = 0; e < E; ++e) {
    if (!net.edges[e].is_pipe()) continue;
    double w = storage_sum > 0 ? storage[e] / storage_sum : 1.0 / static_cast<double>(npipes);
    est.eta_t[e] = est.eta_t_total * w;
  }
  est.finalize();
  return est;
}

}  // namespace pipeflow
