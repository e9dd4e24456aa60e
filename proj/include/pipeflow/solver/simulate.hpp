#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/schedule.hpp"
#include "pipeflow/netmodel/types.hpp"
#include "pipeflow/solver/physics.hpp"
#include "pipeflow/solver/state.hpp"
#include "pipeflow/solver/system.hpp"

namespace pipeflow {

inline constexpr int kTraceGridPoints = 256;

/// Work weight of one cell-step for each model (M3:M2:M1 = 1:2:4).
inline double model_weight(ModelId m) {
  switch (m) {
    case ModelId::M3: return 1.0;
    case ModelId::M2: return 2.0;
    case ModelId::M1: return 4.0;
  }
  return 1.0;
}

inline double step_work(const Network& net, const Discretization& d) {
  double w = 0.0;
  for (std::size_t e = 0; e < net.edges.size(); ++e)
    if (net.edges[e].is_pipe()) w += d.cells[e] * model_weight(d.model[e]);
  return w;
}

inline double slab_start(const Scenario& sc, int slab) { return sc.sim.horizon * slab / sc.sim.slabs; }
inline double slab_end(const Scenario& sc, int slab) { return sc.sim.horizon * (slab + 1) / sc.sim.slabs; }

/// Boundary frame at time t; valve states are taken at tv.
inline Frame boundary_frame(const Scenario& sc, std::span<const double> y, double t, double tv) {
  const auto& net = sc.network;
  Frame f;
  f.source_u.assign(net.nodes.size(), 0.0);
  f.demand.assign(net.nodes.size(), 0.0);
  f.jump.assign(net.edges.size(), 0.0);
  f.valve.assign(net.edges.size(), ValveState::open);
  const double c = sc.gas.sound_speed();
  for (std::size_t v = 0; v < net.nodes.size(); ++v) {
    if (net.nodes[v].kind == NodeKind::junction) continue;
    const auto* s = sc.schedule_for(net.nodes[v].id);
    if (!s) throw ScenarioError({{"missing-schedule", net.nodes[v].id, "boundary node has no schedule"}});
    double tc = std::clamp(t, s->nominal.first_time(), s->nominal.last_time());
    double val = boundary_value(*s, tc, y);
    if (net.nodes[v].kind == NodeKind::source) f.source_u[v] = val * kPascalPerBar / NetworkSystem::P0;
    else f.demand[v] = sc.gas.rho0 * val * c / NetworkSystem::P0;
  }
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (const auto* cp = std::get_if<Compressor>(&net.edges[e].data)) f.jump[e] = cp->jump(t) * kPascalPerBar / NetworkSystem::P0;
    else if (const auto* vl = std::get_if<Valve>(&net.edges[e].data)) f.valve[e] = vl->state_at(tv);
  }
  return f;
}

/// Times inside (a, b) where boundary data has a kink or a valve switches.
inline std::vector<double> event_times(const Scenario& sc, double a, double b) {
  std::vector<double> out;
  auto take = [&](double t) {
    if (t > a && t < b) out.push_back(t);
  };
  for (const auto& s : sc.schedules)
    for (double t : schedule_knots(s)) take(t);
  for (const auto& e : sc.network.edges) {
    if (const auto* c = std::get_if<Compressor>(&e.data))
      for (const auto& bp : c->jump.points()) take(bp.time);
    else if (const auto* v = std::get_if<Valve>(&e.data))
      for (const auto& ev : v->events) take(ev.time);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Step grid of a slab: uniform steps of size dt merged with event times.
inline std::vector<double> slab_times(const Scenario& sc, int slab, double dt) {
  const double a = slab_start(sc, slab), b = slab_end(sc, slab);
  const double len = b - a;
  const long n = std::max(1L, static_cast<long>(std::ceil(len / dt - 1e-9)));
  std::vector<double> t;
  t.reserve(static_cast<std::size_t>(n) + 8);
  for (long k = 0; k <= n; ++k) t.push_back(k == n ? b : a + len * static_cast<double>(k) / static_cast<double>(n));
  for (double ev : event_times(sc, a, b)) t.push_back(ev);
  std::sort(t.begin(), t.end());
  const double eps = 1e-9 * len;
  std::vector<double> out;
  for (double x : t)
    if (out.empty() || x - out.back() > eps) out.push_back(x);
  out.back() = b;
  return out;
}

/// Per-step observations of one pipe.
struct PipeSeries {
  std::vector<double> p_from, p_to;     // Pa
  std::vector<double> q_from, q_to;     // kg/(m^2 s)
  std::vector<double> p_mean, q_mean;   // length averages
  std::vector<double> kin_from, kin_to; // q^2/rho, Pa
};

/// Everything recorded while advancing over one slab.
struct SlabRun {
  NetworkState end;
  std::vector<double> times;                  // step times including the start
  std::vector<std::vector<double>> power;     // per compressor (network order), W
  std::vector<std::vector<double>> comp_p_in, comp_p_out;  // Pa
  std::vector<std::vector<double>> comp_q_in;              // m^3/s
  std::vector<std::vector<double>> exit_p;    // per exit node, Pa
  std::vector<PipeSeries> pipes;              // per edge; empty for non-pipes
  double work = 0.0;
  int newton_iterations = 0;
  double max_balance_residual = 0.0;  // relative to the largest edge mass flow
  double max_jump_residual = 0.0;     // Pa
};

namespace detail {

inline void record(const NetworkSystem& sys, const Eigen::VectorXd& x, const GasProperties& gas, SlabRun& run) {
  const auto& net = sys.network();
  const double P0 = NetworkSystem::P0, c = sys.sound_speed();
  std::size_t ci = 0, xi = 0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (const auto* cp = std::get_if<Compressor>(&net.edges[e].data)) {
      double pin = x[static_cast<Eigen::Index>(sys.from_node(e))] * P0;
      double pout = x[static_cast<Eigen::Index>(sys.to_node(e))] * P0;
      double m = x[static_cast<Eigen::Index>(sys.flow_index(e))] * P0 / c;
      run.power[ci].push_back(compressor_power(pin, pout, m / gas.rho0, *cp, gas));
      run.comp_p_in[ci].push_back(pin);
      run.comp_p_out[ci].push_back(pout);
      run.comp_q_in[ci].push_back(m / gas.rho0);
      ++ci;
    } else if (const auto* p = std::get_if<Pipe>(&net.edges[e].data)) {
      auto& ps = run.pipes[e];
      const int n = sys.cells(e);
      auto U = [&](int k) { return x[static_cast<Eigen::Index>(sys.u_index(e, k))] * P0; };
      auto Q = [&](int k) { return x[static_cast<Eigen::Index>(sys.w_index(e, k))] * P0 / c; };
      ps.p_from.push_back(U(0));
      ps.p_to.push_back(U(n));
      ps.q_from.push_back(Q(0));
      ps.q_to.push_back(Q(n));
      double pm = 0.0, qm = 0.0;
      for (int k = 0; k < n; ++k) {
        pm += 0.5 * (U(k) + U(k + 1));
        qm += 0.5 * (Q(k) + Q(k + 1));
      }
      ps.p_mean.push_back(pm / n);
      ps.q_mean.push_back(qm / n);
      const double c2 = gas.sound_speed2();
      ps.kin_from.push_back(Q(0) * Q(0) * c2 / U(0));
      ps.kin_to.push_back(Q(n) * Q(n) * c2 / U(n));
      (void)p;
    }
  }
  for (std::size_t v = 0; v < net.nodes.size(); ++v)
    if (net.nodes[v].kind == NodeKind::exit) run.exit_p[xi++].push_back(x[static_cast<Eigen::Index>(v)] * P0);
}

inline void check_coupling(const NetworkSystem& sys, const Eigen::VectorXd& x, const Frame& fr, SlabRun& run) {
  const auto& net = sys.network();
  std::vector<double> bal(net.nodes.size(), 0.0);
  double fmax = 0.0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    double a = sys.edge_mass(x, e, 0), b = sys.edge_mass(x, e, 1);
    bal[sys.from_node(e)] -= a;
    bal[sys.to_node(e)] += b;
    fmax = std::max({fmax, std::abs(a), std::abs(b)});
    if (net.edges[e].is_compressor()) {
      double r = (x[static_cast<Eigen::Index>(sys.to_node(e))] - x[static_cast<Eigen::Index>(sys.from_node(e))] -
                  fr.jump[e]) * NetworkSystem::P0;
      run.max_jump_residual = std::max(run.max_jump_residual, std::abs(r));
    }
  }
  for (std::size_t v = 0; v < net.nodes.size(); ++v) {
    if (net.nodes[v].kind == NodeKind::source) continue;
    fmax = std::max(fmax, std::abs(fr.demand[v]));
  }
  if (fmax == 0.0) fmax = 1.0;
  for (std::size_t v = 0; v < net.nodes.size(); ++v) {
    if (net.nodes[v].kind == NodeKind::source) continue;
    run.max_balance_residual = std::max(run.max_balance_residual, std::abs(bal[v] - fr.demand[v]) / fmax);
  }
}

}  // namespace detail

using FrameFn = std::function<Frame(double t, double t_valve)>;

/// Advances `start` over the given step times with implicit steps on a
/// fixed discretization. Generic over the source of boundary data.
inline SlabRun run_steps(const Network& net, const GasProperties& gas, const Discretization& disc,
                         const NetworkState& start, const std::vector<double>& times, const FrameFn& frame) {
  NetworkSystem sys(net, gas, disc);
  SlabRun run;
  run.times = times;
  std::size_t ncomp = 0, nexit = 0;
  for (const auto& e : net.edges) ncomp += e.is_compressor();
  for (const auto& n : net.nodes) nexit += n.kind == NodeKind::exit;
  run.power.resize(ncomp);
  run.comp_p_in.resize(ncomp);
  run.comp_p_out.resize(ncomp);
  run.comp_q_in.resize(ncomp);
  run.exit_p.resize(nexit);
  run.pipes.resize(net.edges.size());

  Eigen::VectorXd x = sys.pack(start), xold;
  // The start state is recorded as-is (it is the previous slab's end).
  detail::record(sys, x, gas, run);
  const double wstep = step_work(net, disc);
  for (std::size_t n = 1; n < times.size(); ++n) {
    const double dt = times[n] - times[n - 1];
    Frame fr = frame(times[n], 0.5 * (times[n] + times[n - 1]));
    xold = x;
    run.newton_iterations += sys.newton(x, &xold, dt, fr, static_cast<long>(n));
    detail::check_coupling(sys, x, fr, run);
    detail::record(sys, x, gas, run);
    run.work += wstep;
  }
  run.end = sys.unpack(x, times.back());
  return run;
}

inline FrameFn scenario_frames(const Scenario& sc, std::span<const double> y) {
  std::vector<double> yy(y.begin(), y.end());
  return [&sc, yy](double t, double tv) { return boundary_frame(sc, yy, t, tv); };
}

/// Advances a state over slab `slab` (pre: state.t equals the slab start).
inline SlabRun step_slab(const NetworkState& state, const Discretization& disc, const Scenario& sc,
                         std::span<const double> y, int slab) {
  return run_steps(sc.network, sc.gas, disc, state, slab_times(sc, slab, disc.dt), scenario_frames(sc, y));
}

/// Stationary state for the boundary data at time t. Pipes keep their
/// assigned models, so the result is a fixed point of the transient scheme.
inline NetworkState steady_state(const Scenario& sc, std::span<const double> y, double t, const Discretization& disc) {
  const auto& net = sc.network;
  Frame fr = boundary_frame(sc, y, t, t);
  double guess = 0.0;
  int nsrc = 0;
  for (std::size_t v = 0; v < net.nodes.size(); ++v)
    if (net.nodes[v].kind == NodeKind::source) {
      guess += fr.source_u[v];
      ++nsrc;
    }
  if (nsrc == 0) throw SolverError("network has no pressure source");
  guess /= nsrc;

  // Stage 1: stationary algebraic model; stage 2 adds kinetic terms if any
  // pipe carries the full model.
  Discretization d3 = disc;
  std::fill(d3.model.begin(), d3.model.end(), ModelId::M3);
  NetworkSystem s3(net, sc.gas, d3);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s3.size()));
  for (std::size_t v = 0; v < net.nodes.size(); ++v) x[static_cast<Eigen::Index>(v)] = guess;
  for (std::size_t e = 0; e < net.edges.size(); ++e)
    if (net.edges[e].is_pipe())
      for (int k = 1; k < s3.cells(e); ++k) x[static_cast<Eigen::Index>(s3.u_index(e, k))] = guess;
  s3.newton(x, nullptr, 0.0, fr);
  bool kinetic = std::any_of(disc.model.begin(), disc.model.end(), [](ModelId m) { return m == ModelId::M1; });
  if (kinetic) {
    NetworkSystem s1(net, sc.gas, disc);
    s1.newton(x, nullptr, 0.0, fr, -1, 1e-8);
    return s1.unpack(x, t);
  }
  return s3.unpack(x, t);
}

inline NetworkState steady_state(const Scenario& sc, std::span<const double> y, double t) {
  return steady_state(sc, y, t, initial_discretization(sc));
}

/// Observables of a full run: 256-point output grid plus the step-level
/// compressor power used for the energy functional.
struct Traces {
  std::vector<double> grid;                       // s
  std::vector<std::string> exit_ids;
  std::vector<std::vector<double>> exit_pressure; // bar, on grid
  std::vector<std::string> compressor_ids;
  std::vector<std::vector<double>> power;         // W, on grid
  std::vector<double> step_times;
  std::vector<std::vector<double>> step_power;    // W, per step time
  std::vector<std::vector<double>> step_exit_p;   // bar, per step time
  double work = 0.0;

  /// Exit-pressure traces flattened exit-major (the sparse-grid target).
  std::vector<double> flat_exit_pressure() const {
    std::vector<double> out;
    for (const auto& v : exit_pressure) out.insert(out.end(), v.begin(), v.end());
    return out;
  }
};

inline double interp_linear(const std::vector<double>& t, const std::vector<double>& v, double x) {
  if (x <= t.front()) return v.front();
  if (x >= t.back()) return v.back();
  auto it = std::upper_bound(t.begin(), t.end(), x);
  std::size_t j = static_cast<std::size_t>(it - t.begin());
  double th = (x - t[j - 1]) / (t[j] - t[j - 1]);
  return (1 - th) * v[j - 1] + th * v[j];
}

/// Accumulates slab runs into traces.
/// Output time grid shared by all traces of a scenario.
inline std::vector<double> trace_grid(const Scenario& sc) {
  const int G = kTraceGridPoints;
  std::vector<double> g(G);
  for (int k = 0; k < G; ++k) g[static_cast<std::size_t>(k)] = sc.sim.horizon * k / (G - 1);
  return g;
}

inline std::vector<std::string> exit_ids(const Scenario& sc) {
  std::vector<std::string> ids;
  for (const auto& n : sc.network.nodes)
    if (n.kind == NodeKind::exit) ids.push_back(n.id);
  return ids;
}

class TraceBuilder {
 public:
  explicit TraceBuilder(const Scenario& sc) : sc_(sc) {
    tr_.exit_ids = exit_ids(sc);
    for (const auto& e : sc.network.edges)
      if (e.is_compressor()) tr_.compressor_ids.push_back(e.id);
    tr_.step_power.resize(tr_.compressor_ids.size());
    tr_.step_exit_p.resize(tr_.exit_ids.size());
  }

  void append(const SlabRun& run) {
    std::size_t first = tr_.step_times.empty() ? 0 : 1;  // slab start duplicates the previous end
    for (std::size_t n = first; n < run.times.size(); ++n) {
      tr_.step_times.push_back(run.times[n]);
      for (std::size_t c = 0; c < run.power.size(); ++c) tr_.step_power[c].push_back(run.power[c][n]);
      for (std::size_t x = 0; x < run.exit_p.size(); ++x) tr_.step_exit_p[x].push_back(run.exit_p[x][n] / kPascalPerBar);
    }
    tr_.work += run.work;
  }

  void add_work(double w) { tr_.work += w; }

  Traces finish() const {
    Traces t = tr_;
    const int G = kTraceGridPoints;
    t.grid = trace_grid(sc_);
    auto sample = [&](const std::vector<double>& v) {
      std::vector<double> out(G);
      for (int k = 0; k < G; ++k) out[static_cast<std::size_t>(k)] = interp_linear(t.step_times, v, t.grid[static_cast<std::size_t>(k)]);
      return out;
    };
    for (const auto& v : t.step_exit_p) t.exit_pressure.push_back(sample(v));
    for (const auto& v : t.step_power) t.power.push_back(sample(v));
    return t;
  }

 private:
  const Scenario& sc_;
  Traces tr_;
};

/// Energy functional from per-step power samples (trapezoidal in time).
inline double qoi_energy_series(const Scenario& sc, const std::vector<double>& times,
                                const std::vector<std::vector<double>>& power) {
  double total = 0.0;
  const auto& net = sc.network;
  std::size_t ci = 0;
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (!net.edges[e].is_compressor()) continue;
    const auto& P = power[ci++];
    const CompressorCost* cost = nullptr;
    for (const auto& cc : sc.qoi.compressors)
      if (cc.id == net.edges[e].id) cost = &cc;
    if (!cost) continue;
    auto g = [&](double G) { return cost->g0 + cost->g1 * G + cost->g2 * G * G; };
    for (std::size_t n = 1; n < times.size(); ++n) total += 0.5 * (times[n] - times[n - 1]) * (g(P[n]) + g(P[n - 1]));
  }
  return sc.qoi.alpha * total;
}

inline double qoi_energy(const Traces& tr, const Scenario& sc) {
  return qoi_energy_series(sc, tr.step_times, tr.step_power);
}

/// Result of a run on prescribed discretizations (no adaptation).
struct RunResult {
  double psi = 0.0;
  Traces traces;
  double work = 0.0;
  std::vector<SlabRun> slabs;
};

/// Runs the full horizon with one discretization per slab, starting from
/// the stationary state of the initial boundary data.
inline RunResult simulate_fixed(const Scenario& sc, std::span<const double> y, const std::vector<Discretization>& discs,
                                bool keep_slabs = false) {
  if (static_cast<int>(discs.size()) != sc.sim.slabs) throw std::invalid_argument("one discretization per slab required");
  NetworkState s = steady_state(sc, y, 0.0, discs.front());
  TraceBuilder tb(sc);
  RunResult rr;
  for (int i = 0; i < sc.sim.slabs; ++i) {
    if (i > 0) s = remap_state(s, sc.network, discs[static_cast<std::size_t>(i)], sc.gas);
    SlabRun run = step_slab(s, discs[static_cast<std::size_t>(i)], sc, y, i);
    tb.append(run);
    s = run.end;
    if (keep_slabs) rr.slabs.push_back(std::move(run));
  }
  rr.traces = tb.finish();
  rr.work = rr.traces.work;
  rr.psi = qoi_energy(rr.traces, sc);
  return rr;
}

inline void write_traces_csv(std::ostream& os, const Traces& tr) {
  os << "t";
  for (const auto& id : tr.exit_ids) os << ",p_" << id << "_bar";
  for (const auto& id : tr.compressor_ids) os << ",power_" << id << "_W";
  os << "\n";
  os.precision(12);
  for (std::size_t k = 0; k < tr.grid.size(); ++k) {
    os << tr.grid[k];
    for (const auto& v : tr.exit_pressure) os << "," << v[k];
    for (const auto& v : tr.power) os << "," << v[k];
    os << "\n";
  }
}

}  // namespace pipeflow
