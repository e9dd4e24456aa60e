#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/netmodel/types.hpp"

namespace pipeflow {

/// Per-pipe mesh resolution and model, plus the slab time step.
/// Entries for compressors and valves are unused (cells = 0).
struct Discretization {
  std::vector<int> cells;
  std::vector<ModelId> model;
  double dt = 0.0;

  double dx(const Network& net, std::size_t e) const {
    return std::get<Pipe>(net.edges[e].data).length / cells[e];
  }

  bool operator==(const Discretization&) const = default;
};

inline int cells_for(const Pipe& p, double dx) {
  return std::max(1, static_cast<int>(std::ceil(p.length / dx - 1e-9)));
}

inline Discretization initial_discretization(const Scenario& sc) {
  Discretization d;
  d.cells.assign(sc.network.edges.size(), 0);
  d.model.assign(sc.network.edges.size(), sc.sim.initial_model);
  for (std::size_t e = 0; e < sc.network.edges.size(); ++e)
    if (const auto* p = std::get_if<Pipe>(&sc.network.edges[e].data)) d.cells[e] = cells_for(*p, p->dx);
  d.dt = std::min(sc.sim.dt0, sc.sim.horizon / sc.sim.slabs);
  return d;
}

/// Network state at one instant. Pipe arrays hold values at the cells+1
/// mesh points; the end points coincide with the adjacent node pressures.
struct NetworkState {
  double t = 0.0;
  std::vector<double> node_p;                 // Pa
  std::vector<std::vector<double>> rho;       // per edge, kg/m^3 (pipes only)
  std::vector<std::vector<double>> flux;      // per edge, kg/(m^2 s) (pipes only)
  std::vector<double> edge_flow;              // kg/s for compressors and valves

  bool operator==(const NetworkState&) const = default;
};

/// Transfers a state to new pipe meshes: p^2 and mass flux are interpolated
/// linearly in x (p^2 is exactly linear for the stationary friction law).
inline NetworkState remap_state(const NetworkState& s, const Network& net, const Discretization& to,
                                const GasProperties& gas) {
  NetworkState out = s;
  const double c2 = gas.sound_speed2();
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (!net.edges[e].is_pipe()) continue;
    const auto& r = s.rho[e];
    const auto& q = s.flux[e];
    std::size_t n_old = r.size() - 1;
    std::size_t n_new = static_cast<std::size_t>(to.cells[e]);
    if (n_old == n_new) continue;
    std::vector<double> nr(n_new + 1), nq(n_new + 1);
    for (std::size_t k = 0; k <= n_new; ++k) {
      double x = static_cast<double>(k) / static_cast<double>(n_new) * static_cast<double>(n_old);
      std::size_t i = std::min(static_cast<std::size_t>(x), n_old - 1);
      double th = x - static_cast<double>(i);
      if (k == n_new) {
        i = n_old - 1;
        th = 1.0;
      }
      double pa = r[i] * c2, pb = r[i + 1] * c2;
      double p2 = (1 - th) * pa * pa + th * pb * pb;
      nr[k] = std::sqrt(p2) / c2;
      nq[k] = (1 - th) * q[i] + th * q[i + 1];
    }
    out.rho[e] = std::move(nr);
    out.flux[e] = std::move(nq);
  }
  return out;
}

inline nlohmann::json state_to_json(const NetworkState& s, const Network& net) {
  nlohmann::json j;
  j["t"] = s.t;
  j["nodes"] = nlohmann::json::object();
  for (std::size_t v = 0; v < net.nodes.size(); ++v) j["nodes"][net.nodes[v].id] = {{"p", s.node_p[v]}};
  j["edges"] = nlohmann::json::object();
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    if (net.edges[e].is_pipe())
      j["edges"][net.edges[e].id] = {{"rho", s.rho[e]}, {"flux", s.flux[e]}};
    else
      j["edges"][net.edges[e].id] = {{"mass_flow", s.edge_flow[e]}};
  }
  return j;
}

}  // namespace pipeflow
