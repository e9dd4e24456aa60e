#pragma once

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/schedule.hpp"
#include "pipeflow/netmodel/types.hpp"
#include "pipeflow/netmodel/validate.hpp"

namespace pipeflow {

namespace detail {

using json = nlohmann::json;

/// Collects diagnostics while walking a JSON document.
class ScenarioReader {
 public:
  std::vector<Diagnostic> diags;

  void error(std::string code, const std::string& path, std::string msg) {
    diags.push_back({std::move(code), path, std::move(msg)});
  }

  bool object(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed,
              std::initializer_list<std::string_view> required) {
    if (!j.is_object()) {
      error("type", path, "expected an object");
      return false;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (auto a : allowed) ok = ok || it.key() == a;
      if (!ok) error("unknown-field", join(path, it.key()), "unknown field '" + it.key() + "'");
    }
    bool all = true;
    for (auto r : required)
      if (!j.contains(std::string(r))) {
        error("missing-field", join(path, std::string(r)), "required field '" + std::string(r) + "' missing");
        all = false;
      }
    return all;
  }

  double number(const json& j, const std::string& key, const std::string& path, double fallback = 0.0) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number()) {
      error("type", join(path, key), "expected a number");
      return fallback;
    }
    return v.get<double>();
  }

  std::string string(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_string()) {
      error("type", join(path, key), "expected a string");
      return {};
    }
    return v.get<std::string>();
  }

  PiecewiseLinear breakpoints(const json& j, const std::string& path) {
    std::vector<Breakpoint> pts;
    if (!j.is_array() || j.empty()) {
      error("type", path, "expected a non-empty array of [time, value] pairs");
      return {};
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto& e = j[i];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        error("type", path + "[" + std::to_string(i) + "]", "expected [time, value]");
        continue;
      }
      pts.push_back({e[0].get<double>(), e[1].get<double>()});
    }
    for (std::size_t i = 1; i < pts.size(); ++i)
      if (pts[i].time < pts[i - 1].time) {
        error("breakpoint-order", path, "breakpoint times must be non-decreasing");
        break;
      }
    return PiecewiseLinear(std::move(pts));
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
};

inline std::string position_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

/// Parses and validates a scenario document. Throws ScenarioError carrying
/// every diagnostic found (syntax errors carry the line/column).
inline Scenario parse_scenario(std::string_view text) {
  using detail::json;
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ScenarioError({{"syntax", detail::position_of(text, e.byte), e.what()}});
  }

  detail::ScenarioReader rd;
  Scenario sc;
  if (!rd.object(doc, "",
                 {"name", "gas", "nodes", "edges", "schedules", "uncertainty", "qoi", "simulation"},
                 {"gas", "nodes", "edges", "schedules", "uncertainty", "qoi", "simulation"}))
    throw ScenarioError(rd.diags);

  sc.name = rd.string(doc, "name", "");

  // simulation first: dx0 is the default pipe mesh width.
  {
    const auto& s = doc["simulation"];
    if (rd.object(s, "simulation", {"horizon", "slabs", "dt0", "dx0", "initial_model"},
                  {"horizon", "slabs", "dt0"})) {
      sc.sim.horizon = rd.number(s, "horizon", "simulation");
      double slabs = rd.number(s, "slabs", "simulation", 1);
      sc.sim.slabs = static_cast<int>(slabs);
      if (slabs != std::floor(slabs) || sc.sim.slabs < 1)
        rd.error("invalid-slabs", "simulation.slabs", "slab count must be a positive integer");
      sc.sim.dt0 = rd.number(s, "dt0", "simulation");
      sc.sim.dx0 = rd.number(s, "dx0", "simulation", 1000.0);
      if (!(sc.sim.horizon > 0)) rd.error("invalid-horizon", "simulation.horizon", "horizon must be positive");
      if (!(sc.sim.dt0 > 0)) rd.error("invalid-dt0", "simulation.dt0", "initial time step must be positive");
      if (!(sc.sim.dx0 > 0)) rd.error("invalid-dx0", "simulation.dx0", "initial mesh width must be positive");
      if (s.contains("initial_model")) {
        auto m = model_from_string(rd.string(s, "initial_model", "simulation"));
        if (!m) rd.error("invalid-model", "simulation.initial_model", "model must be M1, M2 or M3");
        else sc.sim.initial_model = *m;
      }
    }
  }

  {
    const auto& g = doc["gas"];
    if (rd.object(g, "gas", {"R", "T", "z", "rho0"}, {"R", "T", "z", "rho0"})) {
      sc.gas.R = rd.number(g, "R", "gas");
      sc.gas.T = rd.number(g, "T", "gas");
      sc.gas.z = rd.number(g, "z", "gas");
      sc.gas.rho0 = rd.number(g, "rho0", "gas");
      if (!(sc.gas.R > 0)) rd.error("invalid-gas", "gas.R", "gas constant must be positive");
      if (!(sc.gas.T > 0)) rd.error("invalid-gas", "gas.T", "temperature must be positive");
      if (!(sc.gas.rho0 > 0)) rd.error("invalid-gas", "gas.rho0", "reference density must be positive");
      if (!(sc.gas.z > 0 && sc.gas.z <= 1)) rd.error("invalid-gas", "gas.z", "compressibility must lie in (0, 1]");
    }
  }

  {
    const auto& u = doc["uncertainty"];
    if (rd.object(u, "uncertainty", {"dimension", "density"}, {"dimension"})) {
      double n = rd.number(u, "dimension", "uncertainty", 1);
      sc.dimension = static_cast<int>(n);
      if (n != std::floor(n) || sc.dimension < 1)
        rd.error("invalid-dimension", "uncertainty.dimension", "stochastic dimension must be a positive integer");
      if (u.contains("density") && rd.string(u, "density", "uncertainty") != "uniform")
        rd.error("invalid-density", "uncertainty.density", "only the product-uniform density is supported");
    }
  }

  const auto& nodes = doc["nodes"];
  if (!nodes.is_array()) rd.error("type", "nodes", "expected an array");
  else
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::string path = "nodes[" + std::to_string(i) + "]";
      if (!rd.object(nodes[i], path, {"id", "kind"}, {"id", "kind"})) continue;
      Node n;
      n.id = rd.string(nodes[i], "id", path);
      std::string kind = rd.string(nodes[i], "kind", path);
      if (kind == "source") n.kind = NodeKind::source;
      else if (kind == "exit") n.kind = NodeKind::exit;
      else if (kind == "junction") n.kind = NodeKind::junction;
      else rd.error("invalid-kind", path + ".kind", "node kind must be source, exit or junction");
      sc.network.nodes.push_back(std::move(n));
    }

  const auto& edges = doc["edges"];
  if (!edges.is_array()) rd.error("type", "edges", "expected an array");
  else
    for (std::size_t i = 0; i < edges.size(); ++i) {
      std::string path = "edges[" + std::to_string(i) + "]";
      const auto& e = edges[i];
      if (!e.is_object() || !e.contains("type")) {
        rd.error("missing-field", path + ".type", "edge needs a type");
        continue;
      }
      Edge edge;
      std::string type = rd.string(e, "type", path);
      if (type == "pipe") {
        if (!rd.object(e, path, {"id", "type", "from", "to", "length", "diameter", "friction", "dx"},
                       {"id", "from", "to", "length", "diameter", "friction"}))
          continue;
        Pipe p;
        p.length = rd.number(e, "length", path);
        p.diameter = rd.number(e, "diameter", path);
        p.friction = rd.number(e, "friction", path);
        p.dx = e.contains("dx") ? rd.number(e, "dx", path) : std::min(sc.sim.dx0, p.length);
        edge.data = p;
      } else if (type == "compressor") {
        if (!rd.object(e, path, {"id", "type", "from", "to", "jump", "c_f", "gamma"},
                       {"id", "from", "to", "jump", "c_f", "gamma"}))
          continue;
        Compressor c;
        c.jump = rd.breakpoints(e["jump"], path + ".jump");
        c.c_f = rd.number(e, "c_f", path);
        c.gamma = rd.number(e, "gamma", path);
        edge.data = c;
      } else if (type == "valve") {
        if (!rd.object(e, path, {"id", "type", "from", "to", "events"}, {"id", "from", "to", "events"})) continue;
        Valve v;
        const auto& ev = e["events"];
        if (!ev.is_array() || ev.empty()) rd.error("type", path + ".events", "expected a non-empty event array");
        else
          for (std::size_t k = 0; k < ev.size(); ++k) {
            const auto& x = ev[k];
            std::string ep = path + ".events[" + std::to_string(k) + "]";
            if (!x.is_array() || x.size() != 2 || !x[0].is_number() || !x[1].is_string()) {
              rd.error("type", ep, "expected [time, \"open\"|\"closed\"]");
              continue;
            }
            std::string st = x[1].get<std::string>();
            if (st != "open" && st != "closed") {
              rd.error("invalid-valve-state", ep, "valve state must be open or closed");
              continue;
            }
            v.events.push_back({x[0].get<double>(), st == "open" ? ValveState::open : ValveState::closed});
          }
        edge.data = v;
      } else {
        rd.error("invalid-edge-type", path + ".type", "edge type must be pipe, compressor or valve");
        continue;
      }
      edge.id = rd.string(e, "id", path);
      edge.from = rd.string(e, "from", path);
      edge.to = rd.string(e, "to", path);
      sc.network.edges.push_back(std::move(edge));
    }

  for (auto& d : validate_network(sc.network)) rd.diags.push_back(std::move(d));

  const auto& scheds = doc["schedules"];
  if (!scheds.is_array()) rd.error("type", "schedules", "expected an array");
  else
    for (std::size_t i = 0; i < scheds.size(); ++i) {
      std::string path = "schedules[" + std::to_string(i) + "]";
      const auto& s = scheds[i];
      if (!rd.object(s, path, {"node", "quantity", "breakpoints", "uncertainty"}, {"node", "quantity", "breakpoints"}))
        continue;
      BoundarySchedule b;
      b.node = rd.string(s, "node", path);
      std::string q = rd.string(s, "quantity", path);
      if (q == "pressure") b.quantity = Quantity::pressure;
      else if (q == "flow") b.quantity = Quantity::flow;
      else rd.error("invalid-quantity", path + ".quantity", "quantity must be pressure or flow");
      b.nominal = rd.breakpoints(s["breakpoints"], path + ".breakpoints");
      if (s.contains("uncertainty")) {
        const auto& u = s["uncertainty"];
        std::string up = path + ".uncertainty";
        if (rd.object(u, up, {"coordinate", "map", "scale", "ramp"}, {"coordinate", "map", "scale"})) {
          Uncertainty un;
          double c = rd.number(u, "coordinate", up);
          un.coordinate = static_cast<int>(c);
          if (c != std::floor(c) || un.coordinate < 1 || un.coordinate > sc.dimension)
            rd.error("coordinate-range", up + ".coordinate",
                     "stochastic coordinate out of range 1.." + std::to_string(sc.dimension));
          std::string m = rd.string(u, "map", up);
          if (m == "affine") un.map = UncertaintyMap::affine;
          else if (m == "multiplicative") un.map = UncertaintyMap::multiplicative;
          else rd.error("invalid-map", up + ".map", "map must be affine or multiplicative");
          un.scale = rd.number(u, "scale", up);
          if (u.contains("ramp")) {
            const auto& r = u["ramp"];
            if (!r.is_array() || r.size() != 2 || !r[0].is_number() || !r[1].is_number() ||
                !(r[1].get<double>() > r[0].get<double>()))
              rd.error("invalid-ramp", up + ".ramp", "ramp must be [start, end] with end > start");
            else
              un.ramp = std::make_pair(r[0].get<double>(), r[1].get<double>());
          }
          b.uncertainty = un;
        }
      }
      sc.schedules.push_back(std::move(b));
    }

  {
    const auto& q = doc["qoi"];
    if (rd.object(q, "qoi", {"alpha", "compressors"}, {"alpha", "compressors"})) {
      sc.qoi.alpha = rd.number(q, "alpha", "qoi");
      if (!(sc.qoi.alpha > 0)) rd.error("invalid-alpha", "qoi.alpha", "alpha must be positive");
      const auto& cs = q["compressors"];
      if (!cs.is_array()) rd.error("type", "qoi.compressors", "expected an array");
      else
        for (std::size_t i = 0; i < cs.size(); ++i) {
          std::string path = "qoi.compressors[" + std::to_string(i) + "]";
          if (!rd.object(cs[i], path, {"id", "g0", "g1", "g2"}, {"id", "g0", "g1", "g2"})) continue;
          CompressorCost cc;
          cc.id = rd.string(cs[i], "id", path);
          cc.g0 = rd.number(cs[i], "g0", path);
          cc.g1 = rd.number(cs[i], "g1", path);
          cc.g2 = rd.number(cs[i], "g2", path);
          auto ei = sc.network.edge_index(cc.id);
          if (!ei || !sc.network.edges[*ei].is_compressor())
            rd.error("unknown-compressor", path + ".id", "qoi references unknown compressor '" + cc.id + "'");
          sc.qoi.compressors.push_back(std::move(cc));
        }
    }
  }

  // Schedule semantics: one per boundary node, matching quantity, horizon
  // coverage and positivity at the corners of the parameter box.
  const double T = sc.sim.horizon;
  std::set<std::string> scheduled;
  for (std::size_t i = 0; i < sc.schedules.size(); ++i) {
    const auto& s = sc.schedules[i];
    std::string path = "schedules[" + std::to_string(i) + "]";
    auto ni = sc.network.node_index(s.node);
    if (!ni) {
      rd.error("dangling-node", path + ".node", "schedule references unknown node '" + s.node + "'");
      continue;
    }
    const auto& node = sc.network.nodes[*ni];
    if (node.kind == NodeKind::junction)
      rd.error("schedule-on-junction", path + ".node", "junction '" + s.node + "' cannot carry a schedule");
    if (node.kind == NodeKind::source && s.quantity != Quantity::pressure)
      rd.error("quantity-mismatch", path + ".quantity", "sources are driven by pressure");
    if (node.kind == NodeKind::exit && s.quantity != Quantity::flow)
      rd.error("quantity-mismatch", path + ".quantity", "exits are driven by volume flow");
    if (!scheduled.insert(s.node).second)
      rd.error("duplicate-schedule", path + ".node", "node '" + s.node + "' has more than one schedule");
    if (s.nominal.empty()) continue;
    if (s.nominal.first_time() > 0 || s.nominal.last_time() < T)
      rd.error("uncovered-horizon", path + ".breakpoints", "breakpoints do not cover [0, horizon]");
    if (s.uncertainty && (s.uncertainty->coordinate < 1 || s.uncertainty->coordinate > sc.dimension)) continue;

    std::vector<double> y(static_cast<std::size_t>(std::max(sc.dimension, 1)), 0.0);
    std::vector<double> corners = s.uncertainty ? std::vector<double>{-1.0, 1.0} : std::vector<double>{0.0};
    bool bad = false;
    for (double t : schedule_knots(s)) {
      t = std::clamp(t, s.nominal.first_time(), s.nominal.last_time());
      for (double c : corners) {
        if (s.uncertainty) y[static_cast<std::size_t>(s.uncertainty->coordinate - 1)] = c;
        if (!(boundary_value(s, t, y) > 0)) bad = true;
      }
    }
    if (bad)
      rd.error("nonpositive-boundary", path, "realized boundary value nonpositive at corner of the parameter box");
  }
  for (std::size_t i = 0; i < sc.network.nodes.size(); ++i) {
    const auto& n = sc.network.nodes[i];
    if (n.kind != NodeKind::junction && !scheduled.count(n.id))
      rd.error("missing-schedule", "nodes[" + std::to_string(i) + "]", "boundary node '" + n.id + "' has no schedule");
  }

  for (std::size_t i = 0; i < sc.network.edges.size(); ++i) {
    if (const auto* c = std::get_if<Compressor>(&sc.network.edges[i].data)) {
      if (c->jump.empty()) continue;
      if (c->jump.first_time() > 0 || c->jump.last_time() < T)
        rd.error("uncovered-horizon", "edges[" + std::to_string(i) + "].jump", "jump schedule does not cover [0, horizon]");
    }
  }

  if (!rd.diags.empty()) throw ScenarioError(rd.diags);
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError({{"io", path, "cannot open scenario file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

/// Writes a scenario in the native document format; parse_scenario of the
/// result reproduces the scenario.
inline std::string serialize_scenario(const Scenario& sc, int indent = 2) {
  using detail::json;
  auto bps = [](const PiecewiseLinear& f) {
    json a = json::array();
    for (const auto& b : f.points()) a.push_back({b.time, b.value});
    return a;
  };
  json doc;
  if (!sc.name.empty()) doc["name"] = sc.name;
  doc["gas"] = {{"R", sc.gas.R}, {"T", sc.gas.T}, {"z", sc.gas.z}, {"rho0", sc.gas.rho0}};
  doc["nodes"] = json::array();
  for (const auto& n : sc.network.nodes) doc["nodes"].push_back({{"id", n.id}, {"kind", to_string(n.kind)}});
  doc["edges"] = json::array();
  for (const auto& e : sc.network.edges) {
    json j = {{"id", e.id}, {"from", e.from}, {"to", e.to}};
    if (const auto* p = std::get_if<Pipe>(&e.data)) {
      j["type"] = "pipe";
      j["length"] = p->length;
      j["diameter"] = p->diameter;
      j["friction"] = p->friction;
      j["dx"] = p->dx;
    } else if (const auto* c = std::get_if<Compressor>(&e.data)) {
      j["type"] = "compressor";
      j["jump"] = bps(c->jump);
      j["c_f"] = c->c_f;
      j["gamma"] = c->gamma;
    } else {
      const auto& v = std::get<Valve>(e.data);
      j["type"] = "valve";
      j["events"] = json::array();
      for (const auto& ev : v.events) j["events"].push_back({ev.time, ev.state == ValveState::open ? "open" : "closed"});
    }
    doc["edges"].push_back(std::move(j));
  }
  doc["schedules"] = json::array();
  for (const auto& s : sc.schedules) {
    json j = {{"node", s.node},
              {"quantity", s.quantity == Quantity::pressure ? "pressure" : "flow"},
              {"breakpoints", bps(s.nominal)}};
    if (s.uncertainty) {
      const auto& u = *s.uncertainty;
      json uj = {{"coordinate", u.coordinate},
                 {"map", u.map == UncertaintyMap::affine ? "affine" : "multiplicative"},
                 {"scale", u.scale}};
      if (u.ramp) uj["ramp"] = {u.ramp->first, u.ramp->second};
      j["uncertainty"] = std::move(uj);
    }
    doc["schedules"].push_back(std::move(j));
  }
  doc["uncertainty"] = {{"dimension", sc.dimension}, {"density", "uniform"}};
  doc["qoi"] = {{"alpha", sc.qoi.alpha}, {"compressors", json::array()}};
  for (const auto& c : sc.qoi.compressors)
    doc["qoi"]["compressors"].push_back({{"id", c.id}, {"g0", c.g0}, {"g1", c.g1}, {"g2", c.g2}});
  doc["simulation"] = {{"horizon", sc.sim.horizon},
                       {"slabs", sc.sim.slabs},
                       {"dt0", sc.sim.dt0},
                       {"dx0", sc.sim.dx0},
                       {"initial_model", to_string(sc.sim.initial_model)}};
  return doc.dump(indent);
}

}  // namespace pipeflow
