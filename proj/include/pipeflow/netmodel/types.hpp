#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "pipeflow/common.hpp"

namespace pipeflow {

/// Transport model of a pipe, ordered by fidelity: M3 < M2 < M1.
enum class ModelId { M3 = 0, M2 = 1, M1 = 2 };

inline const char* to_string(ModelId m) {
  switch (m) {
    case ModelId::M1: return "M1";
    case ModelId::M2: return "M2";
    case ModelId::M3: return "M3";
  }
  return "?";
}

inline std::optional<ModelId> model_from_string(const std::string& s) {
  if (s == "M1") return ModelId::M1;
  if (s == "M2") return ModelId::M2;
  if (s == "M3") return ModelId::M3;
  return std::nullopt;
}

enum class NodeKind { source, exit, junction };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::source: return "source";
    case NodeKind::exit: return "exit";
    case NodeKind::junction: return "junction";
  }
  return "?";
}

struct Node {
  std::string id;
  NodeKind kind = NodeKind::junction;

  bool operator==(const Node&) const = default;
};

struct Breakpoint {
  double time = 0.0;
  double value = 0.0;

  bool operator==(const Breakpoint&) const = default;
};

/// Piecewise-linear function of time given by breakpoints with
/// non-decreasing times. Held constant outside the breakpoint range.
class PiecewiseLinear {
 public:
  PiecewiseLinear() = default;
  explicit PiecewiseLinear(std::vector<Breakpoint> pts) : pts_(std::move(pts)) {}

  const std::vector<Breakpoint>& points() const noexcept { return pts_; }
  bool empty() const noexcept { return pts_.empty(); }
  double first_time() const { return pts_.front().time; }
  double last_time() const { return pts_.back().time; }

  double operator()(double t) const {
    if (pts_.empty()) return 0.0;
    if (t <= pts_.front().time) return pts_.front().value;
    if (t >= pts_.back().time) return pts_.back().value;
    // First breakpoint strictly after t; a repeated time acts as a jump and
    // the right-hand value wins.
    auto it = std::upper_bound(pts_.begin(), pts_.end(), t,
                               [](double v, const Breakpoint& b) { return v < b.time; });
    const Breakpoint& b = *it;
    const Breakpoint& a = *(it - 1);
    if (b.time == a.time) return b.value;
    double s = (t - a.time) / (b.time - a.time);
    return a.value + s * (b.value - a.value);
  }

  bool operator==(const PiecewiseLinear&) const = default;

 private:
  std::vector<Breakpoint> pts_;
};

struct Pipe {
  double length = 0.0;    // m
  double diameter = 0.0;  // m
  double friction = 0.0;  // Darcy coefficient
  double dx = 0.0;        // initial mesh width, m

  double area() const { return std::numbers::pi * diameter * diameter / 4.0; }

  bool operator==(const Pipe&) const = default;
};

struct Compressor {
  PiecewiseLinear jump;  // bar
  double c_f = 1.0;
  double gamma = 1.4;

  bool operator==(const Compressor&) const = default;
};

enum class ValveState { open, closed };

struct ValveEvent {
  double time = 0.0;
  ValveState state = ValveState::open;

  bool operator==(const ValveEvent&) const = default;
};

struct Valve {
  std::vector<ValveEvent> events;

  /// State in effect at time t: the last event with time <= t.
  ValveState state_at(double t) const {
    ValveState s = events.empty() ? ValveState::open : events.front().state;
    for (const auto& e : events) {
      if (e.time <= t) s = e.state;
      else break;
    }
    return s;
  }

  bool operator==(const Valve&) const = default;
};

struct Edge {
  std::string id;
  std::string from;
  std::string to;
  std::variant<Pipe, Compressor, Valve> data;

  bool is_pipe() const { return std::holds_alternative<Pipe>(data); }
  bool is_compressor() const { return std::holds_alternative<Compressor>(data); }
  bool is_valve() const { return std::holds_alternative<Valve>(data); }

  bool operator==(const Edge&) const = default;
};

/// Graph of nodes and oriented edges. Edge orientation (from -> to) fixes
/// the sign convention of velocity and flow.
struct Network {
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  bool operator==(const Network&) const = default;

  std::optional<std::size_t> node_index(const std::string& id) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].id == id) return i;
    return std::nullopt;
  }

  std::optional<std::size_t> edge_index(const std::string& id) const {
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (edges[i].id == id) return i;
    return std::nullopt;
  }

  std::vector<std::size_t> pipe_edges() const { return edges_of([](const Edge& e) { return e.is_pipe(); }); }
  std::vector<std::size_t> compressor_edges() const {
    return edges_of([](const Edge& e) { return e.is_compressor(); });
  }
  std::vector<std::size_t> nodes_of_kind(NodeKind k) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (nodes[i].kind == k) out.push_back(i);
    return out;
  }

 private:
  template <class Pred>
  std::vector<std::size_t> edges_of(Pred pred) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (pred(edges[i])) out.push_back(i);
    return out;
  }
};

struct GasProperties {
  double R = 518.0;     // J/(kg K)
  double T = 283.15;    // K
  double z = 0.9;       // compressibility factor
  double rho0 = 0.785;  // reference density for volume flows, kg/m^3

  double sound_speed2() const { return z * R * T; }
  double sound_speed() const { return std::sqrt(sound_speed2()); }

  bool operator==(const GasProperties&) const = default;
};

enum class Quantity { pressure, flow };
enum class UncertaintyMap { affine, multiplicative };

/// Attaches one stochastic coordinate to a schedule. The perturbation is
/// faded in by a linear weight over `ramp` (weight 0 before ramp.first,
/// 1 after ramp.second); without a ramp the weight is 1 everywhere.
struct Uncertainty {
  int coordinate = 1;  // 1-based
  UncertaintyMap map = UncertaintyMap::affine;
  double scale = 0.0;
  std::optional<std::pair<double, double>> ramp;

  double weight(double t) const {
    if (!ramp) return 1.0;
    auto [a, b] = *ramp;
    if (t <= a) return 0.0;
    if (t >= b) return 1.0;
    return (t - a) / (b - a);
  }

  bool operator==(const Uncertainty&) const = default;
};

struct BoundarySchedule {
  std::string node;
  Quantity quantity = Quantity::pressure;
  PiecewiseLinear nominal;  // bar or m^3/s
  std::optional<Uncertainty> uncertainty;

  bool operator==(const BoundarySchedule&) const = default;
};

struct CompressorCost {
  std::string id;
  double g0 = 0.0;
  double g1 = 0.0;
  double g2 = 0.0;

  bool operator==(const CompressorCost&) const = default;
};

struct QoiSpec {
  double alpha = 1.0;
  std::vector<CompressorCost> compressors;

  bool operator==(const QoiSpec&) const = default;
};

struct SimulationSettings {
  double horizon = 0.0;  // s
  int slabs = 1;
  double dt0 = 0.0;  // s
  double dx0 = 1000.0;  // m, default for pipes without their own dx
  ModelId initial_model = ModelId::M3;

  bool operator==(const SimulationSettings&) const = default;
};

struct Scenario {
  std::string name;
  Network network;
  GasProperties gas;
  std::vector<BoundarySchedule> schedules;
  int dimension = 1;  // stochastic dimension N, product-uniform on [-1,1]^N
  QoiSpec qoi;
  SimulationSettings sim;

  bool operator==(const Scenario&) const = default;

  const BoundarySchedule* schedule_for(const std::string& node) const {
    for (const auto& s : schedules)
      if (s.node == node) return &s;
    return nullptr;
  }
};

}  // namespace pipeflow
