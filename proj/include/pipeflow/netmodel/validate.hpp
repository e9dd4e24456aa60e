#pragma once

#include <cstddef>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/types.hpp"

namespace pipeflow {

/// Checks the structural invariants of a network and returns every
/// violation found. An empty result means the network is valid.
inline std::vector<Diagnostic> validate_network(const Network& net) {
  std::vector<Diagnostic> out;
  auto add = [&](std::string code, std::string path, std::string msg) {
    out.push_back({std::move(code), std::move(path), std::move(msg)});
  };

  if (net.nodes.empty()) add("empty-network", "nodes", "network has no nodes");

  std::set<std::string> node_ids;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const auto& n = net.nodes[i];
    if (!node_ids.insert(n.id).second)
      add("duplicate-node-id", "nodes[" + std::to_string(i) + "]", "duplicate node id '" + n.id + "'");
  }
  std::set<std::string> edge_ids;
  std::vector<std::size_t> degree(net.nodes.size(), 0);
  // Union-find for connectivity.
  std::vector<std::size_t> parent(net.nodes.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };

  for (std::size_t i = 0; i < net.edges.size(); ++i) {
    const auto& e = net.edges[i];
    const std::string path = "edges[" + std::to_string(i) + "]";
    if (!edge_ids.insert(e.id).second) add("duplicate-edge-id", path, "duplicate edge id '" + e.id + "'");
    auto a = net.node_index(e.from);
    auto b = net.node_index(e.to);
    if (!a) add("dangling-node", path + ".from", "edge '" + e.id + "' references unknown node '" + e.from + "'");
    if (!b) add("dangling-node", path + ".to", "edge '" + e.id + "' references unknown node '" + e.to + "'");
    if (a && b && *a == *b) add("self-loop", path, "edge '" + e.id + "' connects a node to itself");
    if (a) ++degree[*a];
    if (b) ++degree[*b];
    if (a && b) parent[find(*a)] = find(*b);

    if (const auto* p = std::get_if<Pipe>(&e.data)) {
      if (!(p->length > 0)) add("invalid-length", path + ".length", "pipe length must be positive");
      if (!(p->diameter > 0)) add("invalid-diameter", path + ".diameter", "pipe diameter must be positive");
      if (!(p->friction >= 0)) add("invalid-friction", path + ".friction", "friction must be non-negative");
      if (!(p->dx > 0 && p->dx <= p->length))
        add("invalid-dx", path + ".dx", "mesh width must lie in (0, length]");
    } else if (const auto* c = std::get_if<Compressor>(&e.data)) {
      for (const auto& bp : c->jump.points())
        if (bp.value < 0) {
          add("negative-jump", path + ".jump", "pressure jump must be non-negative");
          break;
        }
      if (!(c->gamma > 1.0)) add("invalid-gamma", path + ".gamma", "isentropic coefficient must exceed 1");
    } else if (const auto* v = std::get_if<Valve>(&e.data)) {
      for (std::size_t k = 1; k < v->events.size(); ++k)
        if (!(v->events[k].time > v->events[k - 1].time)) {
          add("valve-event-order", path + ".events", "valve event times must be strictly increasing");
          break;
        }
    }
  }

  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    const auto& n = net.nodes[i];
    if (n.kind != NodeKind::junction && degree[i] != 1)
      add("boundary-degree", "nodes[" + std::to_string(i) + "]",
          "boundary node not degree 1: '" + n.id + "' has degree " + std::to_string(degree[i]));
    if (n.kind == NodeKind::junction && degree[i] == 0)
      add("isolated-node", "nodes[" + std::to_string(i) + "]", "node '" + n.id + "' has no edges");
  }

  if (!net.nodes.empty()) {
    std::size_t root = find(0);
    for (std::size_t i = 1; i < net.nodes.size(); ++i)
      if (find(i) != root) {
        add("disconnected", "nodes", "network graph is not connected");
        break;
      }
  }
  return out;
}

}  // namespace pipeflow
