#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/sgrid/clenshaw_curtis.hpp"

namespace pipeflow {

using MultiIndex = std::vector<int>;

namespace detail {

struct LevelTables {
  std::array<std::vector<double>, kMaxLevel + 1> nodes, quad;
  LevelTables() {
    for (int i = 1; i <= kMaxLevel; ++i) {
      nodes[i] = cc_nodes(i);
      quad[i] = cc_weights(i);
    }
  }
};

inline const LevelTables& level_tables() {
  static const LevelTables t;
  return t;
}

/// Index of a finest-grid position within the node list of level i.
inline std::size_t local_index(int i, int pos) { return i == 1 ? 0 : static_cast<std::size_t>(pos >> (kMaxLevel - i)); }

/// Finest-grid positions first introduced on level i.
inline std::vector<int> new_positions(int i) {
  if (i == 1) return {cc_position(1, 0)};
  if (i == 2) return {cc_position(2, 0), cc_position(2, 2)};
  std::vector<int> out;
  for (std::size_t j = 1; j < level_to_points(i); j += 2) out.push_back(cc_position(i, j));
  return out;
}

}  // namespace detail

/// Smolyak interpolant in hierarchical (surplus) form on nested
/// Clenshaw-Curtis grids. Every index owns the nodes it introduced; each
/// node carries f(node) and its surplus f(node) minus the interpolant
/// built before the index was added.
class SparseInterpolant {
 public:
  struct IndexEntry {
    MultiIndex i;
    bool old = false;
    std::vector<std::size_t> nodes;
    std::vector<double> contribution;  // expectation of this index's hierarchical term
    double profit = 0.0;
  };

  SparseInterpolant() = default;
  SparseInterpolant(int dim, std::size_t target_size, std::size_t profit_components = 0)
      : dim_(dim), target_size_(target_size), profit_components_(profit_components) {
    if (dim < 0) throw std::invalid_argument("negative dimension");
    if (target_size == 0) throw std::invalid_argument("empty target");
  }

  int dim() const { return dim_; }
  std::size_t target_size() const { return target_size_; }
  std::size_t point_count() const { return node_y_.size(); }
  const std::vector<IndexEntry>& indices() const { return indices_; }
  const std::vector<std::vector<double>>& nodes() const { return node_y_; }
  const std::vector<std::vector<double>>& values() const { return values_; }
  const std::vector<std::vector<double>>& surpluses() const { return surplus_; }
  bool capped() const { return capped_; }
  void set_capped(bool c) { capped_ = c; }

  bool contains(const MultiIndex& i) const { return pos_.count(i) > 0; }
  const IndexEntry& entry(const MultiIndex& i) const { return indices_.at(pos_.at(i)); }
  void mark_old(const MultiIndex& i) { indices_.at(pos_.at(i)).old = true; }

  /// True if every backward neighbor of i is present (and old, if required).
  bool admissible(const MultiIndex& i, bool require_old = false) const {
    for (int n = 0; n < dim_; ++n) {
      if (i[n] == 1) continue;
      MultiIndex b = i;
      --b[n];
      auto it = pos_.find(b);
      if (it == pos_.end()) return false;
      if (require_old && !indices_[it->second].old) return false;
    }
    return true;
  }

  /// Coordinates of the nodes index i would introduce, in lexicographic key order.
  std::vector<std::vector<double>> new_nodes(const MultiIndex& i) const {
    std::vector<std::vector<double>> out;
    for (const auto& key : new_keys(i)) out.push_back(key_to_y(key));
    return out;
  }

  /// Incorporates index i with f evaluated at new_nodes(i).
  void add_index(const MultiIndex& i, const std::vector<std::vector<double>>& vals) {
    check_index(i);
    if (contains(i)) throw std::invalid_argument("index already present");
    if (!admissible(i)) throw std::invalid_argument("index not admissible: missing backward neighbor");
    const auto keys = new_keys(i);
    if (vals.size() != keys.size()) throw std::invalid_argument("wrong number of evaluations for index");
    IndexEntry e;
    e.i = i;
    e.contribution.assign(target_size_, 0.0);
    std::vector<std::vector<double>> sur;
    for (std::size_t k = 0; k < keys.size(); ++k) {
      if (vals[k].size() != target_size_) throw std::invalid_argument("evaluation has wrong target size");
      const auto y = key_to_y(keys[k]);
      auto s = evaluate(y);
      for (std::size_t c = 0; c < target_size_; ++c) s[c] = vals[k][c] - s[c];
      sur.push_back(std::move(s));
    }
    // Surpluses are computed against the interpolant before i, so insert afterwards.
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const double w = quad_weight(i, keys[k]);
      for (std::size_t c = 0; c < target_size_; ++c) e.contribution[c] += w * sur[k][c];
      e.nodes.push_back(node_y_.size());
      node_pos_[keys[k]] = node_y_.size();
      node_y_.push_back(key_to_y(keys[k]));
      node_key_.push_back(keys[k]);
      values_.push_back(vals[k]);
      surplus_.push_back(std::move(sur[k]));
    }
    const std::size_t pc = profit_components_ == 0 ? target_size_ : std::min(profit_components_, target_size_);
    for (std::size_t c = 0; c < pc; ++c) e.profit = std::max(e.profit, std::abs(e.contribution[c]));
    pos_[i] = indices_.size();
    indices_.push_back(std::move(e));
  }

  std::vector<double> evaluate(const std::vector<double>& y) const {
    if (static_cast<int>(y.size()) != dim_) throw std::invalid_argument("evaluation point has wrong dimension");
    std::vector<double> out(target_size_, 0.0);
    // Basis values per (dimension, level), computed lazily.
    std::vector<std::array<std::vector<double>, kMaxLevel + 1>> basis(static_cast<std::size_t>(dim_));
    for (const auto& e : indices_) {
      for (int n = 0; n < dim_; ++n) {
        auto& b = basis[n][e.i[n]];
        if (b.empty()) b = lagrange_basis(e.i[n], y[n]);
      }
      for (std::size_t q : e.nodes) {
        double phi = 1.0;
        for (int n = 0; n < dim_ && phi != 0.0; ++n)
          phi *= basis[n][e.i[n]][detail::local_index(e.i[n], node_key_[q][n])];
        if (phi == 0.0) continue;
        const auto& s = surplus_[q];
        for (std::size_t c = 0; c < target_size_; ++c) out[c] += phi * s[c];
      }
    }
    return out;
  }

  /// Expectation under the uniform density on [-1,1]^N.
  std::vector<double> expectation() const {
    std::vector<double> out(target_size_, 0.0);
    for (const auto& e : indices_)
      for (std::size_t c = 0; c < target_size_; ++c) out[c] += e.contribution[c];
    return out;
  }

  /// Quadrature weight of every explored node (the full-grid rule of the index set).
  std::vector<double> node_weights() const {
    // Linear functional: the expectation of the interpolant of the unit
    // vector at node q. Computed by re-running the surplus recursion.
    const std::size_t Q = point_count();
    SparseInterpolant probe(dim_, Q);
    for (const auto& e : indices_) {
      std::vector<std::vector<double>> vals;
      for (std::size_t q : e.nodes) {
        std::vector<double> v(Q, 0.0);
        v[q] = 1.0;
        vals.push_back(std::move(v));
      }
      probe.add_index(e.i, vals);
    }
    return probe.expectation();
  }

  /// Copy restricted to target components [begin, begin + count).
  SparseInterpolant slice(std::size_t begin, std::size_t count) const {
    if (begin + count > target_size_ || count == 0) throw std::out_of_range("slice outside target");
    SparseInterpolant s = *this;
    s.target_size_ = count;
    s.profit_components_ = 0;
    auto cut = [&](std::vector<double>& v) {
      v = std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(begin),
                              v.begin() + static_cast<std::ptrdiff_t>(begin + count));
    };
    for (auto& v : s.values_) cut(v);
    for (auto& v : s.surplus_) cut(v);
    for (auto& e : s.indices_) {
      cut(e.contribution);
      e.profit = 0.0;
      for (double c : e.contribution) e.profit = std::max(e.profit, std::abs(c));
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["dimension"] = dim_;
    j["target_size"] = target_size_;
    j["capped"] = capped_;
    j["indices"] = nlohmann::json::array();
    for (const auto& e : indices_)
      j["indices"].push_back({{"i", e.i}, {"old", e.old}, {"profit", e.profit}, {"nodes", e.nodes}});
    j["nodes"] = nlohmann::json::array();
    for (std::size_t q = 0; q < node_y_.size(); ++q)
      j["nodes"].push_back({{"y", node_y_[q]}, {"value", values_[q]}, {"surplus", surplus_[q]}});
    return j;
  }

  /// Rebuilds from a document by replaying the stored node values.
  static SparseInterpolant from_json(const nlohmann::json& j) {
    SparseInterpolant s(j.at("dimension").get<int>(), j.at("target_size").get<std::size_t>());
    const auto& nodes = j.at("nodes");
    for (const auto& je : j.at("indices")) {
      const auto i = je.at("i").get<MultiIndex>();
      std::vector<std::vector<double>> vals;
      for (std::size_t q : je.at("nodes").get<std::vector<std::size_t>>()) vals.push_back(nodes.at(q).at("value"));
      s.add_index(i, vals);
      if (je.at("old").get<bool>()) s.mark_old(i);
    }
    s.capped_ = j.value("capped", false);
    return s;
  }

 private:
  void check_index(const MultiIndex& i) const {
    if (static_cast<int>(i.size()) != dim_) throw std::invalid_argument("multi-index has wrong dimension");
    for (int v : i)
      if (v < 1 || v > kMaxLevel) throw std::invalid_argument("multi-index level out of range");
  }

  std::vector<std::vector<int>> new_keys(const MultiIndex& i) const {
    check_index(i);
    std::vector<std::vector<int>> keys{{}};
    for (int n = 0; n < dim_; ++n) {
      std::vector<std::vector<int>> next;
      for (const auto& k : keys)
        for (int p : detail::new_positions(i[n])) {
          auto kk = k;
          kk.push_back(p);
          next.push_back(std::move(kk));
        }
      keys = std::move(next);
    }
    return keys;
  }

  std::vector<double> key_to_y(const std::vector<int>& key) const {
    const auto& t = detail::level_tables();
    std::vector<double> y(key.size());
    for (std::size_t n = 0; n < key.size(); ++n) y[n] = t.nodes[kMaxLevel][static_cast<std::size_t>(key[n])];
    return y;
  }

  static double quad_weight(const MultiIndex& i, const std::vector<int>& key) {
    const auto& t = detail::level_tables();
    double w = 1.0;
    for (std::size_t n = 0; n < key.size(); ++n) w *= t.quad[i[n]][detail::local_index(i[n], key[n])];
    return w;
  }

  int dim_ = 0;
  std::size_t target_size_ = 1;
  std::size_t profit_components_ = 0;
  bool capped_ = false;
  std::vector<IndexEntry> indices_;
  std::map<MultiIndex, std::size_t> pos_;
  std::map<std::vector<int>, std::size_t> node_pos_;
  std::vector<std::vector<double>> node_y_, values_, surplus_;
  std::vector<std::vector<int>> node_key_;
};

}  // namespace pipeflow
