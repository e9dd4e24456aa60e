#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pipeflow/parallel.hpp"
#include "pipeflow/sgrid/interpolant.hpp"

namespace pipeflow {

/// Exit-pressure traces as a sum of level interpolants; each target is the
/// exit-major concatenation of the per-exit traces on a common time grid.
struct TraceSurrogate {
  std::vector<std::string> exit_ids;
  std::vector<double> grid;  // s
  std::vector<SparseInterpolant> levels;

  int dim() const { return levels.empty() ? 0 : levels.front().dim(); }

  void check() const {
    if (levels.empty()) throw std::invalid_argument("trace surrogate has no interpolant");
    const std::size_t n = exit_ids.size() * grid.size();
    for (const auto& L : levels) {
      if (L.target_size() != n) throw std::invalid_argument("trace surrogate target size does not match exits x grid");
      if (L.dim() != dim()) throw std::invalid_argument("trace surrogate levels differ in dimension");
    }
  }

  std::vector<double> evaluate(const std::vector<double>& y) const {
    std::vector<double> out(exit_ids.size() * grid.size(), 0.0);
    for (const auto& L : levels) {
      auto v = L.evaluate(y);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"exit_ids", exit_ids}, {"grid", grid}, {"levels", nlohmann::json::array()}};
    for (const auto& L : levels) j["levels"].push_back(L.to_json());
    return j;
  }

  static TraceSurrogate from_json(const nlohmann::json& j) {
    TraceSurrogate s;
    s.exit_ids = j.at("exit_ids").get<std::vector<std::string>>();
    s.grid = j.at("grid").get<std::vector<double>>();
    for (const auto& L : j.at("levels")) s.levels.push_back(SparseInterpolant::from_json(L));
    s.check();
    return s;
  }
};

/// Per-exit pressure extrema (bar) of one parameter point.
struct ExtremaSample {
  std::vector<double> y;
  std::vector<double> p_min, p_max;
};

struct SweepOptions {
  int points_per_dim = 51;
  unsigned workers = 1;
  std::size_t memory_cap_bytes = std::size_t{1} << 30;
};

/// Evaluates the surrogate on the uniform tensor grid over [-1,1]^N
/// (lexicographic order, last coordinate fastest) and extracts extrema.
inline std::vector<ExtremaSample> surrogate_sweep(const TraceSurrogate& s, const SweepOptions& opt = {}) {
  s.check();
  if (opt.points_per_dim < 2) throw std::invalid_argument("sweep needs at least 2 points per dimension");
  const int N = s.dim();
  double count = std::pow(static_cast<double>(opt.points_per_dim), N);
  const std::size_t E = s.exit_ids.size();
  const double bytes = count * static_cast<double>(N + 2 * E) * sizeof(double);
  if (bytes > static_cast<double>(opt.memory_cap_bytes))
    throw std::length_error("surrogate sweep exceeds the memory cap: " + std::to_string(static_cast<long long>(count)) +
                            " points");
  const std::size_t n = static_cast<std::size_t>(count);
  const std::size_t T = s.grid.size();
  const auto P = static_cast<std::size_t>(opt.points_per_dim);
  return parallel_map(
      n,
      [&](std::size_t idx) {
        ExtremaSample e;
        e.y.assign(static_cast<std::size_t>(N), 0.0);
        std::size_t r = idx;
        for (int d = N - 1; d >= 0; --d) {
          e.y[static_cast<std::size_t>(d)] = -1.0 + 2.0 * static_cast<double>(r % P) / static_cast<double>(P - 1);
          r /= P;
        }
        const auto v = s.evaluate(e.y);
        for (std::size_t x = 0; x < E; ++x) {
          double lo = v[x * T], hi = v[x * T];
          for (std::size_t t = 1; t < T; ++t) {
            lo = std::min(lo, v[x * T + t]);
            hi = std::max(hi, v[x * T + t]);
          }
          e.p_min.push_back(lo);
          e.p_max.push_back(hi);
        }
        return e;
      },
      opt.workers);
}

}  // namespace pipeflow
