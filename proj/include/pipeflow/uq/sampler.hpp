#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "pipeflow/adapt/anet.hpp"

namespace pipeflow {

/// One deterministic solve at a parameter point and physical tolerance.
struct SampleOutcome {
  double psi = 0.0;
  std::vector<double> traces;  // flattened exit pressures (bar); may be empty
  double work = 0.0;
};

using Sampler = std::function<SampleOutcome(const std::vector<double>& y, double eta_h)>;

/// Memoizes samples per (y, eta_h). Safe for concurrent use; values are
/// deterministic so a duplicate insertion is harmless.
class SampleStore {
 public:
  explicit SampleStore(Sampler s) : sampler_(std::move(s)) {}

  SampleOutcome get(const std::vector<double>& y, double eta_h) {
    Key k{std::bit_cast<std::uint64_t>(eta_h), {}};
    for (double v : y) k.second.push_back(std::bit_cast<std::uint64_t>(v == 0.0 ? 0.0 : v));
    {
      std::lock_guard lock(mu_);
      auto it = cache_.find(k);
      if (it != cache_.end()) {
        ++hits_;
        return it->second;
      }
    }
    SampleOutcome out = sampler_(y, eta_h);
    std::lock_guard lock(mu_);
    if (cache_.emplace(std::move(k), out).second) ++calls_;
    return out;
  }

  std::size_t calls() const { return calls_; }
  std::size_t hits() const { return hits_; }

 private:
  using Key = std::pair<std::uint64_t, std::vector<std::uint64_t>>;
  Sampler sampler_;
  std::mutex mu_;
  std::map<Key, SampleOutcome> cache_;
  std::size_t calls_ = 0, hits_ = 0;
};

/// Effective parameter dimension: zero when no boundary value depends on y.
inline int effective_dimension(const Scenario& sc) {
  for (const auto& s : sc.schedules)
    if (s.uncertainty && s.uncertainty->scale != 0.0) return sc.dimension;
  return 0;
}

/// Sampler backed by the adaptive network solver. A zero-dimensional y is
/// expanded to the center of the parameter box.
inline Sampler anet_sampler(const Scenario& sc, AnetOptions opt = {}, bool keep_traces = true) {
  opt.log = nullptr;
  return [&sc, opt, keep_traces](const std::vector<double>& y, double eta_h) {
    std::vector<double> full = y;
    if (full.empty()) full.assign(static_cast<std::size_t>(sc.dimension), 0.0);
    SampleResult r = anet(sc, full, eta_h, opt);
    SampleOutcome o;
    o.psi = r.psi;
    o.work = r.work;
    if (keep_traces) o.traces = r.traces.flat_exit_pressure();
    return o;
  };
}

}  // namespace pipeflow
