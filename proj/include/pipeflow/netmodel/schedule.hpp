#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pipeflow/netmodel/types.hpp"

namespace pipeflow {

/// Realized boundary value at time t for parameter point y, in file units
/// (bar for pressures, m^3/s for flows). The nominal breakpoints are
/// interpolated linearly, then the uncertainty map is applied.
inline double boundary_value(const BoundarySchedule& s, double t, std::span<const double> y) {
  const auto& nom = s.nominal;
  if (nom.empty()) throw std::invalid_argument("schedule for '" + s.node + "' has no breakpoints");
  if (t < nom.first_time() || t > nom.last_time())
    throw std::out_of_range("time " + std::to_string(t) + " outside schedule range of '" + s.node + "'");
  double v = nom(t);
  if (!s.uncertainty) return v;
  const auto& u = *s.uncertainty;
  if (u.coordinate < 1 || static_cast<std::size_t>(u.coordinate) > y.size())
    throw std::out_of_range("stochastic coordinate " + std::to_string(u.coordinate) + " not in y");
  double yi = y[static_cast<std::size_t>(u.coordinate - 1)];
  double w = u.weight(t);
  if (u.map == UncertaintyMap::affine) return v + w * u.scale * yi;
  return v * (1.0 + w * u.scale * yi);
}

/// Times at which a schedule (or its uncertainty weight) has a kink.
inline std::vector<double> schedule_knots(const BoundarySchedule& s) {
  std::vector<double> out;
  for (const auto& b : s.nominal.points()) out.push_back(b.time);
  if (s.uncertainty && s.uncertainty->ramp) {
    out.push_back(s.uncertainty->ramp->first);
    out.push_back(s.uncertainty->ramp->second);
  }
  return out;
}

}  // namespace pipeflow
