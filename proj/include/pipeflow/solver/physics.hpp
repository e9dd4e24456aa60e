#pragma once

#include <cmath>
#include <stdexcept>

#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/types.hpp"

namespace pipeflow {

/// Outlet pressure of a stationary (algebraic-model) pipe. q is the mass
/// flux in orientation direction; negative q means the gas enters at the
/// nominal outlet and the pressure rises along the orientation.
inline double pipe_outlet_pressure_m3(double p_in, double q, const Pipe& pipe, const GasProperties& gas) {
  if (!(p_in > 0)) throw std::invalid_argument("inlet pressure must be positive");
  double drop = pipe.friction * gas.sound_speed2() * q * std::abs(q) * pipe.length / pipe.diameter;
  double sq = p_in * p_in - drop;
  if (!(sq > 0)) throw SolverError("pipe flow infeasible under M3");
  return std::sqrt(sq);
}

inline double pipe_outlet_pressure_m3(double p_in, double q, const Edge& edge, const GasProperties& gas) {
  return pipe_outlet_pressure_m3(p_in, q, std::get<Pipe>(edge.data), gas);
}

/// Mechanical power of a compressor for inlet volume flow q_in (m^3/s).
inline double compressor_power(double p_in, double p_out, double q_in, const Compressor& c, const GasProperties& gas) {
  if (!(p_in > 0) || !(p_out > 0)) throw std::invalid_argument("compressor pressures must be positive");
  double kappa = (c.gamma - 1.0) / c.gamma;
  return c.c_f * q_in * gas.z * (std::pow(p_out / p_in, kappa) - 1.0);
}

inline double compressor_power(double p_in, double p_out, double q_in, const Edge& edge, const GasProperties& gas) {
  return compressor_power(p_in, p_out, q_in, std::get<Compressor>(edge.data), gas);
}

}  // namespace pipeflow
