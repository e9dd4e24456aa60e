#pragma once

// Independent reference computations shared by the unit and acceptance tests.

#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <pipeflow/netmodel.hpp>
#include <pipeflow/solver.hpp>

namespace testing_support {

inline std::string fixture(const std::string& name) { return std::string(PIPEFLOW_FIXTURE_DIR) + "/" + name + ".json"; }

inline pipeflow::Scenario load(const std::string& name) { return pipeflow::load_scenario(fixture(name)); }

/// Outlet pressure of a stationary pipe by RK4 on dp/dx = -lambda c^2 q|q| / (2 D p).
inline double outlet_pressure_rk4(double p_in, double q, double lambda, double c2, double D, double L,
                                  int steps = 100000) {
  auto rhs = [&](double p) { return -lambda * c2 * q * std::abs(q) / (2.0 * D * p); };
  const double h = L / steps;
  double p = p_in;
  for (int k = 0; k < steps; ++k) {
    double k1 = rhs(p), k2 = rhs(p + 0.5 * h * k1), k3 = rhs(p + 0.5 * h * k2), k4 = rhs(p + h * k3);
    p += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return p;
}

// Holds every schedule and compressor jump at its initial value, valves open.
inline pipeflow::Scenario frozen(pipeflow::Scenario sc) {
  for (auto& s : sc.schedules) {
    double v = s.nominal.points().front().value;
    s.nominal = pipeflow::PiecewiseLinear({{0.0, v}, {sc.sim.horizon, v}});
    s.uncertainty.reset();
  }
  for (auto& e : sc.network.edges)
    if (auto* c = std::get_if<pipeflow::Compressor>(&e.data)) {
      double v = c->jump.points().front().value;
      c->jump = pipeflow::PiecewiseLinear({{0.0, v}, {sc.sim.horizon, v}});
    } else if (auto* v = std::get_if<pipeflow::Valve>(&e.data)) {
      v->events.clear();
    }
  return sc;
}

inline std::vector<pipeflow::Discretization> uniform_discs(const pipeflow::Scenario& sc, pipeflow::ModelId m, double dt = 0.0) {
  pipeflow::Scenario s = sc;
  s.sim.initial_model = m;
  auto d = pipeflow::initial_discretization(s);
  if (dt > 0) d.dt = dt;
  return std::vector<pipeflow::Discretization>(static_cast<std::size_t>(sc.sim.slabs), d);
}

/// Composite Simpson rule with an even number of intervals.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

/// Genz oscillatory function on [-1,1]^N written for the unit cube
/// variables u = (y+1)/2, with its exact mean under the uniform density.
struct GenzOscillatory {
  double u1;
  std::vector<double> a;

  double operator()(const std::vector<double>& y) const {
    double arg = 2.0 * std::numbers::pi * u1;
    for (std::size_t n = 0; n < a.size(); ++n) arg += a[n] * 0.5 * (y[n] + 1.0);
    return std::cos(arg);
  }

  // Product of sinc factors: E cos(2 pi u1 + sum a_n u_n).
  double mean() const {
    double re = std::cos(2.0 * std::numbers::pi * u1), im = std::sin(2.0 * std::numbers::pi * u1);
    for (double an : a) {
      // E exp(i a u) = (exp(i a) - 1)/(i a)
      double fr = std::sin(an) / an, fi = (1.0 - std::cos(an)) / an;
      double nr = re * fr - im * fi, ni = re * fi + im * fr;
      re = nr;
      im = ni;
    }
    return re;
  }
};

/// Genz product-peak function with an exact mean.
struct GenzProductPeak {
  std::vector<double> c, w;

  double operator()(const std::vector<double>& y) const {
    double v = 1.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
      double u = 0.5 * (y[n] + 1.0);
      v /= 1.0 / (c[n] * c[n]) + (u - w[n]) * (u - w[n]);
    }
    return v;
  }

  double mean() const {
    double v = 1.0;
    for (std::size_t n = 0; n < c.size(); ++n) v *= c[n] * (std::atan(c[n] * (1.0 - w[n])) + std::atan(c[n] * w[n]));
    return v;
  }
};

/// Least-squares slope of y against x.
inline double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace testing_support
