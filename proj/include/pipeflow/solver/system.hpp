#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "pipeflow/common.hpp"
#include "pipeflow/netmodel/types.hpp"
#include "pipeflow/solver/state.hpp"

namespace pipeflow {

/// Boundary and control data for one implicit step, in scaled units:
/// pressures in bar, mass flows as m*c/P0.
struct Frame {
  std::vector<double> source_u;    // per node
  std::vector<double> demand;      // per node, scaled mass flow leaving the network
  std::vector<double> jump;        // per edge, bar
  std::vector<ValveState> valve;   // per edge
};

/// Discrete network equations for a fixed discretization, with the
/// unknowns scaled as u = p/P0 and w = q c/P0.
///
/// Each pipe cell uses the implicit box scheme. Pipe end pressures are the
/// node pressures, so pressure continuity at nodes holds by construction.
class NetworkSystem {
 public:
  static constexpr double P0 = kPascalPerBar;
  static constexpr int kMaxNewton = 50;

  NetworkSystem(const Network& net, const GasProperties& gas, const Discretization& disc)
      : net_(net), gas_(gas), disc_(disc), c_(gas.sound_speed()) {
    const std::size_t V = net.nodes.size();
    std::size_t next = V;
    off_.assign(net.edges.size(), 0);
    from_.resize(net.edges.size());
    to_.resize(net.edges.size());
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
      from_[e] = *net.node_index(net.edges[e].from);
      to_[e] = *net.node_index(net.edges[e].to);
      off_[e] = next;
      next += net.edges[e].is_pipe() ? 2 * static_cast<std::size_t>(disc.cells[e]) : 1;
      if (const auto* p = std::get_if<Pipe>(&net.edges[e].data)) area_ref_ = std::max(area_ref_, p->area());
    }
    size_ = next;
    if (area_ref_ == 0.0) area_ref_ = 1.0;
  }

  std::size_t size() const { return size_; }
  const Discretization& disc() const { return disc_; }
  const Network& network() const { return net_; }
  double sound_speed() const { return c_; }

  int cells(std::size_t e) const { return disc_.cells[e]; }
  std::size_t u_index(std::size_t e, int k) const {
    if (k == 0) return from_[e];
    if (k == cells(e)) return to_[e];
    return off_[e] + static_cast<std::size_t>(k - 1);
  }
  std::size_t w_index(std::size_t e, int k) const {
    return off_[e] + static_cast<std::size_t>(cells(e) - 1 + k);
  }
  std::size_t flow_index(std::size_t e) const { return off_[e]; }
  std::size_t from_node(std::size_t e) const { return from_[e]; }
  std::size_t to_node(std::size_t e) const { return to_[e]; }

  /// Scaled mass flow of an edge at its from (end=0) or to (end=1) side.
  double edge_mass(const Eigen::VectorXd& x, std::size_t e, int end) const {
    if (const auto* p = std::get_if<Pipe>(&net_.edges[e].data))
      return p->area() * x[w_index(e, end == 0 ? 0 : cells(e))];
    return x[flow_index(e)];
  }

  Eigen::VectorXd pack(const NetworkState& s) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(size_));
    const double c2 = gas_.sound_speed2();
    for (std::size_t v = 0; v < net_.nodes.size(); ++v) x[idx(v)] = s.node_p[v] / P0;
    for (std::size_t e = 0; e < net_.edges.size(); ++e) {
      if (net_.edges[e].is_pipe()) {
        int n = cells(e);
        for (int k = 1; k < n; ++k) x[idx(u_index(e, k))] = s.rho[e][static_cast<std::size_t>(k)] * c2 / P0;
        for (int k = 0; k <= n; ++k) x[idx(w_index(e, k))] = s.flux[e][static_cast<std::size_t>(k)] * c_ / P0;
      } else {
        x[idx(flow_index(e))] = s.edge_flow[e] * c_ / P0;
      }
    }
    return x;
  }

  NetworkState unpack(const Eigen::VectorXd& x, double t) const {
    NetworkState s;
    s.t = t;
    const double c2 = gas_.sound_speed2();
    s.node_p.resize(net_.nodes.size());
    for (std::size_t v = 0; v < net_.nodes.size(); ++v) s.node_p[v] = x[idx(v)] * P0;
    s.rho.resize(net_.edges.size());
    s.flux.resize(net_.edges.size());
    s.edge_flow.assign(net_.edges.size(), 0.0);
    for (std::size_t e = 0; e < net_.edges.size(); ++e) {
      if (net_.edges[e].is_pipe()) {
        int n = cells(e);
        s.rho[e].resize(static_cast<std::size_t>(n) + 1);
        s.flux[e].resize(static_cast<std::size_t>(n) + 1);
        for (int k = 0; k <= n; ++k) {
          s.rho[e][static_cast<std::size_t>(k)] = x[idx(u_index(e, k))] * P0 / c2;
          s.flux[e][static_cast<std::size_t>(k)] = x[idx(w_index(e, k))] * P0 / c_;
        }
      } else {
        s.edge_flow[e] = x[idx(flow_index(e))] * P0 / c_;
      }
    }
    return s;
  }

  /// Residual and (optionally) Jacobian triplets. xold == nullptr selects
  /// the stationary equations. `floor` regularizes d(w|w|)/dw near w = 0 in
  /// the Jacobian only; the residual is unaffected.
  void assemble(const Eigen::VectorXd& x, const Eigen::VectorXd* xold, double dt, const Frame& fr,
                Eigen::VectorXd& R, std::vector<Eigen::Triplet<double>>* J, double floor) const {
    R.setZero(static_cast<Eigen::Index>(size_));
    if (J) J->clear();
    auto add = [&](std::size_t r, std::size_t c, double v) {
      if (J) J->emplace_back(static_cast<int>(r), static_cast<int>(c), v);
    };

    // Node equations.
    for (std::size_t v = 0; v < net_.nodes.size(); ++v) {
      if (net_.nodes[v].kind == NodeKind::source) {
        R[idx(v)] = x[idx(v)] - fr.source_u[v];
        add(v, v, 1.0);
      } else {
        R[idx(v)] = -fr.demand[v] / area_ref_;
      }
    }
    for (std::size_t e = 0; e < net_.edges.size(); ++e) {
      const std::size_t a = from_[e], b = to_[e];
      const bool a_bal = net_.nodes[a].kind != NodeKind::source;
      const bool b_bal = net_.nodes[b].kind != NodeKind::source;
      if (const auto* p = std::get_if<Pipe>(&net_.edges[e].data)) {
        const double A = p->area() / area_ref_;
        const std::size_t w0 = w_index(e, 0), wn = w_index(e, cells(e));
        if (a_bal) {
          R[idx(a)] -= A * x[idx(w0)];
          add(a, w0, -A);
        }
        if (b_bal) {
          R[idx(b)] += A * x[idx(wn)];
          add(b, wn, A);
        }
        assemble_pipe(e, *p, x, xold, dt, R, add, floor);
      } else {
        const std::size_t m = flow_index(e);
        if (a_bal) {
          R[idx(a)] -= x[idx(m)] / area_ref_;
          add(a, m, -1.0 / area_ref_);
        }
        if (b_bal) {
          R[idx(b)] += x[idx(m)] / area_ref_;
          add(b, m, 1.0 / area_ref_);
        }
        if (net_.edges[e].is_compressor()) {
          R[idx(m)] = x[idx(b)] - x[idx(a)] - fr.jump[e];
          add(m, b, 1.0);
          add(m, a, -1.0);
          add(m, m, 0.0);
        } else if (fr.valve[e] == ValveState::open) {
          R[idx(m)] = x[idx(b)] - x[idx(a)];
          add(m, b, 1.0);
          add(m, a, -1.0);
          add(m, m, 0.0);
        } else {
          R[idx(m)] = x[idx(m)];
          add(m, b, 0.0);
          add(m, a, 0.0);
          add(m, m, 1.0);
        }
      }
    }
  }

  /// Newton solve in place. Returns the number of iterations used.
  int newton(Eigen::VectorXd& x, const Eigen::VectorXd* xold, double dt, const Frame& fr, long step = -1,
             double floor0 = 1e-3) {
    Eigen::VectorXd R, Rt, dx, xt;
    std::vector<Eigen::Triplet<double>> trip;
    const auto n = static_cast<Eigen::Index>(size_);
    Eigen::SparseMatrix<double> J(n, n);
    double floor = floor0;
    close_valves(x, fr);
    assemble(x, xold, dt, fr, R, nullptr, 0.0);
    double rnorm = R.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < kMaxNewton; ++it) {
      double tol = 1e-10 * std::max(1.0, max_pressure(x));
      if (rnorm <= tol) return it;
      assemble(x, xold, dt, fr, R, &trip, floor);
      J.setFromTriplets(trip.begin(), trip.end());
      J.makeCompressed();
      if (!analyzed_) {
        lu_.analyzePattern(J);
        analyzed_ = true;
      }
      lu_.factorize(J);
      if (lu_.info() != Eigen::Success) throw SolverError("singular network Jacobian", step);
      dx = lu_.solve(-R);
      if (!dx.allFinite()) throw SolverError("Newton update not finite", step);
      // Backtracking on the residual norm with a positivity guard.
      double alpha = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 30; ++ls) {
        xt = x + alpha * dx;
        close_valves(xt, fr);
        if (positive(xt)) {
          assemble(xt, xold, dt, fr, Rt, nullptr, 0.0);
          double tn = Rt.lpNorm<Eigen::Infinity>();
          if (std::isfinite(tn) && (tn < (1.0 - 1e-4 * alpha) * rnorm || tn <= tol)) {
            accepted = true;
            break;
          }
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (!positive(xt)) throw SolverError("nonpositive pressure encountered", step);
        // Accept the smallest trial step; regularization may have produced
        // a poor direction, so shrink the floor for the next attempt.
        assemble(xt, xold, dt, fr, Rt, nullptr, 0.0);
      }
      x = xt;
      R = Rt;
      rnorm = R.lpNorm<Eigen::Infinity>();
      floor *= 0.1;
    }
    double tol = 1e-10 * std::max(1.0, max_pressure(x));
    if (rnorm <= tol) return kMaxNewton;
    throw SolverError("Newton did not converge (residual " + std::to_string(rnorm) + ")", step);
  }

  /// A closed valve's flow equation is x = 0 and decoupled; set it exactly.
  void close_valves(Eigen::VectorXd& x, const Frame& fr) const {
    for (std::size_t e = 0; e < net_.edges.size(); ++e)
      if (net_.edges[e].is_valve() && fr.valve[e] == ValveState::closed) x[idx(flow_index(e))] = 0.0;
  }

  double max_pressure(const Eigen::VectorXd& x) const {
    double m = 0.0;
    for (std::size_t v = 0; v < net_.nodes.size(); ++v) m = std::max(m, std::abs(x[idx(v)]));
    return m;
  }

  bool positive(const Eigen::VectorXd& x) const {
    for (std::size_t v = 0; v < net_.nodes.size(); ++v)
      if (!(x[idx(v)] > 0)) return false;
    for (std::size_t e = 0; e < net_.edges.size(); ++e)
      if (net_.edges[e].is_pipe())
        for (int k = 1; k < cells(e); ++k)
          if (!(x[idx(u_index(e, k))] > 0)) return false;
    return true;
  }

 private:
  static Eigen::Index idx(std::size_t i) { return static_cast<Eigen::Index>(i); }

  template <class Add>
  void assemble_pipe(std::size_t e, const Pipe& p, const Eigen::VectorXd& x, const Eigen::VectorXd* xold,
                     double dt, Eigen::VectorXd& R, Add& add, double floor) const {
    const int n = cells(e);
    const double dx = p.length / n;
    const ModelId model = disc_.model[e];
    const double kappa = p.friction * dx / (2.0 * p.diameter);
    const bool algebraic = model == ModelId::M3;
    const bool transient = xold != nullptr && !algebraic;
    const bool kinetic = model == ModelId::M1;
    const double sigma = c_ * dt / dx;
    const double s = transient ? 1.0 / (1.0 + sigma) : 1.0;
    // Coefficients of the spatial terms and the friction term.
    const double cs = transient ? s * sigma : 1.0;
    const double cf = transient ? s * sigma * kappa : kappa;

    for (int k = 0; k < n; ++k) {
      const std::size_t ia = u_index(e, k), ib = u_index(e, k + 1);
      const std::size_t ja = w_index(e, k), jb = w_index(e, k + 1);
      const double ua = x[idx(ia)], ub = x[idx(ib)], wa = x[idx(ja)], wb = x[idx(jb)];
      const std::size_t rc = off_[e] + 2 * static_cast<std::size_t>(k), rm = rc + 1;

      const double um = 0.5 * (ua + ub), wm = 0.5 * (wa + wb);
      const double f = wm * std::abs(wm) / um;
      const double df_dw = 2.0 * std::max(std::abs(wm), floor) / um;  // d f / d wm
      const double df_du = -f / um;                                   // d f / d um

      // Continuity.
      double Rc = cs * (wb - wa);
      add(rc, jb, cs);
      add(rc, ja, -cs);
      if (transient) {
        const double uao = (*xold)[idx(ia)], ubo = (*xold)[idx(ib)];
        Rc += s * 0.5 * (ua + ub - uao - ubo);
        add(rc, ia, 0.5 * s);
        add(rc, ib, 0.5 * s);
      } else {
        add(rc, ia, 0.0);
        add(rc, ib, 0.0);
      }
      R[idx(rc)] = Rc;

      // Momentum.
      double phia = ua, phib = ub, dpa_u = 1.0, dpb_u = 1.0, dpa_w = 0.0, dpb_w = 0.0;
      if (kinetic) {
        phia += wa * wa / ua;
        phib += wb * wb / ub;
        dpa_u -= wa * wa / (ua * ua);
        dpb_u -= wb * wb / (ub * ub);
        dpa_w = 2.0 * wa / ua;
        dpb_w = 2.0 * wb / ub;
      }
      double Rm = cs * (phib - phia) + cf * f;
      double jua = -cs * dpa_u + cf * 0.5 * df_du;
      double jub = cs * dpb_u + cf * 0.5 * df_du;
      double jwa = -cs * dpa_w + cf * 0.5 * df_dw;
      double jwb = cs * dpb_w + cf * 0.5 * df_dw;
      if (transient) {
        const double wao = (*xold)[idx(ja)], wbo = (*xold)[idx(jb)];
        Rm += s * 0.5 * (wa + wb - wao - wbo);
        jwa += 0.5 * s;
        jwb += 0.5 * s;
      }
      R[idx(rm)] = Rm;
      add(rm, ia, jua);
      add(rm, ib, jub);
      add(rm, ja, jwa);
      add(rm, jb, jwb);
    }
  }

  const Network& net_;
  GasProperties gas_;
  Discretization disc_;
  double c_;
  double area_ref_ = 0.0;
  std::size_t size_ = 0;
  std::vector<std::size_t> off_, from_, to_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  bool analyzed_ = false;
};

}  // namespace pipeflow
