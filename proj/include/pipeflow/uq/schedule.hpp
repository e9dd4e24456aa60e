#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace pipeflow {

/// Rate constants of the work and error models. C_h, C_s are the
/// single-level constants; the multilevel ones are C_H, C_Y (with the
/// interpolation constant folded into C_Y), C_W, s, mu.
struct RateEstimates {
  double C_H = 0.1, C_Y = 0.1, C_W = 1.0, s = 1.0, mu = 2.0;
  double C_h = 0.1, C_s = 0.1;

  void validate() const {
    for (double v : {C_H, C_Y, C_W, s, mu, C_h, C_s})
      if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("rate constants must be positive and finite");
  }
};

inline nlohmann::json to_json(const RateEstimates& r) {
  return {{"C_H", r.C_H}, {"C_Y", r.C_Y}, {"C_W", r.C_W}, {"s", r.s}, {"mu", r.mu}, {"C_h", r.C_h}, {"C_s", r.C_s}};
}

inline RateEstimates rates_from_json(const nlohmann::json& j) {
  RateEstimates r;
  r.C_H = j.value("C_H", r.C_H);
  r.C_Y = j.value("C_Y", r.C_Y);
  r.C_W = j.value("C_W", r.C_W);
  r.s = j.value("s", r.s);
  r.mu = j.value("mu", r.mu);
  r.C_h = j.value("C_h", r.C_H);
  r.C_s = j.value("C_s", r.C_Y);
  r.validate();
  return r;
}

/// Physical and stochastic tolerances per level k = 0..K. eta_s[k] is the
/// stochastic tolerance used for the level-k difference.
struct ToleranceSchedule {
  int K = 0;
  double q = 0.5;
  double eps = 0.0;
  std::vector<double> eta_h;  // k = 0..K, decreasing
  double eta_h_minus1 = 0.0;
  std::vector<double> eta_s;  // per level k
  std::vector<double> F;      // F_k(s)
  double G = 0.0;             // G_K(mu)

  double eta_h_prev(int k) const { return k == 0 ? eta_h_minus1 : eta_h[static_cast<std::size_t>(k - 1)]; }
};

/// Balances the stochastic tolerances across levels so that the
/// interpolation errors sum to eps/2 at minimal predicted cost.
inline ToleranceSchedule tolerance_schedule(double eps, double q, int K, const RateEstimates& r, double eta_h_minus1) {
  if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
  if (!(q > 0 && q < 1)) throw std::invalid_argument("reduction factor q must lie in (0,1)");
  if (K < 0) throw std::invalid_argument("number of levels must be nonnegative");
  if (!(eta_h_minus1 > 0)) throw std::invalid_argument("eta_h_{-1} must be positive");
  r.validate();
  ToleranceSchedule S;
  S.K = K;
  S.q = q;
  S.eps = eps;
  S.eta_h_minus1 = eta_h_minus1;
  const double etaK = eps / (2.0 * r.C_H);
  S.eta_h.resize(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) S.eta_h[static_cast<std::size_t>(k)] = std::pow(q, k - K) * etaK;
  S.eta_h[static_cast<std::size_t>(K)] = etaK;
  if (S.eta_h[0] > 1.0) throw std::invalid_argument("schedule infeasible: coarsest physical tolerance exceeds 1");
  const double ex = r.mu / (r.mu + 1.0);
  std::vector<double> terms(static_cast<std::size_t>(K) + 1);
  for (int k = 0; k <= K; ++k) {
    const double prev = S.eta_h_prev(k);
    double Fk = std::pow(S.eta_h[static_cast<std::size_t>(k)], -r.s);
    if (k > 0) Fk += std::pow(prev, -r.s);
    Fk /= prev;
    S.F.push_back(Fk);
    terms[static_cast<std::size_t>(k)] = std::pow(Fk, ex) * prev;
  }
  for (double t : terms) S.G += t;
  for (int k = 0; k <= K; ++k) S.eta_s.push_back(terms[static_cast<std::size_t>(k)] * eps / (2.0 * r.C_Y * S.G));
  return S;
}

inline nlohmann::json to_json(const ToleranceSchedule& S) {
  return {{"K", S.K}, {"q", S.q}, {"eps", S.eps}, {"eta_h", S.eta_h}, {"eta_h_minus1", S.eta_h_minus1},
          {"eta_s", S.eta_s}, {"F", S.F}, {"G", S.G}};
}

}  // namespace pipeflow
