// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <pipeflow/adapt.hpp>
#include <pipeflow/post.hpp>
#include <pipeflow/sgrid.hpp>
#include <pipeflow/solver.hpp>
#include <pipeflow/uq.hpp>

#include "support.hpp"

using namespace pipeflow;
namespace ts = testing_support;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int n, const char* title, double limit_s, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_s) {
    v.pass = false;
    v.detail << " [runtime above " << limit_s << " s]";
  }
  if (!v.pass) ++failures;
  std::printf("%s %2d %s:%s (%.1f s)\n", v.pass ? "PASS" : "FAIL", n, title, v.detail.str().c_str(), secs);
  std::fflush(stdout);
}

using Fn = std::function<double(const std::vector<double>&)>;

BatchEvaluator scalar(Fn f) {
  return make_batch_evaluator([f = std::move(f)](const std::vector<double>& y) { return std::vector<double>{f(y)}; });
}

SmolyakResult adapt(int dim, const Fn& f, double tol, std::size_t max_points = 100000) {
  SmolyakOptions o;
  o.tol = tol;
  o.max_points = max_points;
  return adapt_smolyak(dim, 1, scalar(f), o);
}

std::vector<double> random_point(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> y(static_cast<std::size_t>(dim));
  for (auto& v : y) v = U(rng);
  return y;
}

// ---------------------------------------------------------------- 1

void m3_oracle(Verdict& v) {
  std::mt19937_64 rng(101);
  auto U = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    GasProperties gas;
    gas.T = U(270.0, 300.0);
    Pipe p{U(1e3, 1e5), U(0.3, 1.4), U(0.005, 0.02), 1000.0};
    const double pin = U(30e5, 80e5);
    const double c2 = gas.sound_speed2();
    // Keep the outlet well above vacuum: drop of p^2 at most 60%.
    const double qmax = std::sqrt(0.6 * pin * pin * p.diameter / (p.friction * c2 * p.length));
    const double q = U(-qmax, qmax);
    const double ode = ts::outlet_pressure_rk4(pin, q, p.friction, c2, p.diameter, p.length);
    worst = std::max(worst, std::abs(pipe_outlet_pressure_m3(pin, q, p, gas) - ode) / ode);
  }
  v.detail << " max relative deviation " << worst;
  v.require(worst <= 1e-8, "relative deviation <= 1e-8");
}

// ---------------------------------------------------------------- 2

bool downward_closed(const SparseInterpolant& I) {
  for (const auto& e : I.indices())
    if (!I.admissible(e.i)) return false;
  return true;
}

bool nodes_subset(const SparseInterpolant& a, const SparseInterpolant& b) {
  std::set<std::vector<double>> nb(b.nodes().begin(), b.nodes().end());
  return std::all_of(a.nodes().begin(), a.nodes().end(), [&](const auto& y) { return nb.count(y) > 0; });
}

std::vector<MultiIndex> random_downward_closed(std::mt19937_64& rng, int N, int adds) {
  std::set<MultiIndex> set{MultiIndex(static_cast<std::size_t>(N), 1)};
  for (int a = 0; a < adds; ++a) {
    std::vector<MultiIndex> cur(set.begin(), set.end());
    MultiIndex c = cur[rng() % cur.size()];
    c[rng() % static_cast<std::size_t>(N)] += 1;
    bool ok = std::all_of(c.begin(), c.end(), [](int i) { return i <= 5; });
    for (std::size_t n = 0; ok && n < c.size(); ++n) {
      if (c[n] == 1) continue;
      MultiIndex b = c;
      b[n] -= 1;
      ok = set.count(b) > 0;
    }
    if (ok) set.insert(c);
  }
  return {set.begin(), set.end()};
}

void exactness(Verdict& v) {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> C(-1.0, 1.0);
  double worst_i = 0.0, worst_e = 0.0;
  for (int t = 0; t < 10; ++t) {
    const int N = 1 + t % 3;
    auto set = random_downward_closed(rng, N, 8);
    // Monomials whose per-dimension degree is covered by one index of the set.
    struct Term {
      double c;
      std::vector<int> a;
    };
    std::vector<Term> poly;
    const int terms = 1 + static_cast<int>(rng() % 4);
    double scale = 0.0;
    for (int k = 0; k < terms; ++k) {
      const auto& j = set[rng() % set.size()];
      Term term{C(rng), {}};
      for (int n = 0; n < N; ++n) term.a.push_back(static_cast<int>(rng() % level_to_points(j[static_cast<std::size_t>(n)])));
      scale += std::abs(term.c);
      poly.push_back(term);
    }
    auto p = [&](const std::vector<double>& y) {
      double s = 0.0;
      for (const auto& term : poly) {
        double m = term.c;
        for (std::size_t n = 0; n < y.size(); ++n) m *= std::pow(y[n], term.a[n]);
        s += m;
      }
      return s;
    };
    double mean = 0.0;
    for (const auto& term : poly) {
      double m = term.c;
      for (int a : term.a) m *= a % 2 ? 0.0 : 1.0 / (a + 1);
      mean += m;
    }
    auto I = build_on_index_set(N, 1, set, scalar(p));
    for (int k = 0; k < 50; ++k) {
      auto y = random_point(rng, N);
      worst_i = std::max(worst_i, std::abs(I.evaluate(y)[0] - p(y)) / scale);
    }
    worst_e = std::max(worst_e, std::abs(I.expectation()[0] - mean) / scale);
  }
  v.detail << " polynomial interpolation " << worst_i << ", expectation " << worst_e;
  v.require(worst_i <= 1e-12 && worst_e <= 1e-12, "exactness to 1e-12 relative");

  bool nested_cc = true;
  for (int i = 1; i < kMaxLevel; ++i) {
    auto a = cc_nodes(i), b = cc_nodes(i + 1);
    for (double x : a) nested_cc = nested_cc && std::find(b.begin(), b.end(), x) != b.end();
  }
  v.require(nested_cc, "nested node families");

  int closed = 0, nested = 0, checks = 0;
  for (int run = 0; run < 100; ++run) {
    const int N = 1 + run % 3;
    std::vector<double> a(static_cast<std::size_t>(N));
    for (auto& x : a) x = std::uniform_real_distribution<double>(0.1, 4.0)(rng);
    const double shift = C(rng);
    Fn f = [a, shift](const std::vector<double>& y) {
      double s = shift;
      for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * y[n] * (1.0 + 0.3 * y[(n + 1) % a.size()]);
      return 1.0 / (1.0 + 0.1 * s * s);
    };
    SparseInterpolant prev;
    bool first = true;
    for (std::size_t cap : {4, 12, 30, 80}) {
      auto R = adapt(N, f, 1e-12, cap);
      ++checks;
      closed += downward_closed(R.interp);
      if (!first) nested += nodes_subset(prev, R.interp);
      else ++nested;
      prev = R.interp;
      first = false;
    }
  }
  v.detail << "; " << closed << "/" << checks << " downward closed, " << nested << "/" << checks << " nested";
  v.require(closed == checks && nested == checks, "closure and nestedness on every run");
}

// ---------------------------------------------------------------- 3

void genz(Verdict& v) {
  struct Case {
    const char* name;
    Fn f;
    double mean;
  };
  ts::GenzOscillatory o1{0.3, {1.2, 0.8, 0.5}}, o2{0.1, {2.0, 1.0, 0.3}};
  ts::GenzProductPeak pk{{2.0, 3.0, 1.0}, {0.4, 0.6, 0.5}};
  std::vector<Case> cases{{"oscillatory-a", o1, o1.mean()}, {"oscillatory-b", o2, o2.mean()}, {"product-peak", pk, pk.mean()}};
  double worst = 0.0;
  for (const auto& c : cases)
    for (double tol : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      const double r = std::abs(adapt(3, c.f, tol).interp.expectation()[0] - c.mean) / tol;
      worst = std::max(worst, r);
    }
  v.detail << " max |E - expectation| / eta_s = " << worst;
  v.require(worst <= 10.0, "error <= 10 eta_s");

  // Depends on y1 and y3 only.
  auto R = adapt(3, [](const std::vector<double>& y) { return std::exp(y[0]) * std::cos(0.7 * y[2]); }, 1e-8);
  int max1 = 1, max2 = 1, max3 = 1;
  for (const auto& e : R.interp.indices())
    if (e.old) {
      max1 = std::max(max1, e.i[0]);
      max2 = std::max(max2, e.i[1]);
      max3 = std::max(max3, e.i[2]);
    }
  v.detail << "; anisotropic accepted levels " << max1 << "/" << max2 << "/" << max3;
  v.require(max2 == 1 && max1 > 1 && max3 > 1, "inactive dimension never refined");
}

// ---------------------------------------------------------------- 4

void schedule(Verdict& v) {
  std::mt19937_64 rng(404);
  auto logu = [&](double a, double b) { return std::exp(std::uniform_real_distribution<double>(std::log(a), std::log(b))(rng)); };
  double worst_s = 0.0, worst_h = 0.0;
  for (int t = 0; t < 100; ++t) {
    RateEstimates r;
    r.C_H = logu(0.01, 10);
    r.C_Y = logu(0.01, 10);
    r.s = logu(0.3, 3);
    r.mu = logu(0.5, 4);
    const double eps = logu(1e-8, 1e-3);
    const double q = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
    const int K = static_cast<int>(rng() % 5);
    if (std::pow(q, -K) * eps / (2 * r.C_H) > 1.0) {  // infeasible draw, covered separately
      --t;
      continue;
    }
    auto S = tolerance_schedule(eps, q, K, r, logu(1e-3, 1.0));
    double sum = 0.0;
    for (double e : S.eta_s) sum += r.C_Y * e;
    worst_s = std::max(worst_s, std::abs(sum - eps / 2) / (eps / 2));
    worst_h = std::max(worst_h, std::abs(r.C_H * S.eta_h.back() - eps / 2) / (eps / 2));
  }
  RateEstimates r;
  r.C_Y = 0.37;
  auto S0 = tolerance_schedule(1e-5, 0.5, 0, r, 0.1);
  const double k0 = std::abs(S0.eta_s[0] - 1e-5 / (2 * r.C_Y)) / (1e-5 / (2 * r.C_Y));
  v.detail << " stochastic sum " << worst_s << ", physical " << worst_h << ", K=0 " << k0;
  v.require(worst_s <= 1e-14 && worst_h <= 1e-14 && k0 <= 1e-14, "identities to 1e-14 relative");
}

// ---------------------------------------------------------------- 5

RateEstimates gaslib11_rates() {
  RateEstimates r;
  r.C_H = r.C_h = 0.3;
  r.C_Y = r.C_s = 6.0;
  r.s = 1.0;
  r.mu = 2.0;
  return r;
}

void telescoping(Verdict& v) {
  auto sc = ts::load("gaslib11");
  SampleStore store(anet_sampler(sc, {}, false));
  UqOptions o;
  o.traces = false;
  o.forced_index_set = std::vector<MultiIndex>{{1, 1, 1}, {2, 1, 1}, {1, 2, 1}, {1, 1, 2}, {2, 2, 1}};
  auto M = multilevel(3, store, 1e-4, 0.5, 2, gaslib11_rates(), o);
  const double eta_K = M.levels.back().eta_h;
  auto I = build_on_index_set(3, 1, *o.forced_index_set,
                              make_batch_evaluator([&](const std::vector<double>& y) { return std::vector<double>{store.get(y, eta_K).psi}; }));
  const double diff = std::abs(M.expectation - I.expectation()[0]);
  v.detail << " |ML - single interpolant| = " << diff << " (E = " << M.expectation << ")";
  v.require(diff <= 1e-12, "difference <= 1e-12");
}

// ---------------------------------------------------------------- 6

void self_convergence(Verdict& v) {
  auto sc = ts::load("gaslib11");
  SampleStore store(anet_sampler(sc, {}, false));
  UqOptions o;
  o.traces = false;
  const auto r = gaslib11_rates();
  const double ref = single_level(3, store, 5e-6, r, o).expectation;
  v.detail << " E_ref " << ref << ";";
  for (double eps : {1e-4, 5e-5, 2.5e-5}) {
    const double sl = std::abs(single_level(3, store, eps, r, o).expectation - ref);
    const double ml = std::abs(multilevel(3, store, eps, 0.5, 1, r, o).expectation - ref);
    v.detail << " eps " << eps << ": SL " << sl / eps << " eps, ML " << ml / eps << " eps;";
    v.require(sl <= eps && ml <= eps, "error <= eps at eps = " + std::to_string(eps));
  }
}

// ---------------------------------------------------------------- 7

void work_scaling(Verdict& v) {
  auto sc = ts::load("gaslib40");
  const std::vector<double> y(static_cast<std::size_t>(sc.dimension), 0.0);
  std::vector<double> lx, lw;
  std::vector<double> m3;
  v.detail << " splits";
  for (double eta : {1e-1, 1e-2, 1e-3, 1e-4}) {
    auto r = anet(sc, y, eta);
    lx.push_back(std::log(1.0 / eta));
    lw.push_back(std::log(r.work));
    m3.push_back(r.split.m3);
    v.detail << " " << r.split.str();
  }
  const double slope = ts::ls_slope(lx, lw);
  v.detail << "; slope " << slope;
  v.require(slope >= 0.5 && slope <= 2.0, "slope in [0.5, 2]");
  v.require(m3[0] == 100.0, "M3 share 100% at 1e-1");
  for (std::size_t k = 1; k < m3.size(); ++k) v.require(m3[k] < m3[k - 1], "strictly decreasing M3 share");
}

// ---------------------------------------------------------------- 8

void balance(Verdict& v) {
  auto sc = ts::frozen(ts::load("gaslib11"));
  const std::vector<double> y{0.0, 0.0, 0.0};
  double drift = 0.0;
  for (ModelId m : {ModelId::M3, ModelId::M2, ModelId::M1}) {
    auto d = ts::uniform_discs(sc, m).front();
    auto s0 = steady_state(sc, y, 0.0, d);
    std::vector<double> times;
    for (double t = 0.0; t <= sc.sim.horizon + 1e-9; t += d.dt) times.push_back(t);
    auto run = run_steps(sc.network, sc.gas, d, s0, times, scenario_frames(sc, y));
    double rho_max = 0.0, flux_max = 0.0;
    for (std::size_t e = 0; e < sc.network.edges.size(); ++e) {
      if (!sc.network.edges[e].is_pipe()) continue;
      for (double x : s0.rho[e]) rho_max = std::max(rho_max, std::abs(x));
      for (double x : s0.flux[e]) flux_max = std::max(flux_max, std::abs(x));
    }
    for (std::size_t e = 0; e < sc.network.edges.size(); ++e) {
      if (!sc.network.edges[e].is_pipe()) continue;
      for (std::size_t k = 0; k < s0.rho[e].size(); ++k) {
        drift = std::max(drift, std::abs(run.end.rho[e][k] - s0.rho[e][k]) / rho_max);
        drift = std::max(drift, std::abs(run.end.flux[e][k] - s0.flux[e][k]) / flux_max);
      }
    }
  }
  auto tr = ts::load("gaslib11");
  double bal = 0.0, jump = 0.0;
  for (ModelId m : {ModelId::M3, ModelId::M2, ModelId::M1}) {
    auto rr = simulate_fixed(tr, std::vector<double>{0.3, -0.5, 0.8}, ts::uniform_discs(tr, m), true);
    for (const auto& run : rr.slabs) {
      bal = std::max(bal, run.max_balance_residual);
      jump = std::max(jump, run.max_jump_residual);
    }
  }
  v.detail << " steady drift " << drift << ", junction balance " << bal << ", compressor jump " << jump << " Pa";
  v.require(drift <= 1e-9, "drift <= 1e-9");
  v.require(bal <= 1e-8 && jump <= 1e-8, "residuals <= 1e-8");
}

// ---------------------------------------------------------------- 9

void kde_pipeline(Verdict& v) {
  const double H = kde_bandwidth(1.0, 100000);
  v.detail << " H(1, 1e5) = " << H;
  v.require(std::abs(H - 0.106) <= 5e-4, "bandwidth 0.106");

  auto sc = ts::load("symmetric_two_exit");
  SampleStore store(anet_sampler(sc));
  RateEstimates r;
  r.C_H = r.C_h = r.C_Y = r.C_s = 0.3;
  auto R = single_level(sc.dimension, store, 1e-4, r);
  auto sur = make_trace_surrogate(R, exit_ids(sc), trace_grid(sc));
  SweepOptions so;
  so.points_per_dim = 51;
  auto samples = surrogate_sweep(sur, so);
  std::vector<double> a, b;
  for (const auto& s : samples) {
    a.push_back(s.p_min[0]);
    b.push_back(s.p_min[1]);
  }
  auto ka = kde(a), kb = kde(b);

  const double lo = *std::min_element(a.begin(), a.end()) - 6 * ka.H;
  const double hi = *std::max_element(a.begin(), a.end()) + 6 * ka.H;
  const double mass = ts::simpson([&](double x) { return ka.density(x); }, lo, hi, 10000);
  v.detail << "; |mass - 1| " << std::abs(mass - 1.0);
  v.require(std::abs(mass - 1.0) <= 1e-6, "normalization within 1e-6");

  bool complementary = true;
  double sym = 0.0;
  for (int k = 0; k <= 20; ++k) {
    const double bound = lo + (hi - lo) * k / 20.0;
    auto below = violation_probability(ka, bound, Side::below), above = violation_probability(ka, bound, Side::above);
    complementary = complementary && below.p_kde + above.p_kde == 1.0;
    sym = std::max(sym, std::abs(below.p_kde - violation_probability(kb, bound, Side::below).p_kde));
  }
  v.detail << "; exit asymmetry " << sym;
  v.require(complementary, "exact complementarity");
  v.require(sym <= 1e-10, "symmetric exits equal to 1e-10");
}

// ---------------------------------------------------------------- 10

void rates(Verdict& v) {
  const double a = 1.0 / 6.0, b = 3.0 / 50.0;
  auto T2 = [](double y) { return 2.0 * y * y - 1.0; };
  SampleStore synth([&](const std::vector<double>& y, double eta) {
    SampleOutcome o;
    o.psi = 1.0 + eta * ((1.0 + a + b) + a * T2(y[0]) + b * T2(y[1]));
    o.work = 1.0 / eta;
    return o;
  });
  auto S = estimate_rates(2, synth, {1e-2, 1e-3, 1e-4});
  v.detail << " synthetic s " << S.raw.s << ", mu " << S.raw.mu;
  v.require(std::abs(S.raw.s - 1.0) <= 0.01, "synthetic s = 1.00 +- 0.01");
  v.require(std::abs(S.raw.mu - 2.0) <= 0.2, "synthetic mu = 2.0 +- 0.2");

  auto sc = ts::load("gaslib11");
  SampleStore store(anet_sampler(sc, {}, false));
  // The same low-tolerance pilots supply the campaign rates of criterion 6.
  auto G = estimate_rates(3, store, {1e-3, 1e-4, 1e-5, 2.5e-6});
  v.detail << "; gaslib11 raw s " << G.raw.s << " mu " << G.raw.mu << " C_H " << G.raw.C_H << " C_Y " << G.raw.C_Y
           << ", rounded s " << G.rounded.s << " mu " << G.rounded.mu << " C_H " << G.rounded.C_H << " C_Y " << G.rounded.C_Y;
  v.require(G.rounded.s == 1.0, "gaslib11 rounded s = 1");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));
  auto want = [&](int n) { return only.empty() || only.count(n) > 0; };

  if (want(1)) criterion(1, "stationary pipe law vs ODE integration", 1.0, m3_oracle);
  if (want(2)) criterion(2, "sparse-grid exactness, nestedness, closure", 10.0, exactness);
  if (want(3)) criterion(3, "adaptive Smolyak on Genz functions", 30.0, genz);
  if (want(4)) criterion(4, "tolerance schedule identities", 1.0, schedule);
  if (want(5)) criterion(5, "multilevel telescoping on gaslib11", 600.0, telescoping);
  if (want(6)) criterion(6, "self-convergence on gaslib11", 1800.0, self_convergence);
  if (want(7)) criterion(7, "work scaling and model split on gaslib40", 1200.0, work_scaling);
  if (want(8)) criterion(8, "well-balancedness and coupling residuals", 300.0, balance);
  if (want(9)) criterion(9, "density estimation pipeline", 30.0, kde_pipeline);
  if (want(10)) criterion(10, "rate estimation", 600.0, rates);
  return failures == 0 ? 0 : 1;
}
