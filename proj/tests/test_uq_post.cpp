#include <catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include <pipeflow/post.hpp>
#include <pipeflow/sgrid.hpp>
#include <pipeflow/uq.hpp>

#include "support.hpp"

using namespace pipeflow;
using Catch::Approx;
using testing_support::load;

namespace {

using Fn = std::function<double(const std::vector<double>&)>;

BatchEvaluator scalar(Fn f) {
  return make_batch_evaluator([f = std::move(f)](const std::vector<double>& y) { return std::vector<double>{f(y)}; });
}

SmolyakResult adapt(int dim, Fn f, double tol, std::size_t max_points = 100000) {
  SmolyakOptions o;
  o.tol = tol;
  o.max_points = max_points;
  return adapt_smolyak(dim, 1, scalar(std::move(f)), o);
}

bool downward_closed(const SparseInterpolant& I) {
  for (const auto& e : I.indices())
    if (!I.admissible(e.i)) return false;
  return true;
}

// Every node of `a` is a node of `b`.
bool nodes_subset(const SparseInterpolant& a, const SparseInterpolant& b) {
  std::set<std::vector<double>> nb(b.nodes().begin(), b.nodes().end());
  return std::all_of(a.nodes().begin(), a.nodes().end(), [&](const auto& y) { return nb.count(y) > 0; });
}

std::vector<double> random_point(std::mt19937_64& rng, int dim) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<double> y(static_cast<std::size_t>(dim));
  for (auto& v : y) v = U(rng);
  return y;
}

// Synthetic solver: psi = 1 + eta f(y), work = 1/eta.
Sampler power_law_sampler(Fn f) {
  return [f = std::move(f)](const std::vector<double>& y, double eta) {
    SampleOutcome o;
    o.psi = 1.0 + eta * f(y);
    o.work = 1.0 / eta;
    o.traces = {o.psi, 2.0 * o.psi};
    return o;
  };
}

double cheb2(double y) { return 2.0 * y * y - 1.0; }

}  // namespace

// ---------------------------------------------------------------- nodes

TEST_CASE("level sizes and nested Clenshaw-Curtis nodes", "[sgrid]") {
  CHECK(level_to_points(1) == 1);
  CHECK(level_to_points(2) == 3);
  CHECK(level_to_points(4) == 9);
  for (int i = 1; i < kMaxLevel; ++i) CHECK(level_to_points(i + 1) > level_to_points(i));
  CHECK_THROWS(level_to_points(0));

  CHECK(cc_nodes(1) == std::vector<double>{0.0});
  CHECK(cc_nodes(2) == std::vector<double>{-1.0, 0.0, 1.0});
  auto n3 = cc_nodes(3);
  REQUIRE(n3.size() == 5);
  const double r = std::sqrt(2.0) / 2.0;
  std::vector<double> e3{-1.0, -r, 0.0, r, 1.0};
  for (std::size_t j = 0; j < 5; ++j) CHECK(n3[j] == Approx(e3[j]).margin(1e-15));

  for (int i = 1; i < 9; ++i) {
    auto a = cc_nodes(i), b = cc_nodes(i + 1);
    for (double x : a) CHECK(std::find(b.begin(), b.end(), x) != b.end());
    auto w = cc_weights(i);
    double sum = 0, second = 0;
    for (std::size_t j = 0; j < w.size(); ++j) {
      sum += w[j];
      second += w[j] * a[j] * a[j];
    }
    CHECK(sum == Approx(1.0).epsilon(1e-14));
    if (i >= 2) CHECK(second == Approx(1.0 / 3.0).epsilon(1e-13));
  }
}

// ---------------------------------------------------------------- surpluses

TEST_CASE("hierarchical surpluses reproduce polynomials", "[sgrid]") {
  SECTION("constant target") {
    const double kappa = 3.25;
    for (int N : {0, 1, 2, 3}) {
      auto R = adapt(N, [&](const std::vector<double>&) { return kappa; }, 1e-8);
      CHECK(R.converged);
      // Forward neighbors of the root must be evaluated to see zero profit.
      CHECK(R.interp.point_count() == static_cast<std::size_t>(2 * N + 1));
      CHECK(R.interp.surpluses()[0][0] == kappa);
      for (std::size_t q = 1; q < R.interp.point_count(); ++q) CHECK(R.interp.surpluses()[q][0] == 0.0);
      CHECK(R.interp.expectation()[0] == kappa);
      std::mt19937_64 rng(1);
      for (int k = 0; k < 5; ++k) CHECK(R.interp.evaluate(random_point(rng, N))[0] == Approx(kappa).epsilon(1e-15));
    }
  }
  SECTION("linear target in one dimension") {
    SparseInterpolant I(1, 1);
    auto f = [](const std::vector<double>& y) { return std::vector<double>{y[0]}; };
    for (int i : {1, 2}) {
      std::vector<std::vector<double>> vals;
      for (const auto& y : I.new_nodes({i})) vals.push_back(f(y));
      I.add_index({i}, vals);
    }
    for (double y : {-0.9, -0.31, 0.0, 0.42, 1.0}) CHECK(I.evaluate({y})[0] == Approx(y).margin(1e-15));
    CHECK(I.expectation()[0] == Approx(0.0).margin(1e-16));
  }
  SECTION("tensor degree two in two dimensions") {
    auto f = [](const std::vector<double>& y) { return std::vector<double>{y[0] * y[0] * y[1] * y[1]}; };
    auto I = build_on_index_set(2, 1, {{1, 1}, {2, 1}, {1, 2}, {2, 2}}, make_batch_evaluator(f));
    std::mt19937_64 rng(2);
    for (int k = 0; k < 10; ++k) {
      auto y = random_point(rng, 2);
      CHECK(std::abs(I.evaluate(y)[0] - f(y)[0]) <= 1e-15);
    }
    CHECK(I.expectation()[0] == Approx(1.0 / 9.0).epsilon(1e-14));
  }
  SECTION("expectation examples") {
    auto one = build_on_index_set(1, 1, {{1}, {2}}, scalar([](const auto&) { return 1.0; }));
    CHECK(one.expectation()[0] == Approx(1.0).epsilon(1e-15));
    auto sq = build_on_index_set(1, 1, {{1}, {2}}, scalar([](const auto& y) { return y[0] * y[0]; }));
    CHECK(sq.expectation()[0] == Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(sq.evaluate({0.3})[0] == Approx(0.09).epsilon(1e-14));
  }
}

TEST_CASE("interpolant contracts", "[sgrid]") {
  auto f = [](const std::vector<double>& y) { return std::exp(y[0]) * (1.0 + 0.1 * y[1]); };
  auto R = adapt(2, f, 1e-6);
  const auto& I = R.interp;
  for (std::size_t q = 0; q < I.point_count(); ++q) CHECK(I.evaluate(I.nodes()[q])[0] == f(I.nodes()[q]));
  CHECK(I.surpluses().size() == I.point_count());
  CHECK_THROWS_AS(I.evaluate({0.1}), std::invalid_argument);

  double wsum = 0.0;
  for (double w : I.node_weights()) wsum += w;
  CHECK(wsum == Approx(1.0).epsilon(1e-13));

  SparseInterpolant J(2, 1);
  CHECK_THROWS_AS(J.add_index({2, 1}, {{0.0}, {0.0}}), std::invalid_argument);

  auto K = SparseInterpolant::from_json(I.to_json());
  std::mt19937_64 rng(3);
  for (int k = 0; k < 10; ++k) {
    auto y = random_point(rng, 2);
    CHECK(K.evaluate(y) == I.evaluate(y));
  }
  CHECK(K.expectation() == I.expectation());

  auto failing = make_batch_evaluator([](const std::vector<double>& y) -> std::vector<double> {
    if (y[0] > 0.5) throw std::runtime_error("boom");
    return {1.0 + y[0]};
  });
  SmolyakOptions o;
  o.tol = 1e-12;
  try {
    adapt_smolyak(1, 1, failing, o);
    FAIL("expected an evaluation error");
  } catch (const EvaluationError& e) {
    CHECK(e.y() == std::vector<double>{1.0});
  }

  auto capped = adapt(3, [](const auto& y) { return std::cos(3 * y[0] + 2 * y[1] - y[2]); }, 1e-14, 40);
  CHECK(!capped.converged);
  CHECK(capped.interp.capped());
  CHECK(capped.interp.point_count() <= 40);
}

TEST_CASE("adaptation is downward closed and nested", "[sgrid][property]") {
  std::mt19937_64 rng(11);
  for (int run = 0; run < 20; ++run) {
    const int N = 1 + run % 3;
    std::vector<double> a(static_cast<std::size_t>(N));
    for (auto& v : a) v = std::uniform_real_distribution<double>(0.2, 3.0)(rng);
    Fn f = [a](const std::vector<double>& y) {
      double s = 0;
      for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * y[n];
      return std::exp(0.5 * s);
    };
    SparseInterpolant prev;
    bool first = true;
    for (std::size_t cap : {5, 15, 40, 120}) {
      auto R = adapt(N, f, 1e-10, cap);
      CHECK(downward_closed(R.interp));
      if (!first) CHECK(nodes_subset(prev, R.interp));
      prev = R.interp;
      first = false;
    }
  }
}

TEST_CASE("surpluses are linear in the target on a fixed index set", "[sgrid][property]") {
  std::vector<MultiIndex> set{{1, 1}, {2, 1}, {1, 2}, {3, 1}, {2, 2}, {1, 3}, {4, 1}};
  auto f = [](const std::vector<double>& y) { return std::sin(y[0]) + y[1] * y[1]; };
  auto g = [](const std::vector<double>& y) { return std::exp(y[0] * y[1]); };
  const double al = 0.7, be = -2.3;
  auto If = build_on_index_set(2, 1, set, scalar(f));
  auto Ig = build_on_index_set(2, 1, set, scalar(g));
  auto Ih = build_on_index_set(2, 1, set, scalar([&](const auto& y) { return al * f(y) + be * g(y); }));
  REQUIRE(If.point_count() == Ih.point_count());
  for (std::size_t q = 0; q < If.point_count(); ++q)
    CHECK(Ih.surpluses()[q][0] == Approx(al * If.surpluses()[q][0] + be * Ig.surpluses()[q][0]).margin(1e-13));
}

TEST_CASE("anisotropic targets refine only active directions", "[sgrid]") {
  auto R = adapt(3, [](const auto& y) { return std::exp(y[0]); }, 1e-10);
  CHECK(R.converged);
  for (const auto& e : R.interp.indices())
    if (e.old) {
      CHECK(e.i[1] == 1);
      CHECK(e.i[2] == 1);
    }
  std::set<int> levels;
  for (const auto& e : R.interp.indices()) levels.insert(e.i[0]);
  CHECK(levels.size() >= 4);
}

TEST_CASE("Genz quadrature error tracks the tolerance", "[sgrid]") {
  // Profits measure expectation contributions, so the mean is what the
  // tolerance controls; pointwise error is only required to converge.
  std::vector<testing_support::GenzOscillatory> fs{{0.3, {1.2, 0.8, 0.5}}, {0.1, {2.0, 1.0, 0.3}}};
  std::mt19937_64 rng(5);
  std::vector<std::vector<double>> mc;
  for (int k = 0; k < 100; ++k) mc.push_back(random_point(rng, 3));
  for (const auto& g : fs) {
    std::vector<double> sup;
    for (double tol : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
      auto R = adapt(3, g, tol);
      double err = 0.0;
      for (const auto& y : mc) err = std::max(err, std::abs(R.interp.evaluate(y)[0] - g(y)));
      sup.push_back(err);
      INFO("tol " << tol << " max error " << err);
      CHECK(std::abs(R.interp.expectation()[0] - g.mean()) <= 10.0 * tol);
    }
    CHECK(sup.back() <= 1e-2 * sup.front());
  }
}

TEST_CASE("quadrature error constant", "[sgrid][property]") {
  using Peak = testing_support::GenzProductPeak;
  const std::vector<double> tols{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  auto ratios = [&](const auto& g, int N) {
    std::vector<double> r;
    for (double tol : tols) r.push_back(std::abs(adapt(N, g, tol).interp.expectation()[0] - g.mean()) / tol);
    return r;
  };
  SECTION("bounded by one on all test functions") {
    for (double r : ratios(testing_support::GenzOscillatory{0.3, {1.2, 0.8, 0.5}}, 3)) CHECK(r <= 1.0);
    for (double r : ratios(Peak{{2.0, 3.0}, {0.4, 0.6}}, 2)) CHECK(r <= 1.0);
    for (double r : ratios(Peak{{1.0, 1.5}, {0.3, 0.5}}, 2)) CHECK(r <= 1.0);
  }
  SECTION("stable across decades for a non-resolved peak") {
    auto r = ratios(Peak{{2.0, 3.0, 1.0}, {0.4, 0.6, 0.5}}, 3);
    double mean = 0.0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    for (double v : r) {
      INFO("ratio " << v << " mean " << mean);
      CHECK(v <= 1.5 * mean);
      CHECK(v >= 0.5 * mean);
    }
  }
}

// ---------------------------------------------------------------- schedule

TEST_CASE("tolerance schedule examples", "[uq]") {
  RateEstimates r;
  r.C_H = 0.1;
  r.C_Y = 0.1;
  auto S = tolerance_schedule(1e-6, 0.5, 2, r, 0.12);
  CHECK(S.eta_h[2] == Approx(5e-6).epsilon(1e-14));
  CHECK(S.eta_h[1] == Approx(1e-5).epsilon(1e-14));
  CHECK(S.eta_h[0] == Approx(2e-5).epsilon(1e-14));

  for (double s : {0.5, 1.0, 3.0})
    for (double mu : {1.0, 2.0, 4.0}) {
      r.s = s;
      r.mu = mu;
      auto S0 = tolerance_schedule(1e-4, 0.5, 0, r, 0.3);
      CHECK(S0.eta_s[0] == Approx(1e-4 / (2 * r.C_Y)).epsilon(1e-14));
    }
  CHECK_THROWS(tolerance_schedule(-1.0, 0.5, 1, r, 0.1));
  CHECK_THROWS(tolerance_schedule(1e-3, 1.5, 1, r, 0.1));
  CHECK_THROWS(tolerance_schedule(1e-3, 0.5, -1, r, 0.1));
  CHECK_THROWS(tolerance_schedule(1e-3, 0.5, 1, r, 0.0));
  CHECK_THROWS(tolerance_schedule(0.5, 0.1, 3, r, 0.1));  // coarsest tolerance above 1
}

TEST_CASE("tolerance schedule identities", "[uq][property]") {
  std::mt19937_64 rng(17);
  auto logu = [&](double a, double b) { return std::exp(std::uniform_real_distribution<double>(std::log(a), std::log(b))(rng)); };
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
    CHECK(std::abs(sum - eps / 2) <= 1e-14 * eps / 2);
    CHECK(std::abs(r.C_H * S.eta_h[static_cast<std::size_t>(K)] - eps / 2) <= 1e-14 * eps / 2);
    for (int k = 1; k <= K; ++k) CHECK(S.eta_h[static_cast<std::size_t>(k)] < S.eta_h[static_cast<std::size_t>(k - 1)]);
    CHECK(S.eta_h[0] <= 1.0);
  }
}

// ---------------------------------------------------------------- campaigns

TEST_CASE("single-level tolerances", "[uq]") {
  SampleStore store(power_law_sampler([](const auto& y) { return y[0]; }));
  RateEstimates r;
  r.C_h = r.C_s = 0.1;
  UqOptions o;
  auto R = single_level(1, store, 1e-6, r, o);
  CHECK(R.levels[0].eta_h == Approx(5e-6).epsilon(1e-14));
  CHECK(R.levels[0].eta_s == Approx(5e-6).epsilon(1e-14));
}

TEST_CASE("deterministic scenario needs one collocation point", "[uq]") {
  auto sc = load("pipe_compressor");
  REQUIRE(effective_dimension(sc) == 0);
  SampleStore store(anet_sampler(sc));
  RateEstimates r;
  r.C_h = r.C_s = r.C_H = r.C_Y = 0.3;
  auto R = single_level(effective_dimension(sc), store, 1e-4, r);
  CHECK(R.levels[0].Q == 1);
  CHECK(R.expectation == anet(sc, std::vector<double>{0.0}, R.levels[0].eta_h).psi);

  auto M = multilevel(0, store, 1e-4, 0.5, 2, r);
  for (const auto& L : M.levels) CHECK(L.Q == 1);
  CHECK(M.expectation == Approx(anet(sc, std::vector<double>{0.0}, M.levels.back().eta_h).psi).epsilon(1e-14));
}

TEST_CASE("multilevel with one level is the single-level method", "[uq]") {
  SampleStore store(power_law_sampler([](const auto& y) { return std::exp(y[0]) * (1 + 0.3 * y[1]); }));
  RateEstimates r;
  r.C_H = r.C_h = 0.2;
  r.C_Y = r.C_s = 0.4;
  auto M = multilevel(2, store, 1e-3, 0.5, 0, r);
  CHECK(M.levels.size() == 1);
  CHECK(M.levels[0].eta_h == Approx(1e-3 / (2 * r.C_H)).epsilon(1e-14));
  CHECK(M.levels[0].eta_s == Approx(1e-3 / (2 * r.C_Y)).epsilon(1e-14));
  auto S = single_level(2, store, 1e-3, r);
  CHECK(S.expectation == M.expectation);
  CHECK(S.levels[0].Q == M.levels[0].Q);
}

TEST_CASE("memoized samples do not change results", "[uq][property]") {
  std::atomic<int> calls{0};
  auto base = power_law_sampler([](const auto& y) { return std::cos(y[0] + 2 * y[1]); });
  Sampler counting = [&](const std::vector<double>& y, double eta) {
    ++calls;
    return base(y, eta);
  };
  RateEstimates r;
  r.C_H = r.C_Y = r.C_h = r.C_s = 0.3;
  SampleStore cold(counting);
  auto A = multilevel(2, cold, 1e-3, 0.5, 2, r);
  std::size_t distinct = 0;
  for (const auto& L : A.levels) distinct += L.Q * (L.k == 0 ? 1 : 2);
  distinct += A.pilot_points;
  CHECK(static_cast<std::size_t>(calls.load()) <= distinct);
  CHECK(cold.calls() == static_cast<std::size_t>(calls.load()));
  CHECK(A.reused > 0);

  SampleStore fresh(base);
  auto B = multilevel(2, fresh, 1e-3, 0.5, 2, r);
  auto C = multilevel(2, fresh, 1e-3, 0.5, 2, r);  // every sample is now a hit
  CHECK(A.expectation == B.expectation);
  CHECK(B.expectation == C.expectation);
  CHECK(C.samples == 0);
}

TEST_CASE("cost ledger", "[uq]") {
  auto c = cost_ledger(std::vector<std::size_t>{5}, {10.0}, {0.0}, 1.0, 2.0);
  CHECK(c.total == 50.0);
  CHECK(c.regime == "s*mu>1");
  CHECK(c.prediction == "eps^-1");
  CHECK(cost_ledger(std::vector<std::size_t>{1}, {1.0}, {0.0}, 1.0, 1.0).regime == "s*mu=1");
  CHECK(cost_ledger(std::vector<std::size_t>{1}, {1.0}, {0.0}, 0.5, 1.0).regime == "s*mu<1");
  auto two = cost_ledger(std::vector<std::size_t>{3, 7}, {2.0, 5.0}, {0.0, 2.0}, 1.0, 2.0);
  CHECK(two.total == 3 * 2.0 + 7 * (5.0 + 2.0));
}

TEST_CASE("level differences shrink on gaslib11", "[uq][property]") {
  auto sc = load("gaslib11");
  SampleStore store(anet_sampler(sc, {}, false));
  RateEstimates r;
  r.C_H = r.C_h = 0.3;
  r.C_Y = r.C_s = 6.0;
  UqOptions o;
  o.traces = false;
  auto M = multilevel(3, store, 3e-4, 0.5, 2, r, o);
  double prev = 1e300;
  for (const auto& L : M.levels) {
    if (L.k == 0) continue;
    double mean = 0.0;
    for (const auto& y : L.interp.nodes()) mean += std::abs(store.get(y, L.eta_h).psi - store.get(y, L.eta_h_prev).psi);
    mean /= static_cast<double>(L.Q);
    INFO("level " << L.k << " mean difference " << mean);
    CHECK(mean <= prev);
    prev = mean;
  }
}

// ---------------------------------------------------------------- rates

TEST_CASE("rate estimation on exact power laws", "[uq]") {
  // Profits 1, 1/9, 1/25 at 1, 3, 5 points: decay exponent 2.
  const double a = 1.0 / 6.0, b = 3.0 / 50.0;
  auto f = [&](const std::vector<double>& y) { return (1.0 + a + b) + a * cheb2(y[0]) + b * cheb2(y[1]); };
  SampleStore store(power_law_sampler(f));
  auto R = estimate_rates(2, store, {1e-2, 1e-3, 1e-4, 1e-5});
  CHECK(!R.degenerate);
  CHECK(R.raw.s == Approx(1.0).margin(1e-6));
  CHECK(R.raw.C_W == Approx(1.0).margin(1e-6));
  CHECK(R.raw.mu == Approx(2.0).margin(1e-9));
  CHECK(R.rounded.s == 1.0);
  CHECK(R.rounded.mu == 2.0);
  CHECK_THROWS(estimate_rates(2, store, {1e-3, 1e-4}));
  CHECK_THROWS(estimate_rates(2, store, {1e-3, 5e-4, 2e-4}));

  SampleStore flat([](const std::vector<double>&, double) { return SampleOutcome{1.0, {}, 5.0}; });
  auto D = estimate_rates(1, flat, {1e-2, 1e-3, 1e-4});
  CHECK(D.degenerate);
  CHECK(D.raw.C_H == 0.25);
  CHECK(D.raw.C_Y == 0.25);
  CHECK(D.raw.s == 1.0);
  CHECK(D.raw.mu == 2.0);
}

TEST_CASE("rounding to one significant digit", "[uq]") {
  CHECK(round_sig1(0.317) == 0.3);
  CHECK(round_sig1(6.45) == 6.0);
  CHECK(round_sig1(24.4) == 20.0);
  CHECK(round_sig1(0.9935) == 1.0);
  CHECK(round_sig1(2.024) == 2.0);
  CHECK(round_sig1(0.00347) == 0.003);
}

// ---------------------------------------------------------------- kde

TEST_CASE("kernel density estimate", "[post]") {
  CHECK(kde_bandwidth(1.0, 100000) == Approx(0.106).epsilon(1e-12));
  CHECK_THROWS(kde({1.0}));

  std::mt19937_64 rng(23);
  std::normal_distribution<double> G(50.0, 2.0);
  std::vector<double> xs(100000);
  for (auto& v : xs) v = G(rng);
  double mean = 0, ss = 0;
  for (double v : xs) mean += v;
  mean /= static_cast<double>(xs.size());
  for (double v : xs) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  for (auto& v : xs) v = (v - mean) / sd;
  CHECK(kde(xs).H == Approx(0.106).epsilon(1e-12));

  auto sym = kde({-1.0, 1.0});
  for (double x : {0.1, 0.7, 1.3, 4.0}) CHECK(sym.density(-x) == sym.density(x));

  std::vector<double> small(xs.begin(), xs.begin() + 2000);
  auto m = kde(small);
  const double lo = *std::min_element(small.begin(), small.end()) - 6 * m.H;
  const double hi = *std::max_element(small.begin(), small.end()) + 6 * m.H;
  CHECK(std::abs(testing_support::simpson([&](double x) { return m.density(x); }, lo, hi, 10000) - 1.0) <= 1e-6);

  auto flat = kde({42.0, 42.0, 42.0});
  CHECK(flat.fallback_bandwidth);
  CHECK(flat.H == Approx(42e-6));
}

TEST_CASE("violation probabilities", "[post][property]") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> G(0.0, 1.0);
  std::vector<double> xs(5000);
  for (auto& v : xs) v = G(rng);
  auto m = kde(xs);

  CHECK(violation_probability(m, -100.0, Side::below).p_kde < 1e-8);
  double prev = 0.0;
  std::uniform_real_distribution<double> U(-4.0, 4.0);
  std::vector<double> bounds;
  for (int k = 0; k < 200; ++k) bounds.push_back(U(rng));
  std::sort(bounds.begin(), bounds.end());
  for (double b : bounds) {
    auto below = violation_probability(m, b, Side::below);
    auto above = violation_probability(m, b, Side::above);
    CHECK(below.p_kde + above.p_kde == 1.0);
    CHECK(below.p_kde >= prev);
    CHECK(below.p_kde >= 0.0);
    CHECK(below.p_kde <= 1.0);
    CHECK(std::abs(below.p_kde - below.p_empirical) <= 0.05);
    prev = below.p_kde;
  }

  std::vector<double> mirrored;
  for (double v : std::vector<double>(xs.begin(), xs.begin() + 500)) {
    mirrored.push_back(43.0 + v);
    mirrored.push_back(43.0 - v);
  }
  CHECK(violation_probability(kde(mirrored), 43.0, Side::below).p_kde == Approx(0.5).margin(1e-12));
}

// ---------------------------------------------------------------- surrogate

namespace {

TraceSurrogate affine_surrogate(double slope) {
  TraceSurrogate s;
  s.exit_ids = {"E"};
  for (int k = 0; k < 4; ++k) s.grid.push_back(100.0 * k);
  auto f = make_batch_evaluator([&](const std::vector<double>& y) { return std::vector<double>(4, 50.0 + slope * y[0]); });
  s.levels.push_back(build_on_index_set(1, 4, {{1}, {2}}, f));
  return s;
}

}  // namespace

TEST_CASE("surrogate sweep", "[post]") {
  auto flat = surrogate_sweep(affine_surrogate(0.0));
  CHECK(flat.size() == 51);
  for (const auto& e : flat) {
    CHECK(e.p_min[0] == Approx(50.0).epsilon(1e-14));
    CHECK(e.p_max[0] == Approx(50.0).epsilon(1e-14));
  }
  auto lin = surrogate_sweep(affine_surrogate(5.0));
  for (std::size_t k = 0; k < lin.size(); ++k) {
    CHECK(lin[k].p_min[0] == Approx(45.0 + 10.0 * static_cast<double>(k) / 50.0).epsilon(1e-13));
    CHECK(lin[k].p_min[0] <= lin[k].p_max[0]);
  }
  SweepOptions o;
  o.points_per_dim = 1;
  CHECK_THROWS_AS(surrogate_sweep(affine_surrogate(1.0), o), std::invalid_argument);
  o.points_per_dim = 51;
  o.memory_cap_bytes = 64;
  CHECK_THROWS_AS(surrogate_sweep(affine_surrogate(1.0), o), std::length_error);
}

TEST_CASE("symmetric exits have equal distributions", "[post][property]") {
  auto sc = load("symmetric_two_exit");
  SampleStore store(anet_sampler(sc));
  RateEstimates r;
  r.C_H = r.C_h = 0.3;
  r.C_Y = r.C_s = 0.3;
  auto R = single_level(sc.dimension, store, 1e-4, r);
  auto sur = make_trace_surrogate(R, exit_ids(sc), trace_grid(sc));
  SweepOptions o;
  o.points_per_dim = 21;
  auto samples = surrogate_sweep(sur, o);
  REQUIRE(sur.exit_ids.size() == 2);

  // Swapping the coordinates maps one exit onto the other.
  std::map<std::vector<double>, const ExtremaSample*> by_y;
  for (const auto& s : samples) by_y[s.y] = &s;
  for (const auto& s : samples) {
    const auto* t = by_y.at({s.y[1], s.y[0]});
    CHECK(std::abs(s.p_min[0] - t->p_min[1]) <= 1e-10);
    CHECK(std::abs(s.p_max[0] - t->p_max[1]) <= 1e-10);
  }
  std::vector<double> a, b;
  for (const auto& s : samples) {
    a.push_back(s.p_min[0]);
    b.push_back(s.p_min[1]);
  }
  auto ka = kde(a), kb = kde(b);
  const double bound = 0.5 * (*std::min_element(a.begin(), a.end()) + *std::max_element(a.begin(), a.end()));
  CHECK(std::abs(violation_probability(ka, bound, Side::below).p_kde - violation_probability(kb, bound, Side::below).p_kde) <=
        1e-10);
}
