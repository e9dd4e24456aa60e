// Command-line front end: deterministic runs, UQ campaigns, post-processing.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pipeflow/adapt.hpp"
#include "pipeflow/netmodel.hpp"
#include "pipeflow/post.hpp"
#include "pipeflow/solver.hpp"
#include "pipeflow/uq.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pipeflow;

namespace {

/// Bad input or configuration (exit code 1).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest text that reads back to the same double.
std::string num(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

class Output {
 public:
  void open(const std::string& dir) {
    if (dir.empty()) return;
    dir_ = dir;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw ConfigError("cannot create output directory " + dir);
  }
  bool enabled() const { return !dir_.empty(); }

  void write(const std::string& name, const std::string& content) {
    if (!enabled()) return;
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    out << content;
    files_.push_back(name);
  }

  void manifest(const std::string& command, const std::vector<std::string>& args, int code, const std::string& msg) {
    if (!enabled()) return;
    json m{{"command", command}, {"arguments", args}, {"exit_code", code}, {"status", code == 0 ? "ok" : "error"}};
    if (!msg.empty()) m["message"] = msg;
    auto files = files_;
    std::sort(files.begin(), files.end());
    m["files"] = files;
    std::ofstream(dir_ / "manifest.json") << m.dump(2) << "\n";
  }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

std::vector<double> check_y(const Scenario& sc, std::vector<double> y) {
  if (y.empty()) y.assign(static_cast<std::size_t>(sc.dimension), 0.0);
  if (static_cast<int>(y.size()) != sc.dimension)
    throw ConfigError("--y needs " + std::to_string(sc.dimension) + " coordinates");
  for (double v : y)
    if (!(v >= -1.0 && v <= 1.0)) throw ConfigError("--y coordinate " + num(v) + " outside [-1,1]");
  return y;
}

RateEstimates parse_rates(const std::string& text) {
  if (fs::exists(text)) {
    std::ifstream in(text);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("cannot parse rates file: " + std::string(e.what()));
    }
    return rates_from_json(j.contains("rounded") ? j["rounded"] : j);
  }
  json j = json::object();
  std::stringstream ss(text);
  for (std::string kv; std::getline(ss, kv, ',');) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("rates must be a file or key=value list, got '" + kv + "'");
    try {
      j[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad rate value in '" + kv + "'");
    }
  }
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!std::set<std::string>{"C_H", "C_Y", "C_W", "s", "mu", "C_h", "C_s"}.count(it.key()))
      throw ConfigError("unknown rate constant " + it.key());
  return rates_from_json(j);
}

std::string stats_header() { return "eta_h,est,dt_max,dt_min,dx_max,dx_min,split,work,psi,iterations\n"; }

std::string stats_row(double eta, const SampleResult& r) {
  std::ostringstream os;
  os << num(eta) << "," << num(r.achieved) << "," << num(r.dt_max) << "," << num(r.dt_min) << "," << num(r.dx_max) << ","
     << num(r.dx_min) << "," << r.split.str() << "," << num(r.work) << "," << num(r.psi) << "," << r.iterations << "\n";
  return os.str();
}

std::string traces_csv(const Traces& tr) {
  std::ostringstream os;
  os << "t";
  for (const auto& id : tr.exit_ids) os << ",p_" << id << "_bar";
  for (const auto& id : tr.compressor_ids) os << ",power_" << id << "_W";
  os << "\n";
  for (std::size_t k = 0; k < tr.grid.size(); ++k) {
    os << num(tr.grid[k]);
    for (const auto& v : tr.exit_pressure) os << "," << num(v[k]);
    for (const auto& v : tr.power) os << "," << num(v[k]);
    os << "\n";
  }
  return os.str();
}

int cmd_validate(const std::string& path, Output& out) {
  try {
    auto sc = load_scenario(path);
    std::cout << "valid: " << sc.name << " (" << sc.network.nodes.size() << " nodes, " << sc.network.edges.size()
              << " edges, dimension " << sc.dimension << ")\n";
    out.write("diagnostics.json", "[]\n");
    return 0;
  } catch (const ScenarioError& e) {
    json d = json::array();
    for (const auto& x : e.diagnostics()) {
      std::cout << x.code << "\t" << x.path << "\t" << x.message << "\n";
      d.push_back({{"code", x.code}, {"path", x.path}, {"message", x.message}});
    }
    out.write("diagnostics.json", d.dump(2) + "\n");
    return 1;
  }
}

int cmd_simulate(const std::string& path, std::vector<double> y, std::vector<double> etas, Output& out) {
  auto sc = load_scenario(path);
  y = check_y(sc, y);
  if (etas.empty()) throw ConfigError("--eta-h is required");
  for (double e : etas)
    if (!(e > 0)) throw ConfigError("--eta-h must be positive");
  std::string stats = stats_header();
  std::cout << "eta_h      est        dt max/min        dx max/min        split     work\n";
  for (std::size_t i = 0; i < etas.size(); ++i) {
    std::ostringstream log;
    AnetOptions opt;
    opt.log = &log;
    auto r = anet(sc, y, etas[i], opt);
    const std::string tag = etas.size() == 1 ? "" : "_" + std::to_string(i);
    out.write("traces" + tag + ".csv", traces_csv(r.traces));
    out.write("adapt_log" + tag + ".jsonl", log.str());
    stats += stats_row(etas[i], r);
    char line[200];
    std::snprintf(line, sizeof line, "%-10.1e %-10.2e %7.1f/%-9.1f %7.0f/%-9.0f %-9s %.3e\n", etas[i], r.achieved, r.dt_max,
                  r.dt_min, r.dx_max, r.dx_min, r.split.str().c_str(), r.work);
    std::cout << line;
    std::cout << "  psi = " << num(r.psi) << "\n";
  }
  out.write("stats.csv", stats);
  return 0;
}

RateFit run_rate_fit(const Scenario& sc, std::vector<double> pilots, unsigned workers) {
  if (pilots.size() < 3) throw ConfigError("--pilots needs at least three tolerances");
  SampleStore store(anet_sampler(sc, {}, false));
  try {
    return estimate_rates(effective_dimension(sc) == 0 ? 0 : sc.dimension, store, pilots, workers);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

int cmd_estimate(const std::string& path, const std::vector<double>& pilots, unsigned workers, Output& out) {
  auto sc = load_scenario(path);
  auto fit = run_rate_fit(sc, pilots, workers);
  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  const auto& r = fit.rounded;
  std::cout << "C_H = " << num(r.C_H) << "  C_Y = " << num(r.C_Y) << "  s = " << num(r.s) << "  mu = " << num(r.mu)
            << "  C_W = " << num(r.C_W) << "\n";
  out.write("rates.json", to_json(fit).dump(2) + "\n");
  return 0;
}

struct UqArgs {
  std::string mode = "single";
  std::vector<double> eps;
  double q = 0.5;
  int K = 1;
  std::string rates;
  std::vector<double> pilots;
  double ref_eps = 0.0;
  bool traces = true;
};

int cmd_uq(const std::string& path, const UqArgs& a, unsigned workers, Output& out) {
  auto sc = load_scenario(path);
  if (a.mode != "single" && a.mode != "multi") throw ConfigError("--mode must be single or multi");
  if (a.eps.empty()) throw ConfigError("--eps is required");
  for (double e : a.eps)
    if (!(e > 0)) throw ConfigError("--eps must be positive");
  if (a.mode == "multi" && (a.K < 0 || !(a.q > 0 && a.q < 1))) throw ConfigError("need --levels >= 0 and 0 < --reduction < 1");

  RateEstimates rates;
  if (!a.rates.empty()) {
    try {
      rates = parse_rates(a.rates);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (!a.pilots.empty()) {
    auto fit = run_rate_fit(sc, a.pilots, workers);
    for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
    rates = fit.rounded;
    out.write("rates.json", to_json(fit).dump(2) + "\n");
  } else {
    throw ConfigError("rates required: pass --rates or --pilots");
  }

  const int dim = effective_dimension(sc) == 0 ? 0 : sc.dimension;
  SampleStore store(anet_sampler(sc, {}, a.traces));
  UqOptions opt;
  opt.workers = workers;
  opt.traces = a.traces;
  auto campaign = [&](double eps) {
    try {
      return a.mode == "single" ? single_level(dim, store, eps, rates, opt) : multilevel(dim, store, eps, a.q, a.K, rates, opt);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  };

  std::optional<double> ref;
  if (a.ref_eps > 0) {
    auto R = single_level(dim, store, a.ref_eps, rates, opt);
    ref = R.expectation;
    out.write("reference.json", to_json(R).dump(2) + "\n");
  }
  std::string conv = "eps,mode,K,expectation,error,cost,points,samples,partial\n";
  bool partial = false;
  for (std::size_t i = 0; i < a.eps.size(); ++i) {
    auto R = campaign(a.eps[i]);
    const auto cost = cost_ledger(R);
    std::size_t pts = 0;
    bool part = false;
    for (const auto& L : R.levels) {
      pts += L.Q;
      part = part || L.capped;
    }
    partial = partial || part;
    const std::string tag = a.eps.size() == 1 ? "" : "_" + std::to_string(i);
    out.write("report" + tag + ".json", to_json(R).dump(2) + "\n");
    json psi{{"levels", json::array()}};
    for (const auto& L : R.levels) psi["levels"].push_back(L.interp.slice(0, 1).to_json());
    out.write("psi_interp" + tag + ".json", psi.dump() + "\n");
    if (a.traces) out.write("traces_interp" + tag + ".json", make_trace_surrogate(R, exit_ids(sc), trace_grid(sc)).to_json().dump() + "\n");
    conv += num(a.eps[i]) + "," + R.mode + "," + std::to_string(R.mode == "multi" ? R.K : 0) + "," + num(R.expectation) + "," +
            (ref ? num(std::abs(R.expectation - *ref)) : std::string()) + "," + num(cost.total) + "," + std::to_string(pts) +
            "," + std::to_string(R.samples) + "," + (part ? "1" : "0") + "\n";
    std::cout << "eps " << num(a.eps[i]) << "  E[psi] = " << num(R.expectation) << "  points " << pts << "  cost "
              << num(cost.total) << (ref ? "  error " + num(std::abs(R.expectation - *ref)) : std::string())
              << (part ? "  (partial: caps reached)" : "") << "\n";
  }
  out.write("convergence.csv", conv);
  if (partial) std::cerr << "warning: some levels stopped at the point or level cap\n";
  return 0;
}

int cmd_post(const std::string& interp_path, std::vector<double> bounds, int grid, std::size_t cap_mb, unsigned workers,
             Output& out) {
  std::ifstream in(interp_path);
  if (!in) throw ConfigError("cannot open interpolant " + interp_path);
  TraceSurrogate s;
  try {
    s = TraceSurrogate::from_json(json::parse(in));
  } catch (const std::exception& e) {
    throw ConfigError("invalid trace interpolant: " + std::string(e.what()));
  }
  if (bounds.size() != 2 || !(bounds[0] <= bounds[1])) throw ConfigError("--bounds needs lower,upper");
  SweepOptions so;
  so.points_per_dim = grid;
  so.workers = workers;
  so.memory_cap_bytes = cap_mb << 20;
  std::vector<ExtremaSample> samples;
  try {
    samples = surrogate_sweep(s, so);
  } catch (const std::length_error& e) {
    throw ConfigError(e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const std::size_t E = s.exit_ids.size();
  std::ostringstream ex;
  for (int n = 0; n < s.dim(); ++n) ex << "y" << n + 1 << ",";
  for (std::size_t x = 0; x < E; ++x) ex << "pmin_" << s.exit_ids[x] << ",pmax_" << s.exit_ids[x] << (x + 1 < E ? "," : "\n");
  for (const auto& e : samples) {
    for (double v : e.y) ex << num(v) << ",";
    for (std::size_t x = 0; x < E; ++x) ex << num(e.p_min[x]) << "," << num(e.p_max[x]) << (x + 1 < E ? "," : "\n");
  }
  out.write("extrema.csv", ex.str());

  json report = json::array();
  for (std::size_t x = 0; x < E; ++x) {
    for (int which = 0; which < 2; ++which) {
      std::vector<double> v;
      for (const auto& e : samples) v.push_back(which == 0 ? e.p_min[x] : e.p_max[x]);
      auto m = kde(v);
      if (m.fallback_bandwidth) std::cerr << "warning: zero spread for " << s.exit_ids[x] << "; fallback bandwidth\n";
      std::ostringstream curve;
      curve << "x,density\n";
      for (auto [px, d] : kde_curve(m)) curve << num(px) << "," << num(d) << "\n";
      const std::string q = which == 0 ? "pmin" : "pmax";
      out.write("kde_" + s.exit_ids[x] + "_" + q + ".csv", curve.str());
      const Side side = which == 0 ? Side::below : Side::above;
      const double b = which == 0 ? bounds[0] : bounds[1];
      auto p = violation_probability(m, b, side);
      report.push_back({{"exit", s.exit_ids[x]}, {"quantity", q}, {"bound", b}, {"side", which == 0 ? "below" : "above"},
                        {"p_kde", p.p_kde}, {"p_empirical", p.p_empirical}, {"N_s", v.size()}, {"H", m.H}});
      std::printf("%-6s P(%s %s %g bar) = %.6f  (empirical %.6f)\n", s.exit_ids[x].c_str(), q.c_str(),
                  which == 0 ? "<" : ">", b, p.p_kde, p.p_empirical);
    }
  }
  out.write("probabilities.json", report.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty quantification for transient gas networks"};
  app.require_subcommand(1);
  std::string scenario, out_dir, interp;
  unsigned workers = 0;
  std::vector<double> y, etas, pilots, bounds{43.0, 63.0};
  int grid = 51;
  std::size_t cap_mb = 1024;
  UqArgs ua;
  bool no_traces = false;

  auto common = [&](CLI::App* c, bool needs_scenario) {
    if (needs_scenario) c->add_option("--scenario", scenario, "scenario document")->required();
    c->add_option("--out", out_dir, "output directory");
    c->add_option("--workers", workers, "parallel workers (0: all cores; PIPEFLOW_UQ_WORKERS overrides)");
  };
  auto* c_val = app.add_subcommand("validate", "check a scenario document");
  common(c_val, true);
  auto* c_sim = app.add_subcommand("simulate", "adaptive deterministic run at one parameter point");
  common(c_sim, true);
  c_sim->add_option("--y", y, "parameter point (default: center)")->delimiter(',');
  c_sim->add_option("--eta-h", etas, "physical tolerance(s)")->delimiter(',')->required();
  auto* c_uq = app.add_subcommand("uq", "single- or multilevel collocation campaign");
  common(c_uq, true);
  c_uq->add_option("--mode", ua.mode, "single or multi");
  c_uq->add_option("--eps", ua.eps, "tolerance(s)")->delimiter(',')->required();
  c_uq->add_option("--levels", ua.K, "K, the finest level index");
  c_uq->add_option("--reduction", ua.q, "tolerance reduction factor q");
  c_uq->add_option("--rates", ua.rates, "rates file or C_H=..,C_Y=..,s=..,mu=..");
  c_uq->add_option("--pilots", ua.pilots, "estimate rates from these pilot tolerances")->delimiter(',');
  c_uq->add_option("--ref-eps", ua.ref_eps, "also run a single-level reference at this tolerance");
  c_uq->add_flag("--no-traces", no_traces, "skip the exit-pressure surrogate");
  auto* c_post = app.add_subcommand("post", "extrema, densities and violation probabilities from a trace surrogate");
  common(c_post, false);
  c_post->add_option("--interp", interp, "trace interpolant document")->required();
  c_post->add_option("--bounds", bounds, "lower,upper pressure bounds in bar")->delimiter(',');
  c_post->add_option("--grid", grid, "sweep points per dimension");
  c_post->add_option("--memory-cap-mb", cap_mb, "sweep memory cap");
  auto* c_rates = app.add_subcommand("estimate-rates", "fit rate constants from pilot solves");
  common(c_rates, true);
  c_rates->add_option("--pilots", pilots, "pilot tolerances")->delimiter(',')->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  const std::vector<std::string> args(argv + 1, argv + argc);
  const std::string command = app.get_subcommands().front()->get_name();
  Output out;
  int code = 0;
  std::string msg;
  try {
    out.open(out_dir);
    const unsigned w = resolve_workers(workers);
    ua.traces = !no_traces;
    if (command == "validate") code = cmd_validate(scenario, out);
    else if (command == "simulate") code = cmd_simulate(scenario, y, etas, out);
    else if (command == "uq") code = cmd_uq(scenario, ua, w, out);
    else if (command == "post") code = cmd_post(interp, bounds, grid, cap_mb, w, out);
    else if (command == "estimate-rates") code = cmd_estimate(scenario, pilots, w, out);
  } catch (const ScenarioError& e) {
    code = 1;
    msg = e.what();
    for (const auto& d : e.diagnostics()) std::cerr << "error: " << d.code << " " << d.path << ": " << d.message << "\n";
  } catch (const ConfigError& e) {
    code = 1;
    msg = e.what();
    std::cerr << "error: " << msg << "\n";
  } catch (const std::invalid_argument& e) {
    code = 1;
    msg = e.what();
    std::cerr << "error: " << msg << "\n";
  } catch (const std::exception& e) {
    // Solver divergence, unreachable tolerances and failed sample evaluations.
    code = 2;
    msg = e.what();
    std::cerr << "solver failure: " << msg << "\n";
  }
  try {
    out.manifest(command, args, code, msg);
  } catch (...) {
  }
  return code;
}
