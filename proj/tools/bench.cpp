// Experiment harness for the power-management models: sweeps one system
// parameter, solves / exactly evaluates / simulates the selected
// policies at every sweep point, and writes CSV tables plus a gnuplot
// script. `--validate` runs the model self-check suite instead.

#include <CLI11.hpp>
#include <Eigen/Dense>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcpm/aggregation.hpp"
#include "dcpm/model_basic.hpp"
#include "dcpm/policies.hpp"
#include "dcpm/simulator.hpp"
#include "dcpm/solver.hpp"

using namespace dcpm;
using nlohmann::json;

namespace {

// ------------------------------------------------------------ config --

struct ExperimentSpec {
  SystemParams base;
  std::string sweep_param = "c_perf";  // one of c_perf | lambda | gamma
  std::vector<double> sweep_values = {1, 2, 5, 10, 20, 50, 100};
  std::vector<std::string> methods = {"basic", "multilevel", "uniform",
                                      "bulk", "staggered"};
  std::vector<int> levels = {10};          // L list for "multilevel"
  std::vector<int> uniform_levels = {10};  // L_u list for "uniform"
  std::vector<std::uint64_t> seeds = {1};
  long long horizon_events = 1'000'000;
  std::string output_dir = "bench_out";

  void validate_spec() const {
    base.validate();
    if (sweep_param != "c_perf" && sweep_param != "lambda" &&
        sweep_param != "gamma")
      throw std::invalid_argument("sweep param must be c_perf, lambda or "
                                  "gamma, got " + sweep_param);
    if (sweep_values.empty())
      throw std::invalid_argument("sweep value list is empty");
    if (seeds.empty()) throw std::invalid_argument("seed list is empty");
    for (const std::string& m : methods)
      if (m != "basic" && m != "multilevel" && m != "uniform" && m != "bulk" &&
          m != "staggered")
        throw std::invalid_argument("unknown method " + m);
    for (int L : levels)
      if (L < 2 || base.C % L != 0)
        throw std::invalid_argument("level count " + std::to_string(L) +
                                    " must be >= 2 and divide C");
    for (int L : uniform_levels)
      if (L < 1 || base.C % L != 0)
        throw std::invalid_argument("uniform level count " +
                                    std::to_string(L) + " must divide C");
  }
};

void from_json_params(const json& j, SystemParams& p) {
  p.C = j.value("C", p.C);
  p.Q = j.value("Q", p.Q);
  p.lambda = j.value("lambda", p.lambda);
  p.mu = j.value("mu", p.mu);
  p.gamma = j.value("gamma", p.gamma);
  p.c_perf = j.value("c_perf", p.c_perf);
  p.c_power = j.value("c_power", p.c_power);
  p.c_power_prime = j.value("c_power_prime", p.c_power_prime);
  p.epsilon = j.value("epsilon", p.epsilon);
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json j = json::parse(in);
  ExperimentSpec spec;
  if (j.contains("base")) from_json_params(j.at("base"), spec.base);
  if (j.contains("sweep")) {
    spec.sweep_param = j.at("sweep").value("param", spec.sweep_param);
    if (j.at("sweep").contains("values"))
      spec.sweep_values = j.at("sweep").at("values").get<std::vector<double>>();
  }
  if (j.contains("methods"))
    spec.methods = j.at("methods").get<std::vector<std::string>>();
  if (j.contains("levels"))
    spec.levels = j.at("levels").get<std::vector<int>>();
  if (j.contains("uniform_levels"))
    spec.uniform_levels = j.at("uniform_levels").get<std::vector<int>>();
  if (j.contains("seeds"))
    spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  spec.horizon_events = j.value("horizon_events", spec.horizon_events);
  spec.output_dir = j.value("output_dir", spec.output_dir);
  return spec;
}

// shortest round-trip decimal, so re-runs give byte-identical CSV bodies
std::string fmt(double x) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::vector<double> parse_doubles(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stod(tok));
  return out;
}

// ------------------------------------------------------- experiments --

struct MethodResult {
  std::string name;  // CSV policy_name
  int L = 0;         // 0 for non-aggregated methods
  long long states = 0;
  long long state_actions = 0;
  long iterations = 0;  // 0 when no value iteration was involved
  PolicyEvalResult exact;
  PolicyFn sim_policy;
};

// Solves / evaluates one method at one sweep point. `full` is the basic
// model on the complete action grid, shared by every method for exact
// policy evaluation.
MethodResult run_method(const std::string& method, int L,
                        const SystemParams& p, const CtmdpModel& full) {
  MethodResult r;
  if (method == "basic") {
    auto model = std::make_shared<CtmdpModel>(build_basic_ctmdp(p));
    const SolveResult sol =
        relative_value_iteration(uniformize(*model), 1e-8);
    r.name = "basic";
    r.states = static_cast<long long>(model->states.size());
    r.state_actions = static_cast<long long>(model->state_action_count());
    r.iterations = sol.iterations;
    r.exact = evaluate_policy(*model, sol.policy, p);
    auto pol = std::make_shared<Policy>(sol.policy);
    r.sim_policy = [model, pol](int b, int i) {
      return pol->choice[static_cast<std::size_t>(model->index_of({b, i}))];
    };
  } else if (method == "multilevel" || method == "uniform") {
    const bool uni = method == "uniform";
    const CtmdpModel agg = uni ? build_uniform_agg_ctmdp(p, L)
                               : build_multilevel_ctmdp(p, L);
    const LevelScheme sch =
        uni ? uniform_level_scheme(p, L) : build_level_scheme(p, L);
    const SolveResult sol = relative_value_iteration(uniformize(agg), 1e-8);
    r.name = method + "_L" + std::to_string(L);
    r.L = L;
    r.states = static_cast<long long>(agg.states.size());
    r.state_actions = static_cast<long long>(agg.state_action_count());
    r.iterations = sol.iterations;
    auto lifted = std::make_shared<Policy>(
        lift_aggregated_policy(sol.policy, agg, sch, full));
    r.exact = evaluate_policy(full, *lifted, p);
    auto fm = std::make_shared<CtmdpModel>(full);  // copy; simulation-safe
    r.sim_policy = [fm, lifted](int b, int i) {
      return lifted->choice[static_cast<std::size_t>(fm->index_of({b, i}))];
    };
  } else {  // bulk | staggered
    const ThresholdConfig cfg{static_on_threshold(p), 1};
    const bool stag = method == "staggered";
    const SystemParams pc = p;
    auto fn = [cfg, pc, stag](StateBI s) {
      return stag ? staggered_policy(s, cfg, pc) : bulk_policy(s, cfg, pc);
    };
    r.name = method;
    r.states = static_cast<long long>(full.states.size());
    r.state_actions = static_cast<long long>(full.state_action_count());
    r.exact = evaluate_policy(full, policy_from_fn(full, fn), p);
    r.sim_policy = [fn](int b, int i) { return fn({b, i}); };
  }
  return r;
}

void write_plot_script(const ExperimentSpec& spec,
                       const std::vector<std::string>& names,
                       std::ostream& os) {
  // sweep parameter's column index in both CSVs (1-based)
  const int xcol = spec.sweep_param == "lambda" ? 1
                   : spec.sweep_param == "gamma" ? 3
                                                 : 6;
  os << "# generated plot script; render with: gnuplot plots.gp\n"
     << "set datafile separator \",\"\n"
     << "set terminal pngcairo size 960,640\n"
     << "set key outside right\n"
     << "set xlabel \"" << spec.sweep_param << "\"\n";
  const struct {
    const char* file;
    const char* ylabel;
    int solver_col;
    int sim_col, sim_ci_col;
  } plots[] = {{"wait.png", "expected waiting jobs", 13, 11, 15},
               {"power.png", "expected power cost", 14, 12, 16},
               {"reward.png", "expected reward per time unit", 15, 13, 17}};
  for (const auto& pl : plots) {
    os << "\nset output \"" << pl.file << "\"\n"
       << "set ylabel \"" << pl.ylabel << "\"\nplot \\\n";
    for (std::size_t m = 0; m < names.size(); ++m) {
      os << "  \"solver.csv\" using (strcol(7) eq \"" << names[m]
         << "\" ? $" << xcol << " : NaN):" << pl.solver_col
         << " with linespoints title \"" << names[m] << "\", \\\n";
    }
    os << "  \"sim.csv\" using (1 ? $" << xcol << " : NaN):" << pl.sim_col
       << ':' << pl.sim_ci_col << " with yerrorbars pt 7 ps 0.4 "
       << "title \"simulated\"\n";
  }
}

int run_experiment(const ExperimentSpec& spec) {
  spec.validate_spec();
  namespace fs = std::filesystem;
  fs::create_directories(spec.output_dir);
  std::ofstream sim_csv(fs::path(spec.output_dir) / "sim.csv");
  std::ofstream sol_csv(fs::path(spec.output_dir) / "solver.csv");
  std::ofstream summary(fs::path(spec.output_dir) / "summary.txt");
  sim_csv << "lambda,mu,gamma,C,Q,c_perf,policy_name,L,seed,events,EW,EP,ER,"
             "drop_frac,ci_EW,ci_EP,ci_ER\n";
  sol_csv << "lambda,mu,gamma,C,Q,c_perf,policy_name,L,states,state_actions,"
             "iterations,gain,EW,EP,ER\n";

  // expand method names x level lists into concrete jobs
  std::vector<std::pair<std::string, int>> jobs;
  for (const std::string& m : spec.methods) {
    if (m == "multilevel")
      for (int L : spec.levels) jobs.emplace_back(m, L);
    else if (m == "uniform")
      for (int L : spec.uniform_levels) jobs.emplace_back(m, L);
    else
      jobs.emplace_back(m, 0);
  }
  std::vector<std::string> names;
  for (const auto& [m, L] : jobs)
    names.push_back(L > 0 ? m + "_L" + std::to_string(L) : m);
  {
    std::ofstream gp(fs::path(spec.output_dir) / "plots.gp");
    write_plot_script(spec, names, gp);
  }

  summary << "sweep " << spec.sweep_param << " over";
  for (double v : spec.sweep_values) summary << ' ' << fmt(v);
  summary << "\nevents per simulation: " << spec.horizon_events << "\n\n";

  using clock = std::chrono::steady_clock;
  for (double v : spec.sweep_values) {
    SystemParams p = spec.base;
    if (spec.sweep_param == "c_perf")
      p.c_perf = v;
    else if (spec.sweep_param == "lambda")
      p.lambda = v;
    else
      p.gamma = v;
    try {
      p.validate();
      const CtmdpModel full = build_basic_ctmdp(p, ActionGrid::Full);
      for (const auto& [method, L] : jobs) {
        const auto t0 = clock::now();
        const MethodResult r = run_method(method, L, p, full);
        const std::string prefix = fmt(p.lambda) + ',' + fmt(p.mu) + ',' +
                                   fmt(p.gamma) + ',' + std::to_string(p.C) +
                                   ',' + std::to_string(p.Q) + ',' +
                                   fmt(p.c_perf) + ',' + r.name + ',' +
                                   std::to_string(r.L);
        sol_csv << prefix << ',' << r.states << ',' << r.state_actions << ','
                << r.iterations << ',' << fmt(r.exact.gain) << ','
                << fmt(r.exact.e_wait) << ',' << fmt(r.exact.e_power) << ','
                << fmt(r.exact.gain) << '\n'
                << std::flush;
        for (std::uint64_t seed : spec.seeds) {
          const SimMetrics sm =
              simulate(p, r.sim_policy, spec.horizon_events, seed);
          sim_csv << prefix << ',' << seed << ',' << sm.events << ','
                  << fmt(sm.e_wait) << ',' << fmt(sm.e_power) << ','
                  << fmt(sm.e_reward) << ',' << fmt(sm.drop_fraction) << ','
                  << fmt(sm.ci_wait) << ',' << fmt(sm.ci_power) << ','
                  << fmt(sm.ci_reward) << '\n'
                  << std::flush;
        }
        const double secs =
            std::chrono::duration<double>(clock::now() - t0).count();
        summary << spec.sweep_param << '=' << fmt(v) << ' ' << r.name
                << ": gain " << fmt(r.exact.gain) << ", wallclock "
                << fmt(secs) << " s\n"
                << std::flush;
        std::cout << spec.sweep_param << '=' << fmt(v) << ' ' << r.name
                  << " done (" << fmt(secs) << " s)" << std::endl;
      }
    } catch (const std::exception& e) {
      // rows written so far are already flushed
      throw std::runtime_error("at sweep point " + spec.sweep_param + "=" +
                               fmt(v) + ": " + e.what());
    }
  }
  std::cout << "wrote " << spec.output_dir << "/{sim.csv, solver.csv, "
            << "plots.gp, summary.txt}" << std::endl;
  return 0;
}

// -------------------------------------------------------- validation --

bool check(const std::string& name, bool ok, const std::string& detail) {
  std::cout << "CHECK " << (ok ? "pass" : "FAIL") << " - " << name;
  if (!detail.empty()) std::cout << " [" << detail << "]";
  std::cout << std::endl;
  return ok;
}

bool counting_checks(const SystemParams& base) {
  bool ok = true;
  SystemParams p = base;
  for (int c = 1; c <= 40 && ok; ++c)
    for (int q = 1; q <= 40 && ok; ++q) {
      p.C = c;
      p.Q = q;
      p.lambda = 0.5;  // counting ignores rates; keep rho < C valid
      const SizeCount en = count_basic(p);
      const SizeCount cf = count_basic_closed_form(p);
      ok = en.n_states == cf.n_states &&
           en.n_state_actions == cf.n_state_actions;
    }
  return check("state/action enumeration equals closed form on C,Q in [1,40]",
               ok, "");
}

bool ratio_table(const SystemParams& p, const std::vector<int>& L_list) {
  const SizeCount basic = count_basic(p);
  std::cout << "size-reduction table (C=" << p.C << ", Q=" << p.Q << "):\n"
            << "  L  states  state_actions  complexity_ratio\n";
  bool ok = true;
  for (int L : L_list) {
    const SizeCount ml = count_multilevel(p, L);
    const double ratio = basic.complexity / ml.complexity;
    std::cout << "  " << L << "  " << ml.n_states << "  " << ml.n_state_actions
              << "  " << fmt(ratio) << '\n';
    if (!(ratio > 1.0)) ok = false;
    // canonical reference points for the desk-scale configuration
    if (p.C == 100 && p.Q == 100) {
      const double expect = L == 50 ? 32.0 : L == 20 ? 3125.0
                            : L == 10              ? 100000.0
                                                   : 0.0;
      if (expect > 0.0 && !(ratio > expect / 4.0 && ratio < expect * 4.0))
        ok = false;
    }
  }
  return check("complexity ratios positive (and near reference at C=Q=100)",
               ok, "");
}

bool boundary_prob_suite() {
  std::mt19937_64 rng(7031);
  std::uniform_real_distribution<double> dn(0.0, 60.0);
  std::uniform_int_distribution<int> da(0, 5);
  std::uniform_int_distribution<int> dk(1, 12);
  std::uniform_real_distribution<double> dr(0.1, 50.0);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double n_mean = dn(rng);
    const int a = da(rng), k = dk(rng);
    const double lam = dr(rng), mu = dr(rng), gam = dr(rng);
    const double birth = mu * n_mean + gam * a * k;
    const auto [ulo, uhi] = u_probs(birth / lam, k);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
    for (int j = 0; j < k; ++j) {
      if (j + 1 < k) {
        A(j + 1, j) += birth;
        A(j, j) -= birth;
      }
      if (j > 0) {
        A(j - 1, j) += lam;
        A(j, j) -= lam;
      }
    }
    for (int j = 0; j < k; ++j) A(k - 1, j) = 1.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k);
    rhs(k - 1) = 1.0;
    const Eigen::VectorXd pi = A.fullPivLu().solve(rhs);
    worst = std::max({worst, std::abs(ulo - pi(0)), std::abs(uhi - pi(k - 1))});
  }
  return check("boundary probabilities match 100 brute-force birth-death "
               "solves",
               worst < 1e-9, "max dev " + fmt(worst));
}

bool collapse_check(const SystemParams& base) {
  SystemParams p = base;
  p.epsilon = 1e-9;
  const LevelScheme sch = build_level_scheme(p, p.C);
  const CtmdpModel basic = build_basic_ctmdp(p);
  const CtmdpModel agg = build_multilevel_ctmdp(p, p.C);
  double dev = 0.0;
  bool ok = sch.K_B == 1 && sch.K_I == 1;
  for (std::size_t s = 0; s < basic.states.size() && ok; ++s) {
    const StateBI bs = basic.states[s];
    // skip cells absorbed into the merged top busy level or the clamped
    // i = C cell; every other level is a singleton
    if (bs.b >= sch.busy_lo(sch.L - 1) &&
        sch.busy_hi(sch.L - 1) != sch.busy_lo(sch.L - 1))
      continue;
    if (bs.i >= p.C) continue;
    const int as =
        agg.index_of({sch.busy_level_of(bs.b), sch.iw_level_of(bs.i)});
    if (as < 0 || agg.actions[as] != basic.actions[s]) {
      ok = false;
      break;
    }
    for (std::size_t k = 0; k < basic.actions[s].size(); ++k) {
      dev = std::max(dev, std::abs(basic.rewards[s][k] - agg.rewards[as][k]));
      for (const auto& [t, r] : basic.rates[s][k]) {
        const StateBI bt = basic.states[t];
        const int at =
            agg.index_of({sch.busy_level_of(bt.b), sch.iw_level_of(bt.i)});
        double got = 0.0;
        for (const auto& [t2, r2] : agg.rates[as][k])
          if (t2 == at) got = r2;
        dev = std::max(dev, std::abs(got - r));
      }
    }
  }
  ok = ok && dev < 1e-10;
  return check("degenerate collapse: L=C levels reproduce the basic rate "
               "rows",
               ok, "max rate/reward dev " + fmt(dev));
}

int run_validation(const SystemParams& base, std::vector<int> L_list) {
  if (L_list.empty()) {
    for (int L : {50, 20, 10})
      if (base.C % L == 0) L_list.push_back(L);
    if (L_list.empty()) L_list.push_back(base.C);
  }
  bool ok = true;
  ok &= counting_checks(base);
  ok &= ratio_table(base, L_list);
  ok &= boundary_prob_suite();
  ok &= collapse_check(base);
  std::cout << (ok ? "all checks passed" : "validation FAILED") << std::endl;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"power-management model benchmark harness"};
  std::string config, sweep, methods, levels, uniform_levels, seeds, out;
  std::optional<long long> events;
  std::optional<int> opt_C, opt_Q;
  std::optional<double> opt_lambda, opt_mu, opt_gamma, opt_cperf;
  bool do_validate = false;

  app.add_option("--config", config, "JSON experiment description");
  app.add_option("--sweep", sweep,
                 "sweep override, e.g. lambda=10,20,30 or c_perf=1,2,5");
  app.add_option("--methods", methods,
                 "comma list of basic,multilevel,uniform,bulk,staggered");
  app.add_option("--levels", levels, "comma list of L for multilevel");
  app.add_option("--uniform-levels", uniform_levels,
                 "comma list of L_u for uniform");
  app.add_option("--seeds", seeds, "comma list of simulation seeds");
  app.add_option("--events", events, "events per simulation run");
  app.add_option("--out", out, "output directory");
  app.add_option("-C,--servers", opt_C, "server count override");
  app.add_option("-Q,--queue", opt_Q, "queue capacity override");
  app.add_option("--lambda", opt_lambda, "arrival rate override");
  app.add_option("--mu", opt_mu, "service rate override");
  app.add_option("--gamma", opt_gamma, "setup rate override");
  app.add_option("--c-perf", opt_cperf, "waiting-cost weight override");
  app.add_flag("--validate", do_validate,
               "run the self-check suite instead of an experiment");
  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentSpec spec;
    spec.base.C = 100;
    spec.base.Q = 100;
    spec.base.lambda = 30.0;
    spec.base.mu = 1.0;
    spec.base.gamma = 2.0;
    spec.base.c_perf = 50.0;
    spec.base.c_power = 1.0;
    spec.base.c_power_prime = 2.0;
    if (!config.empty()) spec = load_spec(config);
    if (opt_C) spec.base.C = *opt_C;
    if (opt_Q) spec.base.Q = *opt_Q;
    if (opt_lambda) spec.base.lambda = *opt_lambda;
    if (opt_mu) spec.base.mu = *opt_mu;
    if (opt_gamma) spec.base.gamma = *opt_gamma;
    if (opt_cperf) spec.base.c_perf = *opt_cperf;
    if (!sweep.empty()) {
      const auto eq = sweep.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument("--sweep expects param=v1,v2,...");
      spec.sweep_param = sweep.substr(0, eq);
      spec.sweep_values = parse_doubles(sweep.substr(eq + 1));
    }
    auto split = [](const std::string& s) {
      std::vector<std::string> out_list;
      std::stringstream ss(s);
      std::string tok;
      while (std::getline(ss, tok, ','))
        if (!tok.empty()) out_list.push_back(tok);
      return out_list;
    };
    if (!methods.empty()) spec.methods = split(methods);
    if (!levels.empty()) {
      spec.levels.clear();
      for (double v : parse_doubles(levels))
        spec.levels.push_back(static_cast<int>(v));
    }
    if (!uniform_levels.empty()) {
      spec.uniform_levels.clear();
      for (double v : parse_doubles(uniform_levels))
        spec.uniform_levels.push_back(static_cast<int>(v));
    }
    if (!seeds.empty()) {
      spec.seeds.clear();
      for (double v : parse_doubles(seeds))
        spec.seeds.push_back(static_cast<std::uint64_t>(v));
    }
    if (events) spec.horizon_events = *events;
    if (!out.empty()) spec.output_dir = out;

    if (do_validate)
      // default ratio table {50,20,10} unless levels were given explicitly
      return run_validation(spec.base, levels.empty() && config.empty()
                                           ? std::vector<int>{}
                                           : spec.levels);
    return run_experiment(spec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
