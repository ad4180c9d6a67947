#include "dcpm/solver.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dcpm/aggregation.hpp"

namespace dcpm {

DtmdpUniform uniformize(const CtmdpModel& model, double margin) {
  if (!(margin > 1.0))
    throw std::invalid_argument("uniformize: margin must exceed 1");
  const std::size_t n = model.states.size();

  DtmdpUniform d;
  d.n_states = n;
  d.sa_offset.assign(n + 1, 0);
  for (std::size_t s = 0; s < n; ++s)
    d.sa_offset[s + 1] = d.sa_offset[s] + model.actions[s].size();
  const std::size_t n_sa = d.sa_offset[n];

  std::vector<double> exit(n_sa, 0.0);
  double max_exit = 0.0;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t k = 0; k < model.actions[s].size(); ++k) {
      double self = 0.0;
      for (const auto& [t, r] : model.rates[s][k])
        if (t == static_cast<int>(s)) self += r;
      const double e = model.psi[s][k] - self;
      exit[d.sa_offset[s] + k] = e;
      max_exit = std::max(max_exit, e);
    }
  d.c = margin * max_exit;
  if (!(d.c > 0.0)) d.c = 1.0;  // fully absorbing model

  d.sa_action.reserve(n_sa);
  d.sa_reward.reserve(n_sa);
  d.row_offset.assign(n_sa + 1, 0);
  std::size_t sa = 0;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t k = 0; k < model.actions[s].size(); ++k, ++sa) {
      d.sa_action.push_back(model.actions[s][k]);
      d.sa_reward.push_back(model.rewards[s][k] * model.psi[s][k] / d.c);
      d.col.push_back(static_cast<int>(s));
      d.prob.push_back(1.0 - exit[sa] / d.c);
      for (const auto& [t, r] : model.rates[s][k])
        if (t != static_cast<int>(s)) {
          d.col.push_back(t);
          d.prob.push_back(r / d.c);
        }
      d.row_offset[sa + 1] = d.col.size();
    }
  return d;
}

SolveResult relative_value_iteration(const DtmdpUniform& d, double tol,
                                     long max_iters) {
  if (!(tol > 0.0))
    throw std::invalid_argument("relative_value_iteration: tol must be > 0");
  const std::size_t n = d.n_states;
  if (n == 0)
    throw std::invalid_argument("relative_value_iteration: empty model");

  std::vector<double> v(n, 0.0), vn(n, 0.0);
  Policy pol;
  pol.choice.assign(n, 0);

  double span_ct = std::numeric_limits<double>::infinity();
  double gain = 0.0;
  for (long it = 1; it <= max_iters; ++it) {
    for (std::size_t s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      int best_a = 0;
      for (std::size_t sa = d.sa_offset[s]; sa < d.sa_offset[s + 1]; ++sa) {
        double q = d.sa_reward[sa];
        for (std::size_t e = d.row_offset[sa]; e < d.row_offset[sa + 1]; ++e)
          q += d.prob[e] * v[static_cast<std::size_t>(d.col[e])];
        // actions are sorted ascending, so strict > keeps the smallest
        if (q > best) {
          best = q;
          best_a = d.sa_action[sa];
        }
      }
      vn[s] = best;
      pol.choice[s] = best_a;
    }
    double dmax = -std::numeric_limits<double>::infinity();
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n; ++s) {
      const double dv = vn[s] - v[s];
      dmax = std::max(dmax, dv);
      dmin = std::min(dmin, dv);
    }
    span_ct = d.c * (dmax - dmin);
    gain = d.c * 0.5 * (dmax + dmin);
    const double ref = vn[0];
    for (std::size_t s = 0; s < n; ++s) v[s] = vn[s] - ref;
    if (span_ct < tol)
      return {gain, std::move(v), std::move(pol), it, span_ct};
  }
  std::ostringstream msg;
  msg << "relative_value_iteration: no convergence after " << max_iters
      << " iterations (span " << span_ct << ")";
  throw std::runtime_error(msg.str());
}

namespace {

// iterative Tarjan; returns component id per node (-1 for unvisited)
// restricted to `nodes`
std::vector<int> tarjan_scc(std::size_t n, const std::vector<int>& nodes,
                            const CtmdpModel& model,
                            const std::vector<int>& kidx, int& n_comp) {
  std::vector<int> comp(n, -1), low(n, 0), disc(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stk;
  int timer = 0;
  n_comp = 0;

  struct Frame {
    int s;
    std::size_t edge;
  };
  for (int root : nodes) {
    if (disc[static_cast<std::size_t>(root)] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    disc[static_cast<std::size_t>(root)] =
        low[static_cast<std::size_t>(root)] = timer++;
    stk.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& row =
          model.rates[static_cast<std::size_t>(f.s)]
                     [static_cast<std::size_t>(kidx[static_cast<std::size_t>(
                         f.s)])];
      if (f.edge < row.size()) {
        const int t = row[f.edge].first;
        ++f.edge;
        if (disc[static_cast<std::size_t>(t)] == -1) {
          disc[static_cast<std::size_t>(t)] =
              low[static_cast<std::size_t>(t)] = timer++;
          stk.push_back(t);
          on_stack[static_cast<std::size_t>(t)] = 1;
          call.push_back({t, 0});
        } else if (on_stack[static_cast<std::size_t>(t)]) {
          low[static_cast<std::size_t>(f.s)] =
              std::min(low[static_cast<std::size_t>(f.s)],
                       disc[static_cast<std::size_t>(t)]);
        }
      } else {
        const int s = f.s;
        call.pop_back();
        if (!call.empty()) {
          const int p = call.back().s;
          low[static_cast<std::size_t>(p)] = std::min(
              low[static_cast<std::size_t>(p)], low[static_cast<std::size_t>(s)]);
        }
        if (low[static_cast<std::size_t>(s)] ==
            disc[static_cast<std::size_t>(s)]) {
          while (true) {
            const int w = stk.back();
            stk.pop_back();
            on_stack[static_cast<std::size_t>(w)] = 0;
            comp[static_cast<std::size_t>(w)] = n_comp;
            if (w == s) break;
          }
          ++n_comp;
        }
      }
    }
  }
  return comp;
}

std::vector<double> stationary_direct(
    const std::vector<int>& members, const std::vector<int>& local,
    const CtmdpModel& model, const std::vector<int>& kidx) {
  const int m = static_cast<int>(members.size());
  std::vector<Eigen::Triplet<double>> trips;
  for (int ls = 0; ls < m; ++ls) {
    const std::size_t s = static_cast<std::size_t>(members[static_cast<std::size_t>(ls)]);
    double exit = 0.0;
    for (const auto& [t, r] : model.rates[s][static_cast<std::size_t>(kidx[s])]) {
      if (t == members[static_cast<std::size_t>(ls)]) continue;
      exit += r;
      const int lt = local[static_cast<std::size_t>(t)];
      if (lt != m - 1) trips.emplace_back(lt, ls, r);
    }
    if (ls != m - 1) trips.emplace_back(ls, ls, -exit);
  }
  for (int ls = 0; ls < m; ++ls) trips.emplace_back(m - 1, ls, 1.0);

  Eigen::SparseMatrix<double> A(m, m);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("evaluate_policy: stationary solve failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  Eigen::VectorXd x = lu.solve(rhs);

  std::vector<double> pi(static_cast<std::size_t>(m));
  double tot = 0.0;
  for (int ls = 0; ls < m; ++ls) {
    pi[static_cast<std::size_t>(ls)] = std::max(0.0, x(ls));
    tot += pi[static_cast<std::size_t>(ls)];
  }
  for (auto& p : pi) p /= tot;
  return pi;
}

std::vector<double> stationary_power(
    const std::vector<int>& members, const std::vector<int>& local,
    const CtmdpModel& model, const std::vector<int>& kidx) {
  const std::size_t m = members.size();
  // uniformized transition rows restricted to the class
  std::vector<std::vector<std::pair<int, double>>> rows(m);
  double max_exit = 0.0;
  std::vector<double> exit(m, 0.0);
  for (std::size_t ls = 0; ls < m; ++ls) {
    const std::size_t s = static_cast<std::size_t>(members[ls]);
    for (const auto& [t, r] : model.rates[s][static_cast<std::size_t>(kidx[s])])
      if (t != members[ls]) exit[ls] += r;
    max_exit = std::max(max_exit, exit[ls]);
  }
  const double c = 1.05 * max_exit;
  for (std::size_t ls = 0; ls < m; ++ls) {
    const std::size_t s = static_cast<std::size_t>(members[ls]);
    rows[ls].push_back({static_cast<int>(ls), 1.0 - exit[ls] / c});
    for (const auto& [t, r] : model.rates[s][static_cast<std::size_t>(kidx[s])])
      if (t != members[ls])
        rows[ls].push_back({local[static_cast<std::size_t>(t)], r / c});
  }
  std::vector<double> pi(m, 1.0 / static_cast<double>(m)), nx(m, 0.0);
  for (long it = 0; it < 2'000'000; ++it) {
    std::fill(nx.begin(), nx.end(), 0.0);
    for (std::size_t ls = 0; ls < m; ++ls)
      for (const auto& [lt, p] : rows[ls])
        nx[static_cast<std::size_t>(lt)] += pi[ls] * p;
    double diff = 0.0, tot = 0.0;
    for (std::size_t ls = 0; ls < m; ++ls) tot += nx[ls];
    for (std::size_t ls = 0; ls < m; ++ls) {
      nx[ls] /= tot;
      diff = std::max(diff, std::abs(nx[ls] - pi[ls]));
    }
    pi.swap(nx);
    if (diff < 1e-14) break;
  }
  return pi;
}

}  // namespace

PolicyEvalResult evaluate_policy(const CtmdpModel& model, const Policy& policy,
                                 const SystemParams& params) {
  const std::size_t n = model.states.size();
  if (policy.choice.size() != n)
    throw std::invalid_argument("evaluate_policy: policy size mismatch");

  std::vector<int> kidx(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    kidx[s] = model.action_index(static_cast<int>(s), policy.choice[s]);
    if (kidx[s] < 0) {
      std::ostringstream msg;
      msg << "evaluate_policy: action " << policy.choice[s]
          << " not available at (" << model.states[s].b << ','
          << model.states[s].i << ')';
      throw std::invalid_argument(msg.str());
    }
  }

  const int start = model.index_of({0, 0});
  if (start < 0)
    throw std::invalid_argument("evaluate_policy: state (0,0) missing");

  // reachable set under the fixed policy
  std::vector<char> seen(n, 0);
  std::vector<int> order;
  order.push_back(start);
  seen[static_cast<std::size_t>(start)] = 1;
  for (std::size_t h = 0; h < order.size(); ++h) {
    const std::size_t s = static_cast<std::size_t>(order[h]);
    for (const auto& [t, r] : model.rates[s][static_cast<std::size_t>(kidx[s])])
      if (!seen[static_cast<std::size_t>(t)]) {
        seen[static_cast<std::size_t>(t)] = 1;
        order.push_back(t);
      }
  }

  int n_comp = 0;
  std::vector<int> comp = tarjan_scc(n, order, model, kidx, n_comp);

  // a component is recurrent iff no edge leaves it
  std::vector<char> leaves(static_cast<std::size_t>(n_comp), 0);
  for (int s : order)
    for (const auto& [t, r] :
         model.rates[static_cast<std::size_t>(s)]
                    [static_cast<std::size_t>(kidx[static_cast<std::size_t>(s)])])
      if (comp[static_cast<std::size_t>(s)] != comp[static_cast<std::size_t>(t)])
        leaves[static_cast<std::size_t>(comp[static_cast<std::size_t>(s)])] = 1;
  int bottom = -1, n_bottom = 0;
  for (int cidx = 0; cidx < n_comp; ++cidx)
    if (!leaves[static_cast<std::size_t>(cidx)]) {
      bottom = cidx;
      ++n_bottom;
    }
  if (n_bottom != 1)
    throw std::runtime_error(
        "evaluate_policy: multiple recurrent classes reachable from (0,0)");

  std::vector<int> members;
  for (int s : order)
    if (comp[static_cast<std::size_t>(s)] == bottom) members.push_back(s);
  std::sort(members.begin(), members.end());
  std::vector<int> local(n, -1);
  for (std::size_t ls = 0; ls < members.size(); ++ls)
    local[static_cast<std::size_t>(members[ls])] = static_cast<int>(ls);

  std::vector<double> pi_local;
  if (members.size() == 1)
    pi_local.assign(1, 1.0);
  else if (members.size() <= 50'000)
    pi_local = stationary_direct(members, local, model, kidx);
  else
    pi_local = stationary_power(members, local, model, kidx);

  PolicyEvalResult res;
  res.stationary.assign(n, 0.0);
  for (std::size_t ls = 0; ls < members.size(); ++ls) {
    const std::size_t s = static_cast<std::size_t>(members[ls]);
    const std::size_t k = static_cast<std::size_t>(kidx[s]);
    const double p = pi_local[ls];
    res.stationary[s] = p;
    res.gain += p * model.rewards[s][k] * model.psi[s][k];
    res.e_wait += p * static_cast<double>(-neg_part(model.states[s].i));
    res.e_power +=
        p * (params.c_power * pos_part(model.states[s].i) +
             params.c_power_prime * pos_part(model.actions[s][k]));
  }
  return res;
}

SizeCount count_basic(const SystemParams& params) {
  params.validate();
  SizeCount sc;
  for (int i = -params.Q; i <= params.C; ++i) {
    const int b_max = i > 0 ? params.C - i : params.C;
    sc.n_states += b_max + 1;
    sc.n_state_actions +=
        static_cast<long long>(b_max + 1) * (pos_part(i) + 2);
  }
  const double c = params.C, q = params.Q;
  sc.complexity = c * c * (q + c * c) * (q + c);
  return sc;
}

SizeCount count_basic_closed_form(const SystemParams& params) {
  params.validate();
  const long long c = params.C, q = params.Q;
  SizeCount sc;
  sc.n_states = (q + 1) * (c + 1) + c * (c + 1) / 2;
  sc.n_state_actions = 2 * (q + 1) * (c + 1) + c * (c + 1) * (c + 8) / 6;
  const double cd = static_cast<double>(c), qd = static_cast<double>(q);
  sc.complexity = cd * cd * (qd + cd * cd) * (qd + cd);
  return sc;
}

SizeCount count_multilevel(const SystemParams& params, int L) {
  const LevelScheme sch = build_level_scheme(params, L);
  SizeCount sc;
  sc.n_states = static_cast<long long>(sch.L) * (sch.L + sch.neg_levels);
  for (int I = -sch.neg_levels; I < sch.L; ++I)
    for (int B = 0; B < sch.L; ++B)
      sc.n_state_actions +=
          static_cast<long long>(agg_action_set({B, I}, sch).size());
  const double l = L, q_over_k = params.Q / sch.K_I;  // integer floor
  sc.complexity = l * l * (q_over_k + l * l) * (q_over_k + l);
  return sc;
}

}  // namespace dcpm
