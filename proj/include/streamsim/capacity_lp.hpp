#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/lp.hpp"
#include "streamsim/rng.hpp"
#include "streamsim/traffic.hpp"

namespace streamsim {

/// General-case instance for the capacity oracle: per-client reliability,
/// delay bound and an irreducible finite-state arrival chain.
struct LpInstance {
  struct Client {
    Ratio reliability = 1;
    int delay_bound = 1;  // tau_n
  };
  std::vector<Client> clients;
  std::vector<MarkovSource> chains;  // one per client

  void validate() const {
    if (clients.empty()) throw ConfigError("instance needs at least one client");
    if (chains.size() != clients.size()) {
      throw ConfigError("instance needs one arrival chain per client");
    }
    for (const auto& c : clients) {
      if (!c.reliability.positive() || c.reliability > Ratio(1)) {
        throw ConfigError("reliability must lie in (0, 1]");
      }
      if (c.delay_bound < 1) throw ConfigError("delay bound must be >= 1");
    }
  }
};

/// The instance is too large for exhaustive enumeration; carries the computed
/// a-priori bound. The CLI maps this to exit 2.
struct StateCapExceeded : std::runtime_error {
  StateCapExceeded(double size, std::int64_t cap)
      : std::runtime_error("state space bound " + std::to_string(size) +
                           " exceeds the cap of " + std::to_string(cap)),
        computed_size(size) {}
  double computed_size;
};

/// The LP support induced a disconnected chain; the average-reward LP needs
/// unichain structure.
struct UnichainViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Serve the client-m packet expiring in `laxity` slots, or idle.
struct PsiAction {
  bool idle = true;
  int client = 0;
  int laxity = 0;

  bool operator==(const PsiAction&) const = default;
};

/// Exhaustively enumerated system states (Psi occupancy matrix plus arrival
/// chain states) with the controlled transition kernel over them. States are
/// those reachable from the empty system.
class StateSpace {
 public:
  using StateVector = std::vector<int>;  // psi cells, then one chain state per client

  static StateSpace build(const LpInstance& instance,
                          std::int64_t state_cap = 100'000) {
    instance.validate();
    StateSpace space;
    space.instance_ = instance;
    const int n_clients = static_cast<int>(instance.clients.size());

    double bound = 1.0;
    space.psi_offset_.resize(n_clients);
    int cells = 0;
    for (int n = 0; n < n_clients; ++n) {
      space.psi_offset_[n] = cells;
      cells += instance.clients[n].delay_bound;
      bound *= std::pow(static_cast<double>(instance.chains[n].bound() + 1),
                        static_cast<double>(instance.clients[n].delay_bound));
      bound *= static_cast<double>(instance.chains[n].num_states());
    }
    space.psi_cells_ = cells;
    space.bound_ = bound;
    if (bound > static_cast<double>(state_cap)) {
      throw StateCapExceeded(bound, state_cap);
    }

    StateVector initial(cells + n_clients, 0);
    for (int n = 0; n < n_clients; ++n) {
      initial[cells + n] = instance.chains[n].initial_state();
    }
    space.intern(initial);

    for (std::size_t s = 0; s < space.states_.size(); ++s) {
      space.actions_.push_back(space.enumerate_actions(space.states_[s]));
      space.kernel_.emplace_back();
      for (const PsiAction& a : space.actions_[s]) {
        space.kernel_[s].push_back(space.expand_transitions(s, a));
      }
    }
    return space;
  }

  int num_clients() const { return static_cast<int>(instance_.clients.size()); }
  std::size_t num_states() const { return states_.size(); }
  double bound() const { return bound_; }
  const LpInstance& instance() const { return instance_; }
  const std::vector<StateVector>& states() const { return states_; }
  const std::vector<std::vector<PsiAction>>& actions() const { return actions_; }
  /// kernel()[s][a] lists (next state, probability), summing to 1.
  const std::vector<std::vector<std::vector<std::pair<int, double>>>>& kernel()
      const {
    return kernel_;
  }

  int psi(const StateVector& state, int client, int laxity) const {
    return state[psi_offset_[client] + laxity - 1];
  }
  int chain_state(const StateVector& state, int client) const {
    return state[psi_cells_ + client];
  }
  int psi_offset(int client) const { return psi_offset_[client]; }
  int state_index(const StateVector& v) const {
    auto it = index_.find(v);
    if (it == index_.end()) {
      throw std::logic_error("transition left the enumerated state space");
    }
    return it->second;
  }

  /// Deterministic part of a transition: serve (optionally) and age every
  /// bucket by one slot. Top buckets are left empty for arrival injection.
  StateVector shifted_psi(const StateVector& state, const PsiAction& action,
                          bool success) const {
    StateVector next(state.size(), 0);
    for (int n = 0; n < num_clients(); ++n) {
      const int tau = instance_.clients[n].delay_bound;
      const int base = psi_offset_[n];
      for (int lax = 2; lax <= tau; ++lax) {
        int count = state[base + lax - 1];
        if (!action.idle && success && action.client == n && action.laxity == lax) {
          --count;
        }
        next[base + lax - 2] = count;
      }
    }
    return next;
  }

 private:
  int intern(const StateVector& v) {
    auto [it, fresh] = index_.try_emplace(v, static_cast<int>(states_.size()));
    if (fresh) states_.push_back(v);
    return it->second;
  }

  std::vector<PsiAction> enumerate_actions(const StateVector& state) const {
    std::vector<PsiAction> actions;
    actions.push_back({});  // idle is always available
    for (int n = 0; n < num_clients(); ++n) {
      for (int lax = 1; lax <= instance_.clients[n].delay_bound; ++lax) {
        if (psi(state, n, lax) > 0) actions.push_back({false, n, lax});
      }
    }
    return actions;
  }

  std::vector<std::pair<int, double>> expand_transitions(std::size_t s,
                                                         const PsiAction& a) {
    const StateVector state = states_[s];  // copy: intern() may reallocate
    const int n_clients = num_clients();
    std::map<int, double> merged;

    auto expand_arrivals = [&](const StateVector& base, double prob) {
      // Product over clients of possible next chain states; each choice
      // fixes the top bucket to the entered state's emission.
      StateVector scratch = base;
      auto recurse = [&](auto&& self, int n, double acc) -> void {
        if (n == n_clients) {
          merged[intern(scratch)] += acc;
          return;
        }
        const MarkovSource& chain = instance_.chains[n];
        const auto& row = chain.transition_rows()[chain_state(state, n)];
        for (int next_state = 0; next_state < chain.num_states(); ++next_state) {
          if (row[next_state] <= 0.0) continue;
          scratch[psi_cells_ + n] = next_state;
          scratch[psi_offset_[n] + instance_.clients[n].delay_bound - 1] =
              chain.emissions()[next_state];
          self(self, n + 1, acc * row[next_state]);
        }
      };
      recurse(recurse, 0, prob);
    };

    if (a.idle) {
      expand_arrivals(shifted_psi(state, a, false), 1.0);
    } else {
      const double p = instance_.clients[a.client].reliability.to_double();
      if (p > 0.0) expand_arrivals(shifted_psi(state, a, true), p);
      if (p < 1.0) expand_arrivals(shifted_psi(state, a, false), 1.0 - p);
    }
    return {merged.begin(), merged.end()};
  }

  LpInstance instance_;
  std::vector<int> psi_offset_;
  int psi_cells_ = 0;
  double bound_ = 0.0;
  std::vector<StateVector> states_;
  std::map<StateVector, int> index_;
  std::vector<std::vector<PsiAction>> actions_;
  std::vector<std::vector<std::vector<std::pair<int, double>>>> kernel_;
};

inline StateSpace build_state_space(const LpInstance& instance,
                                    std::int64_t state_cap = 100'000) {
  return StateSpace::build(instance, state_cap);
}

/// eta(a | s) over the enumerated actions; states outside the LP support have
/// no distribution and fall back to earliest-deadline at simulation time.
struct StationaryPolicy {
  std::vector<std::vector<double>> action_probs;  // empty vector = unvisited
};

/// The occupation-measure program in spec form, kept around for inspection.
struct OccupationLp {
  LinearProgram lp;
  std::vector<std::pair<int, int>> var_to_state_action;
  int slack_offset = 0;  // column of s_1
};

inline OccupationLp build_occupation_lp(const StateSpace& space,
                                        std::span<const double> q) {
  const auto& kernel = space.kernel();
  const auto S = static_cast<int>(space.num_states());
  const int N = space.num_clients();
  if (static_cast<int>(q.size()) != N) {
    throw ConfigError("throughput vector size must match the client count");
  }

  OccupationLp out;
  for (int s = 0; s < S; ++s) {
    for (std::size_t a = 0; a < space.actions()[s].size(); ++a) {
      out.var_to_state_action.emplace_back(s, static_cast<int>(a));
    }
  }
  const auto n_sa = static_cast<int>(out.var_to_state_action.size());
  out.slack_offset = n_sa;
  const int n_vars = n_sa + N;

  const double cells = static_cast<double>(S + 1 + N) * (n_vars + S + 1.0);
  if (cells > 2.5e7) {
    throw StateCapExceeded(cells, 25'000'000);  // dense tableau guard
  }

  out.lp.num_vars = n_vars;
  out.lp.objective.assign(n_vars, 0.0);
  for (int n = 0; n < N; ++n) out.lp.objective[n_sa + n] = 1.0;

  // Balance: sum_a x(s,a) = sum_{s',a'} x(s',a') P(s | s', a').
  std::vector<LinearProgram::Row> rows(
      S, {std::vector<double>(n_vars, 0.0), 0.0, '='});
  for (int j = 0; j < n_sa; ++j) {
    auto [s, a] = out.var_to_state_action[j];
    rows[s].coeffs[j] += 1.0;
    for (const auto& [next, prob] : kernel[s][a]) {
      rows[next].coeffs[j] -= prob;
    }
  }
  // Normalization.
  LinearProgram::Row norm{std::vector<double>(n_vars, 0.0), 1.0, '='};
  for (int j = 0; j < n_sa; ++j) norm.coeffs[j] = 1.0;
  rows.push_back(std::move(norm));
  // Throughput: sum_{s, a serving n} x(s,a) p_n + s_n >= q_n.
  for (int n = 0; n < N; ++n) {
    LinearProgram::Row row{std::vector<double>(n_vars, 0.0), q[n], '>'};
    const double p = space.instance().clients[n].reliability.to_double();
    for (int j = 0; j < n_sa; ++j) {
      auto [s, a] = out.var_to_state_action[j];
      const PsiAction& act = space.actions()[s][a];
      if (!act.idle && act.client == n) row.coeffs[j] = p;
    }
    row.coeffs[n_sa + n] = 1.0;
    rows.push_back(std::move(row));
  }
  out.lp.rows = std::move(rows);
  return out;
}

struct FeasibilityResult {
  double shortfall = 0.0;
  bool feasible = false;
  std::vector<double> achieved;  // q-hat_n under the optimal occupation
  std::optional<StationaryPolicy> policy;
};

namespace detail {

inline void check_support_connected(const StateSpace& space,
                                    const std::vector<double>& occupancy,
                                    const StationaryPolicy& policy) {
  const auto S = static_cast<int>(space.num_states());
  std::vector<int> support;
  for (int s = 0; s < S; ++s) {
    if (occupancy[s] > 1e-12) support.push_back(s);
  }
  if (support.size() <= 1) return;

  // Edges among support states under the extracted policy.
  std::vector<std::vector<int>> fwd(S), bwd(S);
  for (int s : support) {
    for (std::size_t a = 0; a < space.kernel()[s].size(); ++a) {
      if (policy.action_probs[s][a] <= 0.0) continue;
      for (const auto& [next, pr] : space.kernel()[s][a]) {
        if (pr > 0.0 && occupancy[next] > 1e-12) {
          fwd[s].push_back(next);
          bwd[next].push_back(s);
        }
      }
    }
  }
  auto covers = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(S, 0);
    std::vector<int> stack{support[0]};
    seen[support[0]] = 1;
    std::size_t found = 1;
    while (!stack.empty()) {
      int s = stack.back();
      stack.pop_back();
      for (int v : adj[s]) {
        if (!seen[v]) {
          seen[v] = 1;
          ++found;
          stack.push_back(v);
        }
      }
    }
    return found >= support.size();
  };
  if (!covers(fwd) || !covers(bwd)) {
    throw UnichainViolation(
        "LP support is not a single communicating class; the unichain "
        "assumption does not hold for this instance");
  }
}

}  // namespace detail

/// The capacity-region membership oracle:
///   min_eta sum_n (q_n - q_hat_n(eta))^+  over occupation measures;
/// [q_n] lies in the region iff the optimum is 0 (tolerance 1e-9). When
/// feasible, also extracts the achieving randomized stationary policy.
inline FeasibilityResult lp_feasible(const StateSpace& space,
                                     std::span<const double> q) {
  OccupationLp program = build_occupation_lp(space, q);
  LpSolution sol = solve_lp(program.lp);
  if (sol.status != LpStatus::kOptimal) {
    throw std::runtime_error("occupation LP did not solve to optimality");
  }

  FeasibilityResult out;
  out.shortfall = std::max(sol.objective, 0.0);
  out.feasible = out.shortfall <= 1e-9;

  const auto S = static_cast<int>(space.num_states());
  const int N = space.num_clients();
  std::vector<double> occupancy(S, 0.0);
  const auto n_sa = static_cast<int>(program.var_to_state_action.size());
  for (int j = 0; j < n_sa; ++j) {
    occupancy[program.var_to_state_action[j].first] += sol.x[j];
  }
  out.achieved.assign(N, 0.0);
  for (int j = 0; j < n_sa; ++j) {
    auto [s, a] = program.var_to_state_action[j];
    const PsiAction& act = space.actions()[s][a];
    if (!act.idle) {
      out.achieved[act.client] +=
          sol.x[j] * space.instance().clients[act.client].reliability.to_double();
    }
  }

  if (out.feasible) {
    StationaryPolicy policy;
    policy.action_probs.assign(S, {});
    for (int s = 0; s < S; ++s) {
      if (occupancy[s] <= 1e-12) continue;
      policy.action_probs[s].assign(space.actions()[s].size(), 0.0);
    }
    for (int j = 0; j < n_sa; ++j) {
      auto [s, a] = program.var_to_state_action[j];
      if (occupancy[s] > 1e-12) {
        policy.action_probs[s][a] = sol.x[j] / occupancy[s];
      }
    }
    detail::check_support_connected(space, occupancy, policy);
    out.policy = std::move(policy);
  }
  return out;
}

/// Largest lambda with lambda * direction feasible, to within 1e-6, by
/// bisection. Returns the certified-feasible endpoint.
inline double max_uniform_scale(const StateSpace& space,
                                std::span<const double> direction) {
  double total = 0.0;
  for (double d : direction) {
    if (d < 0.0) throw ConfigError("direction components must be nonnegative");
    total += d;
  }
  if (total <= 0.0) throw ConfigError("direction must be nonzero");

  std::vector<double> q(direction.begin(), direction.end());
  auto feasible_at = [&](double lambda) {
    std::vector<double> scaled(q.size());
    for (std::size_t n = 0; n < q.size(); ++n) scaled[n] = lambda * q[n];
    return lp_feasible(space, scaled).feasible;
  };

  // One delivery per slot caps sum q-hat at 1, so this end is infeasible.
  double lo = 0.0, hi = (1.0 + 1e-6) / total;
  if (feasible_at(hi)) return hi;  // defensive; should not happen
  while (hi - lo > 1e-6) {
    double mid = 0.5 * (lo + hi);
    (feasible_at(mid) ? lo : hi) = mid;
  }
  return lo;
}

struct PolicyThroughputs {
  std::vector<double> throughput;
  std::vector<std::int64_t> delivered;
  std::int64_t slots = 0;
};

/// Runs the extracted randomized stationary policy on the enumerated model.
/// States the LP never visits fall back to serving the earliest deadline.
inline PolicyThroughputs simulate_stationary_policy(const StateSpace& space,
                                                    const StationaryPolicy& policy,
                                                    std::int64_t slots,
                                                    std::uint64_t seed) {
  const int N = space.num_clients();
  SplitMix action_rng(derive_stream(seed, 0x61637431));
  SplitMix channel_rng(derive_stream(seed, 0x6368616E));
  std::vector<SplitMix> chain_rng;
  for (int n = 0; n < N; ++n) {
    chain_rng.emplace_back(derive_stream(seed, 0x74726166, n));
  }

  PolicyThroughputs out;
  out.delivered.assign(N, 0);
  out.slots = slots;

  int state = 0;
  for (std::int64_t t = 0; t < slots; ++t) {
    const auto& actions = space.actions()[state];
    std::size_t chosen = 0;
    if (!policy.action_probs[state].empty()) {
      double u = action_rng.u01();
      double acc = 0.0;
      for (std::size_t a = 0; a < actions.size(); ++a) {
        acc += policy.action_probs[state][a];
        if (u < acc) {
          chosen = a;
          break;
        }
        if (a + 1 == actions.size()) chosen = a;
      }
    } else {
      // Unvisited state: earliest deadline, lowest client index.
      for (std::size_t a = 1; a < actions.size(); ++a) {
        if (chosen == 0 || actions[a].laxity < actions[chosen].laxity ||
            (actions[a].laxity == actions[chosen].laxity &&
             actions[a].client < actions[chosen].client)) {
          chosen = a;
        }
      }
    }

    const PsiAction& act = actions[chosen];
    bool success = false;
    if (!act.idle) {
      double p = space.instance().clients[act.client].reliability.to_double();
      success = channel_rng.u01() < p;
      if (success) ++out.delivered[act.client];
    }

    StateSpace::StateVector next = space.shifted_psi(space.states()[state], act, success);
    for (int n = 0; n < N; ++n) {
      const MarkovSource& chain = space.instance().chains[n];
      const auto& row =
          chain.transition_rows()[space.chain_state(space.states()[state], n)];
      double u = chain_rng[n].u01();
      double acc = 0.0;
      int next_state = chain.num_states() - 1;
      for (int x = 0; x < chain.num_states(); ++x) {
        acc += row[x];
        if (u < acc) {
          next_state = x;
          break;
        }
      }
      next[next.size() - N + n] = next_state;
      next[space.psi_offset(n) + space.instance().clients[n].delay_bound - 1] =
          chain.emissions()[next_state];
    }
    state = space.state_index(next);
  }

  out.throughput.assign(N, 0.0);
  for (int n = 0; n < N; ++n) {
    out.throughput[n] =
        static_cast<double>(out.delivered[n]) / static_cast<double>(slots);
  }
  return out;
}

}  // namespace streamsim
