#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/markov.hpp"
#include "streamsim/simulator.hpp"

namespace streamsim {

/// Homogeneous setting: N synchronized streams, one packet each at the start
/// of every T-slot interval, shared lifetime tau = K*T and reliability p.
struct HomogeneousSpec {
  int clients = 1;             // N
  int interval_slots = 1;      // T
  int lifetime_intervals = 1;  // K
  Ratio reliability = 1;       // p

  void validate() const {
    if (clients < 1 || interval_slots < 1 || lifetime_intervals < 1) {
      throw ConfigError("homogeneous spec needs N, T, K >= 1");
    }
    if (!reliability.positive() || reliability > Ratio(1)) {
      throw ConfigError("reliability must lie in (0, 1]");
    }
  }

  double p() const { return reliability.to_double(); }
};

/// Expected idle slots in a T-slot interval that starts with m pending
/// packets: E[(T - Gamma(m, p))^+], where Gamma(m, p) is a sum of m
/// geometric service times, i.e. negative binomial:
///   sum_{j=m}^{T-1} (T - j) * C(j-1, m-1) p^m (1-p)^(j-m).
inline double negbin_idle(std::int64_t m, std::int64_t T, double p) {
  if (m < 0 || T < 1 || !(p > 0.0) || p > 1.0) {
    throw std::invalid_argument("negbin_idle: need m >= 0, T >= 1, p in (0,1]");
  }
  if (m == 0) return static_cast<double>(T);
  if (m >= T) return 0.0;
  double term = std::pow(p, static_cast<double>(m));  // j = m
  double total = static_cast<double>(T - m) * term;
  for (std::int64_t j = m + 1; j < T; ++j) {
    term *= (1.0 - p) * static_cast<double>(j - 1) / static_cast<double>(j - m);
    total += static_cast<double>(T - j) * term;
  }
  return total;
}

/// zeta[k-1] packets expire within k intervals; zeta[K-1] = N at every
/// interval start.
using ZetaState = std::vector<int>;

/// EDF interval recursion: with j successful transmissions,
///   zeta'(k) = { zeta(k+1) - [j - sum_{i<=k} zeta(i)]^+ }^+  for k < K,
///   zeta'(K) = N.
inline ZetaState zeta_step(const ZetaState& zeta, int successes, int clients) {
  const std::size_t K = zeta.size();
  ZetaState next(K);
  std::int64_t prefix = 0;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    prefix += zeta[k];
    std::int64_t leftover = std::max<std::int64_t>(successes - prefix, 0);
    next[k] = static_cast<int>(std::max<std::int64_t>(zeta[k + 1] - leftover, 0));
  }
  next[K - 1] = clients;
  return next;
}

namespace detail {

inline std::vector<double> binomial_pmf(int trials, double p) {
  std::vector<double> pmf(trials + 1);
  // C(T, j) p^j (1-p)^(T-j) by the ratio recurrence.
  double term = std::pow(1.0 - p, trials);
  if (p == 1.0) {
    pmf[trials] = 1.0;
    return pmf;
  }
  pmf[0] = term;
  for (int j = 1; j <= trials; ++j) {
    term *= p / (1.0 - p) * static_cast<double>(trials - j + 1) / static_cast<double>(j);
    pmf[j] = term;
  }
  return pmf;
}

}  // namespace detail

struct EdfStationary {
  std::vector<ZetaState> states;
  std::vector<double> distribution;
  double expected_idle = 0.0;  // I^E
  double residual = 0.0;
};

/// Builds the zeta chain under EDF (interval successes ~ Binomial(T, p)),
/// solves for its stationary distribution and averages the per-state
/// expected idle slots.
inline EdfStationary edf_stationary(const HomogeneousSpec& spec) {
  spec.validate();
  const int N = spec.clients;
  const int T = spec.interval_slots;
  const int K = spec.lifetime_intervals;
  const double p = spec.p();
  const auto pmf = detail::binomial_pmf(T, p);

  std::map<ZetaState, int> index;
  std::vector<ZetaState> states;
  ZetaState initial(K, 0);
  initial[K - 1] = N;
  index[initial] = 0;
  states.push_back(initial);

  SparseKernel kernel;
  for (std::size_t i = 0; i < states.size(); ++i) {
    std::map<int, double> row;
    for (int j = 0; j <= T; ++j) {
      ZetaState next = zeta_step(states[i], j, N);
      auto [it, fresh] = index.try_emplace(next, static_cast<int>(states.size()));
      if (fresh) states.push_back(std::move(next));
      row[it->second] += pmf[j];
    }
    kernel.emplace_back(row.begin(), row.end());
  }

  auto stationary = stationary_distribution(kernel);
  EdfStationary out;
  out.states = std::move(states);
  out.distribution = std::move(stationary.distribution);
  out.residual = stationary.residual;
  for (std::size_t i = 0; i < out.states.size(); ++i) {
    std::int64_t pending =
        std::accumulate(out.states[i].begin(), out.states[i].end(), std::int64_t{0});
    out.expected_idle += out.distribution[i] * negbin_idle(pending, T, p);
  }
  return out;
}

/// Largest symmetric requirement supportable: q_max = p (T - I^E) / (N T).
inline double homogeneous_qmax(const HomogeneousSpec& spec) {
  const EdfStationary edf = edf_stationary(spec);
  return spec.p() * (static_cast<double>(spec.interval_slots) - edf.expected_idle) /
         (static_cast<double>(spec.clients) * static_cast<double>(spec.interval_slots));
}

/// A work-conserving interval policy: given the interval-start state and the
/// number of successful transmissions, how many packets of each bucket get
/// delivered. Must serve min(successes, sum zeta) packets in total.
using IntervalAllocator = std::function<std::vector<int>(const ZetaState&, int)>;

/// EDF's allocation: earliest buckets first.
inline std::vector<int> edf_allocation(const ZetaState& zeta, int successes) {
  std::vector<int> serve(zeta.size(), 0);
  int remaining = successes;
  for (std::size_t k = 0; k < zeta.size() && remaining > 0; ++k) {
    serve[k] = std::min(zeta[k], remaining);
    remaining -= serve[k];
  }
  return serve;
}

/// A rival allocator broke the work-conservation contract.
struct HarnessError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Couples EDF against a rival work-conserving policy on a shared sequence of
/// per-interval success counts and checks the dominance invariant
///   sum_{i>=k} zeta^E_l(i) >= sum_{i>=k} zeta^rival_l(i)  for all k, l.
inline bool edf_coupling_dominates(const HomogeneousSpec& spec,
                                   const IntervalAllocator& rival,
                                   std::span<const int> successes_per_interval) {
  spec.validate();
  const int N = spec.clients;
  const int K = spec.lifetime_intervals;
  ZetaState edf(K, 0), other(K, 0);
  edf[K - 1] = N;
  other[K - 1] = N;

  auto suffix_dominates = [&] {
    std::int64_t se = 0, so = 0;
    for (int k = K - 1; k >= 0; --k) {
      se += edf[k];
      so += other[k];
      if (se < so) return false;
    }
    return true;
  };

  if (!suffix_dominates()) return false;  // interval 1: equal states
  for (int j : successes_per_interval) {
    if (j < 0 || j > spec.interval_slots) {
      throw std::invalid_argument("success count outside [0, T]");
    }
    std::vector<int> serve = rival(other, j);
    std::int64_t backlog = std::accumulate(other.begin(), other.end(), std::int64_t{0});
    std::int64_t served = 0;
    if (serve.size() != static_cast<std::size_t>(K)) {
      throw HarnessError("rival allocation has the wrong number of buckets");
    }
    for (int k = 0; k < K; ++k) {
      if (serve[k] < 0 || serve[k] > other[k]) {
        throw HarnessError("rival serves packets that do not exist");
      }
      served += serve[k];
    }
    if (served != std::min<std::int64_t>(j, backlog)) {
      throw HarnessError("rival is not work conserving");
    }

    edf = zeta_step(edf, j, N);
    ZetaState next(K);
    for (int k = 0; k + 1 < K; ++k) next[k] = other[k + 1] - serve[k + 1];
    next[K - 1] = N;
    other = std::move(next);

    if (!suffix_dominates()) return false;
  }
  return true;
}

/// SimConfig equivalent of a homogeneous spec (EDF measurement bridge):
/// every client emits one packet at generation slots 0, T, 2T, ... so the
/// batch is admitted at each interval's first slot, with tau = K*T.
inline SimConfig homogeneous_sim_config(const HomogeneousSpec& spec,
                                        std::int64_t intervals,
                                        std::uint64_t seed) {
  spec.validate();
  SimConfig cfg;
  SlotCountTrace pattern;
  pattern.packets_per_slot.assign(spec.interval_slots, 0);
  pattern.packets_per_slot[0] = 1;
  for (int n = 0; n < spec.clients; ++n) {
    ClientConfig c;
    c.index = n;
    c.reliability = spec.reliability;
    c.delay_bound = spec.lifetime_intervals * spec.interval_slots;
    c.required_throughput = Ratio(0);
    c.mean_rate = Ratio(1, spec.interval_slots);
    cfg.clients.push_back(c);
    cfg.sources.emplace_back(ArrivalSchedule::from_trace(pattern));
  }
  cfg.policy.kind = PolicyKind::kEdf;
  cfg.policy.m_frame = spec.interval_slots;
  cfg.horizon_slots = intervals * spec.interval_slots;
  cfg.seed = seed;
  return cfg;
}

struct HomogeneousMonteCarlo {
  double per_client_throughput = 0.0;  // aggregate deliveries / (N * horizon)
  double idle_per_interval = 0.0;
};

inline HomogeneousMonteCarlo simulate_edf_homogeneous(const HomogeneousSpec& spec,
                                                      std::int64_t intervals,
                                                      std::uint64_t seed) {
  SimConfig cfg = homogeneous_sim_config(spec, intervals, seed);
  RunMetrics m = run(cfg);
  std::int64_t delivered =
      std::accumulate(m.delivered.begin(), m.delivered.end(), std::int64_t{0});
  HomogeneousMonteCarlo out;
  out.per_client_throughput =
      static_cast<double>(delivered) /
      (static_cast<double>(spec.clients) * static_cast<double>(m.horizon));
  out.idle_per_interval =
      static_cast<double>(m.idle_slots) / static_cast<double>(intervals);
  return out;
}

}  // namespace streamsim
