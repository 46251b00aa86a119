#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/rational.hpp"
#include "streamsim/rng.hpp"

namespace streamsim {

/// One schedulable packet as seen by a policy.
struct QueueEntry {
  int client = 0;
  SlotIndex deadline = 0;
  std::int64_t id = 0;
};

/// The packets available for transmission in the current slot. Must contain
/// no expired and no not-yet-available packets; the simulator guarantees it.
using QueueView = std::vector<QueueEntry>;

/// Truncated time debts, kept in exact rational arithmetic:
///   d_n(t+1) = [d_n(t) + M w_n 1(t+1 = 1 mod M) - 1(n scheduled in t+1)]^+
/// with d_n(0) = 0. A slot's tick happens in two phases so the policy can
/// read post-increment debts before the slot's decision is known: advance(t)
/// applies the frame increment, charge() the decrement and truncation.
class DebtLedger {
 public:
  DebtLedger(std::vector<Ratio> workloads, int frame_slots)
      : frame_(frame_slots) {
    if (frame_slots < 1) throw ConfigError("debt frame M must be >= 1");
    for (const Ratio& w : workloads) {
      if (w < Ratio(0)) throw ConfigError("workload w must be nonnegative");
      increment_.push_back(w * Ratio(frame_slots));
    }
    debt_.assign(workloads.size(), Ratio(0));
  }

  int num_clients() const { return static_cast<int>(debt_.size()); }
  int frame_slots() const { return frame_; }
  const Ratio& debt(int client) const { return debt_[client]; }
  const std::vector<Ratio>& debts() const { return debt_; }
  const Ratio& increment(int client) const { return increment_[client]; }

  /// Recompute per-frame increments from fresh workloads (estimator mode).
  void set_workloads(std::span<const Ratio> workloads) {
    for (std::size_t n = 0; n < increment_.size(); ++n) {
      increment_[n] = workloads[n] * Ratio(frame_);
    }
  }

  /// Phase 1 of the slot-t tick: frame increment when t = 1 (mod M).
  void advance(SlotIndex t) {
    if (!charged_ || t != ticked_ + 1) {
      throw std::logic_error("debt ledger tick out of order for slot " +
                             std::to_string(t));
    }
    if (t % frame_ == 1 % frame_) {
      for (std::size_t n = 0; n < debt_.size(); ++n) debt_[n] += increment_[n];
    }
    ticked_ = t;
    charged_ = false;
  }

  /// Phase 2: decrement the scheduled client, truncating at zero.
  void charge(std::optional<int> scheduled) {
    if (charged_) throw std::logic_error("debt ledger charged twice");
    if (scheduled) {
      Ratio& d = debt_[*scheduled];
      d -= Ratio(1);
      if (d < Ratio(0)) d = Ratio(0);
    }
    charged_ = true;
  }

 private:
  std::vector<Ratio> debt_;
  std::vector<Ratio> increment_;
  int frame_ = 1;
  SlotIndex ticked_ = 0;
  bool charged_ = true;
};

/// Full tick for slot t once the scheduling decision is known.
inline void debt_tick(DebtLedger& ledger, SlotIndex t,
                      std::optional<int> scheduled) {
  ledger.advance(t);
  ledger.charge(scheduled);
}

enum class PolicyKind { kEdf, kLdf, kEpdf, kCostIndex };

enum class TieRule { kLowestIndex, kSeededRandom };

/// Policy selection plus its parameters: the debt frame M for the debt-based
/// policies and per-client dropping costs for the cost-index baseline.
struct PolicySpec {
  PolicyKind kind = PolicyKind::kEpdf;
  int m_frame = 1;
  std::vector<double> dropping_costs;  // cost-index only; c_n = q_n / r_n
  TieRule ties = TieRule::kLowestIndex;

  void validate(int num_clients) const {
    if (m_frame < 1) throw ConfigError("policy frame M must be >= 1");
    if (kind == PolicyKind::kCostIndex) {
      if (static_cast<int>(dropping_costs.size()) != num_clients) {
        throw ConfigError("cost-index policy needs one dropping cost per client");
      }
      for (double c : dropping_costs) {
        if (c < 0.0) throw ConfigError("dropping costs must be nonnegative");
      }
    }
  }
};

inline const char* policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kEdf: return "edf";
    case PolicyKind::kLdf: return "ldf";
    case PolicyKind::kEpdf: return "epdf";
    case PolicyKind::kCostIndex: return "cost-index";
  }
  return "?";
}

namespace detail {

// Lexicographic (deadline, client, id) order; the deterministic tie rule.
inline bool entry_before(const QueueEntry& a, const QueueEntry& b) {
  if (a.deadline != b.deadline) return a.deadline < b.deadline;
  if (a.client != b.client) return a.client < b.client;
  return a.id < b.id;
}

template <typename Keep>
std::optional<std::size_t> earliest_deadline(const QueueView& q, Keep keep,
                                             TieRule ties, SplitMix* rng) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!keep(q[i])) continue;
    if (!best || entry_before(q[i], q[*best])) best = i;
  }
  if (!best || ties == TieRule::kLowestIndex || rng == nullptr) return best;
  std::vector<std::size_t> tied;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (keep(q[i]) && q[i].deadline == q[*best].deadline) tied.push_back(i);
  }
  return tied[rng->below(tied.size())];
}

}  // namespace detail

/// EDF: minimum deadline, ties uniformly at random.
inline std::optional<std::size_t> select_edf(const QueueView& q, SplitMix& rng) {
  return detail::earliest_deadline(
      q, [](const QueueEntry&) { return true; }, TieRule::kSeededRandom, &rng);
}

/// LDF: among clients with a schedulable packet, the one with the largest
/// truncated time debt (tie: lowest index), then its earliest-deadline packet.
inline std::optional<std::size_t> select_ldf(const QueueView& q,
                                             const DebtLedger& debts,
                                             TieRule ties = TieRule::kLowestIndex,
                                             SplitMix* rng = nullptr) {
  std::optional<std::size_t> best;
  auto better_client = [&](int a, int b) {  // is a's client preferable to b's
    if (debts.debt(a) != debts.debt(b)) return debts.debt(a) > debts.debt(b);
    return a < b;
  };
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!best) {
      best = i;
      continue;
    }
    const QueueEntry& cur = q[*best];
    if (q[i].client == cur.client) {
      if (detail::entry_before(q[i], cur)) best = i;
    } else if (better_client(q[i].client, cur.client)) {
      best = i;
    }
  }
  if (!best || ties == TieRule::kLowestIndex || rng == nullptr) return best;
  std::vector<std::size_t> tied;  // per-client heads sharing the max debt
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (debts.debt(q[i].client) != debts.debt(q[*best].client)) continue;
    bool head = true;
    for (std::size_t j = 0; j < q.size(); ++j) {
      if (q[j].client == q[i].client && detail::entry_before(q[j], q[i])) {
        head = false;
        break;
      }
    }
    if (head) tied.push_back(i);
  }
  return tied[rng->below(tied.size())];
}

/// EPDF: earliest-deadline packet among clients with strictly positive debt;
/// if no positive-debt client has a schedulable packet, earliest deadline
/// overall. Idles only on an empty queue.
inline std::optional<std::size_t> select_epdf(const QueueView& q,
                                              const DebtLedger& debts,
                                              TieRule ties = TieRule::kLowestIndex,
                                              SplitMix* rng = nullptr) {
  auto positive = [&](const QueueEntry& e) {
    return debts.debt(e.client).positive();
  };
  if (auto pick = detail::earliest_deadline(q, positive, ties, rng)) return pick;
  return detail::earliest_deadline(
      q, [](const QueueEntry&) { return true; }, ties, rng);
}

/// Cost-index baseline: maximize c_n * p_hat_n / laxity with
/// laxity = deadline - t + 1 >= 1. Ties: earlier deadline, then lower index.
inline std::optional<std::size_t> select_cost_index(
    const QueueView& q, std::span<const double> costs,
    std::span<const double> reliability_estimates, SlotIndex now) {
  std::optional<std::size_t> best;
  double best_index = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    auto laxity = static_cast<double>(q[i].deadline - now + 1);
    double index = costs[q[i].client] * reliability_estimates[q[i].client] / laxity;
    if (!best || index > best_index ||
        (index == best_index && detail::entry_before(q[i], q[*best]))) {
      best = i;
      best_index = index;
    }
  }
  return best;
}

}  // namespace streamsim
