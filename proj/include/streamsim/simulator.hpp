#pragma once

#include <cassert>
#include <cstdint>
#include <deque>
#include <optional>
#include <variant>
#include <vector>

#include "streamsim/channel.hpp"
#include "streamsim/core.hpp"
#include "streamsim/scheduling.hpp"
#include "streamsim/traffic.hpp"

namespace streamsim {

struct EstimatorSettings {
  bool enabled = false;   // when off, policies read the configured p_n
  double alpha = 0.01;
  double initial = 1.0;
  bool refresh_debt_workloads = false;  // recompute M*q_n/p_hat_n each frame
};

using TrafficSource = std::variant<ArrivalSchedule, MarkovSource>;

struct SimConfig {
  std::vector<ClientConfig> clients;
  std::vector<TrafficSource> sources;  // one per client
  PolicySpec policy;
  std::int64_t horizon_slots = 0;
  std::uint64_t seed = 0;
  double slot_width_s = kDefaultSlotWidthSeconds;
  EstimatorSettings estimator;
  bool record_outcomes = false;

  void validate() const {
    if (clients.empty()) throw ConfigError("need at least one client");
    if (sources.size() != clients.size()) {
      throw ConfigError("every client needs a traffic source");
    }
    if (horizon_slots < 1) throw ConfigError("horizon must be >= 1 slot");
    if (!(slot_width_s > 0.0)) throw ConfigError("slot width must be positive");
    for (const auto& c : clients) c.validate();
    policy.validate(static_cast<int>(clients.size()));
  }
};

struct RunMetrics {
  std::int64_t horizon = 0;
  double slot_width_s = kDefaultSlotWidthSeconds;
  std::int64_t bucket_slots = 1;  // slots per wall-clock second
  std::vector<std::int64_t> delivered;
  std::vector<std::int64_t> generated;
  std::vector<std::int64_t> expired;
  std::vector<std::int64_t> queued_at_end;
  std::int64_t idle_slots = 0;
  std::vector<std::vector<std::int64_t>> delivered_per_second;  // [client][bucket]
  std::vector<Ratio> final_debts;
  std::vector<SlotOutcome> outcomes;  // filled only when record_outcomes

  Ratio throughput(int client) const { return Ratio(delivered[client], horizon); }

  bool operator==(const RunMetrics&) const = default;
};

namespace detail {

// Stream tags for deriving independent substreams from the run seed.
inline constexpr std::uint64_t kChannelTag = 0x6368616E;  // "chan"
inline constexpr std::uint64_t kTrafficTag = 0x74726166;  // "traf"
inline constexpr std::uint64_t kTieTag = 0x74696573;      // "ties"

}  // namespace detail

/// Slotted-time engine. Per slot t, in order: admit packets generated during
/// slot t-1; debt frame increment; build the schedulable queue view; policy
/// selection; channel attempt (debt decrement applies to the scheduled client
/// whether or not the transmission succeeds); expiry of deadline-t packets.
/// The whole run is a pure function of (config, seed).
inline RunMetrics run(const SimConfig& config) {
  config.validate();
  const int n_clients = static_cast<int>(config.clients.size());
  const auto horizon = config.horizon_slots;

  BernoulliChannel channel(
      [&] {
        std::vector<double> p;
        for (const auto& c : config.clients) p.push_back(c.p());
        return p;
      }(),
      derive_stream(config.seed, detail::kChannelTag));
  ReliabilityEstimator estimator(n_clients, config.estimator.alpha,
                                 config.estimator.initial);
  std::vector<double> true_p;
  for (const auto& c : config.clients) true_p.push_back(c.p());

  std::vector<Ratio> workloads;
  for (const auto& c : config.clients) workloads.push_back(c.workload());
  DebtLedger ledger(workloads, config.policy.m_frame);

  SplitMix tie_rng(derive_stream(config.seed, detail::kTieTag,
                                 static_cast<std::uint64_t>(config.policy.kind)));
  std::vector<SplitMix> traffic_rng;
  std::vector<TrafficSource> sources = config.sources;  // markov state is run-local
  for (int n = 0; n < n_clients; ++n) {
    traffic_rng.emplace_back(
        derive_stream(config.seed, detail::kTrafficTag, n));
  }

  RunMetrics m;
  m.horizon = horizon;
  m.slot_width_s = config.slot_width_s;
  m.bucket_slots =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(1.0 / config.slot_width_s));
  const auto n_buckets = (horizon + m.bucket_slots - 1) / m.bucket_slots;
  m.delivered.assign(n_clients, 0);
  m.generated.assign(n_clients, 0);
  m.expired.assign(n_clients, 0);
  m.queued_at_end.assign(n_clients, 0);
  m.delivered_per_second.assign(n_clients,
                                std::vector<std::int64_t>(n_buckets, 0));
  if (config.record_outcomes) m.outcomes.reserve(horizon);

  std::vector<std::deque<Packet>> queue(n_clients);
  QueueView view;
  std::int64_t next_packet_id = 1;

  for (SlotIndex t = 1; t <= horizon; ++t) {
    // (1) Admit packets generated during slot t-1.
    for (int n = 0; n < n_clients; ++n) {
      const SlotIndex gen = t - 1;
      auto admit = [&](int size) {
        queue[n].push_back(make_packet(next_packet_id++, n, gen,
                                       config.clients[n].delay_bound, size));
        ++m.generated[n];
      };
      if (auto* schedule = std::get_if<ArrivalSchedule>(&sources[n])) {
        for (int size : schedule->sizes_at(gen)) admit(size);
      } else {
        int count = std::get<MarkovSource>(sources[n]).step(traffic_rng[n]);
        for (int i = 0; i < count; ++i) admit(kDefaultMtuBytes);
      }
    }

    // (2) Debt frame increment (and optional estimator-driven refresh).
    const bool frame_start = t % config.policy.m_frame == 1 % config.policy.m_frame;
    if (frame_start && config.estimator.enabled &&
        config.estimator.refresh_debt_workloads) {
      std::vector<Ratio> fresh;
      for (int n = 0; n < n_clients; ++n) {
        double phat = std::max(estimator.estimate(n), 1.0 / 1024.0);
        fresh.push_back(config.clients[n].required_throughput /
                        Ratio::from_double(phat));
      }
      ledger.set_workloads(fresh);
    }
    ledger.advance(t);

    // (3) Queue view: every client's earliest-deadline group. Each policy
    // always picks some client's earliest packet, so the head groups are a
    // sufficient (and much smaller) view of the schedulable set.
    view.clear();
    for (int n = 0; n < n_clients; ++n) {
      if (queue[n].empty()) continue;
      const SlotIndex head_deadline = queue[n].front().deadline;
      assert(queue[n].front().available_from <= t);
      assert(head_deadline >= t);
      for (const Packet& p : queue[n]) {
        if (p.deadline != head_deadline) break;
        view.push_back({n, p.deadline, p.id});
      }
    }

    // (4) Policy selection.
    const std::vector<double>& phat =
        config.estimator.enabled ? estimator.estimates() : true_p;
    std::optional<std::size_t> pick;
    switch (config.policy.kind) {
      case PolicyKind::kEdf:
        pick = select_edf(view, tie_rng);
        break;
      case PolicyKind::kLdf:
        pick = select_ldf(view, ledger, config.policy.ties, &tie_rng);
        break;
      case PolicyKind::kEpdf:
        pick = select_epdf(view, ledger, config.policy.ties, &tie_rng);
        break;
      case PolicyKind::kCostIndex:
        pick = select_cost_index(view, config.policy.dropping_costs, phat, t);
        break;
    }

    SlotOutcome outcome;
    outcome.slot = t;

    // (5) Channel attempt; a delivered packet leaves the system.
    std::optional<int> scheduled;
    if (pick) {
      const QueueEntry entry = view[*pick];
      assert(entry.deadline >= t);
      scheduled = entry.client;
      const bool success = channel.attempt(entry.client, t);
      if (config.estimator.enabled) estimator.update(entry.client, success);
      if (success) {
        auto& q = queue[entry.client];
        for (auto it = q.begin(); it != q.end(); ++it) {
          if (it->id == entry.id) {
            q.erase(it);
            break;
          }
        }
        ++m.delivered[entry.client];
        ++m.delivered_per_second[entry.client][(t - 1) / m.bucket_slots];
        outcome.delivered_client = entry.client;
      }
      outcome.scheduled_client = entry.client;
      outcome.scheduled_packet = entry.id;
      outcome.success = success;
      outcome.idle = false;
    } else {
      assert(view.empty());  // all four policies are work-conserving
      ++m.idle_slots;
    }

    // (6) Debt decrement for the scheduled client, success or not.
    ledger.charge(scheduled);

    // (7) Expire packets whose deadline is this slot.
    outcome.expired_counts.assign(n_clients, 0);
    for (int n = 0; n < n_clients; ++n) {
      while (!queue[n].empty() && queue[n].front().deadline == t) {
        queue[n].pop_front();
        ++m.expired[n];
        ++outcome.expired_counts[n];
      }
      assert(queue[n].empty() || queue[n].front().deadline > t);
    }

    if (config.record_outcomes) m.outcomes.push_back(std::move(outcome));
  }

  for (int n = 0; n < n_clients; ++n) {
    m.queued_at_end[n] = static_cast<std::int64_t>(queue[n].size());
  }
  m.final_debts = ledger.debts();
  return m;
}

/// The 95% achievement rule, evaluated in exact arithmetic:
/// delivered_n / horizon >= (19/20) q_n for every client.
inline bool achieved(const RunMetrics& metrics,
                     const std::vector<ClientConfig>& clients) {
  for (std::size_t n = 0; n < clients.size(); ++n) {
    if (metrics.throughput(static_cast<int>(n)) <
        Ratio(19, 20) * clients[n].required_throughput) {
      return false;
    }
  }
  return true;
}

/// Delivered count per wall-clock second for one client; buckets are
/// floor(1s / slot_width) slots, the last one possibly partial.
inline std::vector<std::int64_t> per_second_series(const RunMetrics& metrics,
                                                   int client) {
  if (metrics.horizon < metrics.bucket_slots) {
    throw ConfigError("per-second series needs a horizon of at least one second");
  }
  return metrics.delivered_per_second[client];
}

}  // namespace streamsim
