#pragma once

// The three-client setup used across tests: client 1 saturates every slot
// with tau=1 and q=0.5 on a perfect link; client 2 ditto with q=0; client 3
// generates at slots 4m+2, tau=2, p=0.5, q=3/16.

#include "streamsim/simulator.hpp"

namespace streamsim::testing {

inline SimConfig example2_config(int m_frame, std::int64_t horizon,
                                 std::uint64_t seed = 20260810) {
  SimConfig cfg;
  auto client = [](int index, Ratio p, int tau, Ratio q, Ratio r) {
    ClientConfig c;
    c.index = index;
    c.reliability = p;
    c.delay_bound = tau;
    c.required_throughput = q;
    c.mean_rate = r;
    return c;
  };
  cfg.clients = {
      client(0, Ratio(1), 1, Ratio(1, 2), Ratio(1)),
      client(1, Ratio(1), 1, Ratio(0), Ratio(1)),
      client(2, Ratio(1, 2), 2, Ratio(3, 16), Ratio(1, 4)),
  };
  SlotCountTrace every_slot;
  every_slot.packets_per_slot = {1};
  SlotCountTrace four_phase;
  four_phase.packets_per_slot = {0, 0, 1, 0};
  cfg.sources = {ArrivalSchedule::from_trace(every_slot),
                 ArrivalSchedule::from_trace(every_slot),
                 ArrivalSchedule::from_trace(four_phase)};
  cfg.policy.kind = PolicyKind::kEpdf;
  cfg.policy.m_frame = m_frame;
  cfg.horizon_slots = horizon;
  cfg.seed = seed;
  return cfg;
}

}  // namespace streamsim::testing
