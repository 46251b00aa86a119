#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "streamsim/rational.hpp"

namespace streamsim {

/// Slot 1 is the first simulated slot; generation happens during slots >= 0.
using SlotIndex = std::int64_t;

inline constexpr int kDefaultMtuBytes = 1500;
inline constexpr double kDefaultSlotWidthSeconds = 750e-6;

/// Invalid configuration or malformed input; the CLI maps this to exit 1.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Last slot in which a packet generated during `generated_at` may still be
/// transmitted. The eligible window is [generated_at + 1, generated_at + tau]:
/// a packet cannot be sent in its own generation slot, and expiry removal
/// happens after the deadline slot's transmission attempt.
inline SlotIndex deadline_of(SlotIndex generated_at, int delay_bound_slots) {
  if (delay_bound_slots < 1) {
    throw ConfigError("delay bound must be at least 1 slot");
  }
  return generated_at + delay_bound_slots;
}

/// One transmittable unit.
struct Packet {
  std::int64_t id = 0;
  int client = 0;  // 0-based position in the client list
  SlotIndex generated_at = 0;
  SlotIndex available_from = 1;  // generated_at + 1
  SlotIndex deadline = 1;        // generated_at + tau_n
  int size_bytes = kDefaultMtuBytes;

  bool operator==(const Packet&) const = default;
};

inline Packet make_packet(std::int64_t id, int client, SlotIndex generated_at,
                          int delay_bound_slots, int size_bytes) {
  if (size_bytes <= 0) throw ConfigError("packet size must be positive");
  return Packet{id,
                client,
                generated_at,
                generated_at + 1,
                deadline_of(generated_at, delay_bound_slots),
                size_bytes};
}

inline bool is_schedulable(const Packet& p, SlotIndex t) {
  return p.available_from <= t && t <= p.deadline;
}

/// Per-client model parameters. reliability, required_throughput and the
/// derived workload w_n = q_n / p_n are exact rationals.
struct ClientConfig {
  int index = 0;  // 0-based
  Ratio reliability = 1;
  int delay_bound = 1;           // tau_n, slots
  Ratio required_throughput = 0; // q_n, packets per slot
  Ratio mean_rate = 0;           // r_n, packets per slot

  Ratio workload() const { return required_throughput / reliability; }
  double p() const { return reliability.to_double(); }

  void validate() const {
    if (!reliability.positive() || reliability > Ratio(1)) {
      throw ConfigError("client reliability must lie in (0, 1]");
    }
    if (delay_bound < 1) throw ConfigError("client delay bound must be >= 1");
    if (required_throughput < Ratio(0)) {
      throw ConfigError("required throughput must be nonnegative");
    }
    if (required_throughput > mean_rate) {
      throw ConfigError("required throughput q exceeds mean arrival rate r");
    }
  }
};

/// What happened during one slot.
struct SlotOutcome {
  SlotIndex slot = 0;
  std::optional<int> scheduled_client;
  std::optional<std::int64_t> scheduled_packet;
  bool success = false;
  std::optional<int> delivered_client;       // e_n(t); at most one per slot
  std::vector<std::int64_t> expired_counts;  // dropped at the end of this slot
  bool idle = true;

  bool operator==(const SlotOutcome&) const = default;
};

}  // namespace streamsim
