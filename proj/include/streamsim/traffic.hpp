#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/markov.hpp"
#include "streamsim/rng.hpp"

namespace streamsim {

struct TraceFormatError : ConfigError {
  using ConfigError::ConfigError;
};

/// A video trace: frame sizes in bytes at a fixed frame rate.
struct FrameTrace {
  double fps = 0.0;
  std::vector<std::int64_t> frame_sizes;

  /// Generation slot of frame k (0-based): floor(k / (fps * slot_width)).
  SlotIndex slot_of_frame(std::size_t k, double slot_width_s) const {
    return static_cast<SlotIndex>(
        std::floor(static_cast<double>(k) / (fps * slot_width_s)));
  }

  SlotIndex duration_slots(double slot_width_s) const {
    double slots =
        static_cast<double>(frame_sizes.size()) / (fps * slot_width_s);
    return std::max<SlotIndex>(1, static_cast<SlotIndex>(std::ceil(slots)));
  }
};

/// Synthetic trace: packets generated per slot, one entry per slot of the
/// cycle. Bypasses packetization.
struct SlotCountTrace {
  std::vector<int> packets_per_slot;
};

using TraceData = std::variant<FrameTrace, SlotCountTrace>;

namespace detail {

inline bool parse_int_line(const std::string& line, std::int64_t& out) {
  if (line.empty()) return false;
  std::size_t i = line[0] == '-' ? 1 : 0;
  if (i == line.size()) return false;
  for (std::size_t k = i; k < line.size(); ++k) {
    if (line[k] < '0' || line[k] > '9') return false;
  }
  errno = 0;
  out = std::strtoll(line.c_str(), nullptr, 10);
  return errno == 0;
}

inline std::string trimmed(std::string s) {
  auto issp = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(s[b])) ++b;
  return s.substr(b);
}

}  // namespace detail

/// Parses the fps trace format: first line "fps=<decimal>", then one integer
/// frame size (bytes) per line. Blank lines and '#' comments are skipped.
inline FrameTrace parse_trace(std::istream& in) {
  FrameTrace trace;
  std::string line;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trimmed(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("fps=", 0) != 0) {
        throw TraceFormatError("trace line 1: missing 'fps=' header");
      }
      try {
        std::size_t used = 0;
        trace.fps = std::stod(line.substr(4), &used);
        if (used != line.size() - 4) throw std::invalid_argument("trail");
      } catch (const std::exception&) {
        throw TraceFormatError("trace header: bad fps value '" + line + "'");
      }
      if (!(trace.fps > 0.0)) {
        throw TraceFormatError("trace header: fps must be positive");
      }
      header_seen = true;
      continue;
    }
    std::int64_t size = 0;
    if (!detail::parse_int_line(line, size)) {
      throw TraceFormatError("trace line " + std::to_string(lineno) +
                             ": not an integer frame size: '" + line + "'");
    }
    if (size < 0) {
      throw TraceFormatError("trace line " + std::to_string(lineno) +
                             ": negative frame size");
    }
    trace.frame_sizes.push_back(size);
  }
  if (!header_seen) throw TraceFormatError("empty trace: missing 'fps=' header");
  if (trace.frame_sizes.empty()) {
    throw TraceFormatError("trace has a header but no frames");
  }
  return trace;
}

/// Parses either trace format, dispatching on the header line
/// ("fps=<decimal>" or "pps").
inline TraceData parse_trace_file(std::istream& in) {
  std::string head;
  std::streampos start = in.tellg();
  std::string line;
  while (std::getline(in, line)) {
    head = detail::trimmed(line);
    if (!head.empty() && head[0] != '#') break;
  }
  in.clear();
  in.seekg(start);
  if (head.rfind("fps=", 0) == 0) return parse_trace(in);
  if (head != "pps") {
    throw TraceFormatError("trace header must be 'fps=<decimal>' or 'pps'");
  }
  SlotCountTrace trace;
  bool header_seen = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trimmed(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // the "pps" line
      continue;
    }
    std::int64_t count = 0;
    if (!detail::parse_int_line(line, count) || count < 0) {
      throw TraceFormatError("trace line " + std::to_string(lineno) +
                             ": bad packets-per-slot value '" + line + "'");
    }
    trace.packets_per_slot.push_back(static_cast<int>(count));
  }
  if (trace.packets_per_slot.empty()) {
    throw TraceFormatError("pps trace has no slots");
  }
  return trace;
}

inline TraceData load_trace_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceFormatError("cannot open trace file: " + path);
  return parse_trace_file(in);
}

/// A packet-to-be: generation slot plus payload size.
struct ProtoPacket {
  SlotIndex gen_slot = 0;
  int size_bytes = 0;

  bool operator==(const ProtoPacket&) const = default;
};

/// MTU split/merge of a frame sequence. Frames of size >= mtu are emitted as
/// ceil(s/mtu) packets. Smaller consecutive frames accumulate while the
/// running sum stays below the mtu; the group is flushed when the next frame
/// would reach the mtu, or right after it absorbs a frame from a later
/// generation slot. A flushed group carries the earliest constituent frame's
/// generation slot (and hence deadline), so merging never extends a frame's
/// deadline.
inline std::vector<ProtoPacket> packetize(const FrameTrace& trace, int mtu,
                                          double slot_width_s) {
  if (mtu <= 0) throw ConfigError("mtu must be positive");
  std::vector<ProtoPacket> out;
  std::int64_t group_bytes = 0;
  SlotIndex group_slot = 0;
  auto flush = [&] {
    if (group_bytes > 0) {
      out.push_back({group_slot, static_cast<int>(group_bytes)});
    }
    group_bytes = 0;
  };
  for (std::size_t k = 0; k < trace.frame_sizes.size(); ++k) {
    std::int64_t size = trace.frame_sizes[k];
    SlotIndex slot = trace.slot_of_frame(k, slot_width_s);
    if (size >= mtu) {
      flush();
      std::int64_t remaining = size;
      while (remaining > 0) {
        int piece = static_cast<int>(std::min<std::int64_t>(remaining, mtu));
        out.push_back({slot, piece});
        remaining -= piece;
      }
      continue;
    }
    if (group_bytes > 0 && group_bytes + size >= mtu) flush();
    if (group_bytes == 0) group_slot = slot;
    group_bytes += size;
    if (slot != group_slot) flush();  // group spans a slot boundary: emit now
  }
  flush();
  return out;
}

/// Cyclic per-client arrival pattern: packet sizes indexed by generation-slot
/// position. Cheap to copy; staggered views share the underlying pattern.
class ArrivalSchedule {
 public:
  ArrivalSchedule() = default;

  static ArrivalSchedule from_packets(const std::vector<ProtoPacket>& packets,
                                      SlotIndex cycle_slots) {
    if (cycle_slots < 1) throw ConfigError("arrival cycle must be >= 1 slot");
    auto at = std::make_shared<std::vector<std::vector<int>>>(cycle_slots);
    std::int64_t total = 0;
    for (const auto& p : packets) {
      if (p.gen_slot < 0 || p.gen_slot >= cycle_slots) {
        throw ConfigError("packet generation slot outside the trace cycle");
      }
      (*at)[p.gen_slot].push_back(p.size_bytes);
      ++total;
    }
    ArrivalSchedule s;
    s.at_ = std::move(at);
    s.cycle_ = cycle_slots;
    s.total_packets_ = total;
    return s;
  }

  static ArrivalSchedule from_trace(const FrameTrace& trace, int mtu,
                                    double slot_width_s) {
    return from_packets(packetize(trace, mtu, slot_width_s),
                        trace.duration_slots(slot_width_s));
  }

  static ArrivalSchedule from_trace(const SlotCountTrace& trace,
                                    int packet_size = kDefaultMtuBytes) {
    std::vector<ProtoPacket> packets;
    for (std::size_t slot = 0; slot < trace.packets_per_slot.size(); ++slot) {
      for (int i = 0; i < trace.packets_per_slot[slot]; ++i) {
        packets.push_back({static_cast<SlotIndex>(slot), packet_size});
      }
    }
    return from_packets(packets,
                        static_cast<SlotIndex>(trace.packets_per_slot.size()));
  }

  SlotIndex cycle_slots() const { return cycle_; }
  SlotIndex shift_slots() const { return shift_; }
  std::int64_t total_packets() const { return total_packets_; }

  /// Packet sizes generated during `gen_slot` (>= 0), cyclic with the
  /// schedule's stagger shift applied.
  const std::vector<int>& sizes_at(SlotIndex gen_slot) const {
    return (*at_)[static_cast<std::size_t>((gen_slot + shift_) % cycle_)];
  }

  ArrivalSchedule shifted(SlotIndex shift) const {
    ArrivalSchedule s = *this;
    s.shift_ = ((shift % cycle_) + cycle_) % cycle_;
    return s;
  }

 private:
  std::shared_ptr<const std::vector<std::vector<int>>> at_;
  SlotIndex cycle_ = 0;
  SlotIndex shift_ = 0;
  std::int64_t total_packets_ = 0;
};

/// Staggered playback: client with rank k (0-based) starts its playhead
/// k * offset_seconds into the cyclic trace, arrivals wrapping around.
inline ArrivalSchedule stagger(const ArrivalSchedule& schedule, int client_rank,
                               double offset_seconds, double slot_width_s) {
  if (schedule.cycle_slots() < 1) throw ConfigError("stagger: empty schedule");
  auto shift = static_cast<SlotIndex>(
      std::llround(static_cast<double>(client_rank) * offset_seconds /
                   slot_width_s));
  return schedule.shifted(shift);
}

/// Long-term mean arrival rate over one full cycle, exact.
inline Ratio mean_rate(const ArrivalSchedule& schedule) {
  if (schedule.cycle_slots() < 1) throw ConfigError("mean_rate: empty schedule");
  return Ratio(schedule.total_packets(), schedule.cycle_slots());
}

/// Irreducible finite-state Markov packet source. step() advances the chain
/// and returns the sampled next state's emission.
class MarkovSource {
 public:
  MarkovSource(std::vector<std::vector<double>> transition_rows,
               std::vector<int> emissions, int initial_state)
      : rows_(std::move(transition_rows)),
        emissions_(std::move(emissions)),
        state_(initial_state) {
    validate();
  }

  int num_states() const { return static_cast<int>(rows_.size()); }
  int state() const { return state_; }
  int bound() const {  // B: max packets per slot
    return *std::max_element(emissions_.begin(), emissions_.end());
  }
  const std::vector<std::vector<double>>& transition_rows() const {
    return rows_;
  }
  const std::vector<int>& emissions() const { return emissions_; }
  int initial_state() const { return state_; }

  int step(SplitMix& rng) {
    const auto& row = rows_[state_];
    double u = rng.u01();
    double acc = 0.0;
    int next = num_states() - 1;
    for (int j = 0; j < num_states(); ++j) {
      acc += row[j];
      if (u < acc) {
        next = j;
        break;
      }
    }
    state_ = next;
    return emissions_[state_];
  }

  /// Stationary-weighted emission mean (the long-run packets/slot rate).
  double stationary_emission_mean() const {
    SparseKernel kernel(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) {
      for (std::size_t j = 0; j < rows_.size(); ++j) {
        if (rows_[i][j] > 0.0) kernel[i].emplace_back(static_cast<int>(j), rows_[i][j]);
      }
    }
    auto pi = stationary_distribution(kernel).distribution;
    double mean = 0.0;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      mean += pi[i] * emissions_[i];
    }
    return mean;
  }

 private:
  void validate() const {
    const std::size_t n = rows_.size();
    if (n == 0) throw ConfigError("markov source needs at least one state");
    if (emissions_.size() != n) {
      throw ConfigError("markov source: one emission per state required");
    }
    for (int e : emissions_) {
      if (e < 0) throw ConfigError("markov emissions must be nonnegative");
    }
    for (const auto& row : rows_) {
      if (row.size() != n) throw ConfigError("markov transition matrix not square");
      double sum = 0.0;
      for (double p : row) {
        if (p < 0.0) throw ConfigError("markov transition probability < 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("markov transition row does not sum to 1");
      }
    }
    if (state_ < 0 || state_ >= static_cast<int>(n)) {
      throw ConfigError("markov initial state out of range");
    }
    if (!irreducible()) throw ConfigError("markov chain must be irreducible");
  }

  bool irreducible() const {
    const int n = num_states();
    // Strong connectivity: forward and backward reachability from state 0.
    auto reach = [&](bool forward) {
      std::vector<char> seen(n, 0);
      std::vector<int> stack{0};
      seen[0] = 1;
      while (!stack.empty()) {
        int i = stack.back();
        stack.pop_back();
        for (int j = 0; j < n; ++j) {
          double p = forward ? rows_[i][j] : rows_[j][i];
          if (p > 0.0 && !seen[j]) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
      }
      return std::count(seen.begin(), seen.end(), 1) == n;
    };
    return reach(true) && reach(false);
  }

  std::vector<std::vector<double>> rows_;
  std::vector<int> emissions_;
  int state_ = 0;
};

/// Deterministic cyclic source emitting `pattern[k]` packets at generation
/// slots congruent to k. Used for pps-style patterns inside the state-space
/// machinery, where a chain representation is required.
inline MarkovSource cyclic_source(const std::vector<int>& pattern) {
  if (pattern.empty()) throw ConfigError("cyclic source: empty pattern");
  const int n = static_cast<int>(pattern.size());
  std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i) rows[i][(i + 1) % n] = 1.0;
  // Start in the last state so the first step emits pattern[0].
  return MarkovSource(rows, pattern, n - 1);
}

inline int step_markov(MarkovSource& source, SplitMix& rng) {
  return source.step(rng);
}

}  // namespace streamsim
