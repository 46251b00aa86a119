#include "streamsim/traffic.hpp"

#include <catch_amalgamated.hpp>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace streamsim;

namespace {

FrameTrace trace_of(double fps, std::vector<std::int64_t> sizes) {
  FrameTrace t;
  t.fps = fps;
  t.frame_sizes = std::move(sizes);
  return t;
}

}  // namespace

TEST_CASE("parse_trace reads the fps format") {
  std::istringstream in("fps=25\n800\n1600\n");
  FrameTrace t = parse_trace(in);
  CHECK(t.fps == 25.0);
  CHECK(t.frame_sizes == std::vector<std::int64_t>{800, 1600});
}

TEST_CASE("parse_trace rejects malformed input") {
  SECTION("missing header") {
    std::istringstream in("800\n1600\n");
    CHECK_THROWS_AS(parse_trace(in), TraceFormatError);
  }
  SECTION("negative size") {
    std::istringstream in("fps=25\n-3\n");
    CHECK_THROWS_AS(parse_trace(in), TraceFormatError);
  }
  SECTION("non-numeric size") {
    std::istringstream in("fps=25\nbig\n");
    CHECK_THROWS_AS(parse_trace(in), TraceFormatError);
  }
  SECTION("empty trace") {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_trace(in), TraceFormatError);
  }
  SECTION("header but no frames") {
    std::istringstream in("fps=25\n");
    CHECK_THROWS_AS(parse_trace(in), TraceFormatError);
  }
}

TEST_CASE("parse_trace_file dispatches on header") {
  std::istringstream pps("pps\n0\n0\n1\n0\n");
  TraceData d = parse_trace_file(pps);
  auto* counts = std::get_if<SlotCountTrace>(&d);
  REQUIRE(counts != nullptr);
  CHECK(counts->packets_per_slot == std::vector<int>{0, 0, 1, 0});

  std::istringstream bad("bps\n1\n");
  CHECK_THROWS_AS(parse_trace_file(bad), TraceFormatError);
}

TEST_CASE("packetize splits oversize frames") {
  // 3000 B at mtu 1500 -> 2 packets; exactly 1500 B -> 1 packet.
  auto packets = packetize(trace_of(25.0, {3000}), 1500, 750e-6);
  REQUIRE(packets.size() == 2);
  CHECK(packets[0].size_bytes == 1500);
  CHECK(packets[1].size_bytes == 1500);

  packets = packetize(trace_of(25.0, {1500}), 1500, 750e-6);
  REQUIRE(packets.size() == 1);
  CHECK(packets[0].size_bytes == 1500);

  packets = packetize(trace_of(25.0, {3100}), 1500, 750e-6);
  REQUIRE(packets.size() == 3);
  CHECK(packets[2].size_bytes == 100);
}

TEST_CASE("packetize merges small frames greedily") {
  // 700, 600, 900 at mtu 1500: frames 1-2 merge to 1300 B (adding 900 would
  // exceed the mtu), the 900 B frame rides alone.
  FrameTrace t = trace_of(25.0, {700, 600, 900});
  auto packets = packetize(t, 1500, 750e-6);
  REQUIRE(packets.size() == 2);
  CHECK(packets[0].size_bytes == 1300);
  CHECK(packets[1].size_bytes == 900);
  // Merged packet inherits the earliest constituent frame's generation slot.
  CHECK(packets[0].gen_slot == t.slot_of_frame(0, 750e-6));
  CHECK(packets[1].gen_slot == t.slot_of_frame(2, 750e-6));
}

TEST_CASE("packetize conservation and mtu bound") {
  SplitMix rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::int64_t> sizes;
    const int frames = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < frames; ++i) {
      sizes.push_back(static_cast<std::int64_t>(rng.below(4000)));
    }
    FrameTrace t = trace_of(24.0, sizes);
    auto packets = packetize(t, 1500, 750e-6);
    std::int64_t frame_bytes = std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
    std::int64_t packet_bytes = 0;
    for (const auto& p : packets) {
      CHECK(p.size_bytes <= 1500);
      CHECK(p.size_bytes > 0);
      packet_bytes += p.size_bytes;
    }
    CHECK(packet_bytes == frame_bytes);  // merging drops and duplicates nothing
  }
}

TEST_CASE("stagger shifts the playhead cyclically") {
  SlotCountTrace counts;
  counts.packets_per_slot = {2, 0, 1, 0};
  ArrivalSchedule base = ArrivalSchedule::from_trace(counts);

  SECTION("rank 0 is the identity") {
    ArrivalSchedule s = stagger(base, 0, 100.11, 750e-6);
    for (SlotIndex g = 0; g < 8; ++g) {
      CHECK(s.sizes_at(g).size() == base.sizes_at(g).size());
    }
  }
  SECTION("second client shifts by round(100.11s / 750us) = 133480 slots") {
    ArrivalSchedule s = stagger(base, 1, 100.11, 750e-6);
    CHECK(s.shift_slots() == 133480 % base.cycle_slots());
    for (SlotIndex g = 0; g < 8; ++g) {
      CHECK(s.sizes_at(g).size() == base.sizes_at(g + 133480).size());
    }
  }
  SECTION("a full-cycle shift is the identity") {
    ArrivalSchedule s = base.shifted(base.cycle_slots());
    CHECK(s.shift_slots() == 0);
  }
  SECTION("stagger is a bijection on cycle positions") {
    ArrivalSchedule s = stagger(base, 3, 0.00075, 750e-6);  // shift 3 of 4
    std::int64_t total = 0;
    for (SlotIndex g = 0; g < base.cycle_slots(); ++g) {
      total += static_cast<std::int64_t>(s.sizes_at(g).size());
    }
    CHECK(total == base.total_packets());
  }
}

TEST_CASE("mean_rate is exact") {
  SlotCountTrace every_slot;
  every_slot.packets_per_slot = {1};
  CHECK(mean_rate(ArrivalSchedule::from_trace(every_slot)) == Ratio(1));

  SlotCountTrace quarter;
  quarter.packets_per_slot = {1, 0, 0, 0};
  CHECK(mean_rate(ArrivalSchedule::from_trace(quarter)) == Ratio(1, 4));

  // Example 2's client 3: packets at slots of the form 4m+2.
  SlotCountTrace c3;
  c3.packets_per_slot = {0, 0, 1, 0};
  CHECK(mean_rate(ArrivalSchedule::from_trace(c3)) == Ratio(1, 4));
}

TEST_CASE("markov sources validate their structure") {
  CHECK_THROWS_AS(MarkovSource({{0.5, 0.4}, {0.5, 0.5}}, {0, 1}, 0), ConfigError);
  CHECK_THROWS_AS(MarkovSource({{1.0, 0.0}, {0.0, 1.0}}, {0, 1}, 0),
                  ConfigError);  // reducible
  CHECK_THROWS_AS(MarkovSource({{1.0}}, {-1}, 0), ConfigError);
  CHECK_THROWS_AS(MarkovSource({{1.0}}, {1}, 3), ConfigError);
}

TEST_CASE("deterministic chains emit their pattern") {
  MarkovSource single({{1.0}}, {1}, 0);
  SplitMix rng(1);
  for (int i = 0; i < 5; ++i) CHECK(single.step(rng) == 1);

  // Alternating two-state chain, emissions (0, 2): sequence 0,2,0,2,...
  MarkovSource alt = cyclic_source({0, 2});
  for (int i = 0; i < 6; ++i) CHECK(alt.step(rng) == (i % 2 == 0 ? 0 : 2));
}

TEST_CASE("long-run emission mean matches the stationary solve") {
  // Oracle: stationary vector by linear solve, weighted by emissions.
  MarkovSource source({{0.6, 0.4, 0.0}, {0.2, 0.3, 0.5}, {0.4, 0.1, 0.5}},
                      {0, 1, 3}, 0);
  const double stationary_mean = source.stationary_emission_mean();

  SplitMix rng(20260810);
  const std::int64_t steps = 1'000'000;
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t i = 0; i < steps; ++i) {
    double e = source.step(rng);
    sum += e;
    sum_sq += e * e;
  }
  const double empirical = sum / static_cast<double>(steps);
  const double variance = sum_sq / static_cast<double>(steps) - empirical * empirical;
  const double stderr3 = 3.0 * std::sqrt(variance / static_cast<double>(steps));
  CHECK(std::abs(empirical - stationary_mean) <= stderr3);
}

TEST_CASE("emissions stay within the declared bound") {
  MarkovSource source({{0.5, 0.5}, {0.5, 0.5}}, {1, 4}, 0);
  CHECK(source.bound() == 4);
  SplitMix rng(5);
  for (int i = 0; i < 1000; ++i) CHECK(source.step(rng) <= source.bound());
}

TEST_CASE("frame-to-slot mapping and duration") {
  FrameTrace t = trace_of(25.0, std::vector<std::int64_t>(50, 100));
  // 25 fps at 750us slots: 53.33 slots per frame.
  CHECK(t.slot_of_frame(0, 750e-6) == 0);
  CHECK(t.slot_of_frame(1, 750e-6) == 53);
  CHECK(t.duration_slots(750e-6) == 2667);  // ceil(50 / (25 * 0.00075))
}
