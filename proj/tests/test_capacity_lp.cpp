#include "streamsim/capacity_lp.hpp"

#include <catch_amalgamated.hpp>
#include <cmath>

#include "streamsim/capacity.hpp"
#include "streamsim/simulator.hpp"

using namespace streamsim;

namespace {

LpInstance::Client client_of(Ratio p, int tau) { return {p, tau}; }

// N=2, tau=(1,1), p=(1,1), one packet per slot each: the single-transmitter
// constraint makes q feasible iff q1 + q2 <= 1.
LpInstance two_client_unit_instance() {
  LpInstance inst;
  inst.clients = {client_of(Ratio(1), 1), client_of(Ratio(1), 1)};
  inst.chains = {cyclic_source({1}), cyclic_source({1})};
  return inst;
}

}  // namespace

TEST_CASE("state space hand enumerations") {
  SECTION("N=1, tau=1, one packet per slot: 2 states") {
    LpInstance inst;
    inst.clients = {client_of(Ratio(1), 1)};
    inst.chains = {cyclic_source({1})};
    StateSpace space = build_state_space(inst);
    CHECK(space.num_states() == 2);  // empty start, then steady psi=1
  }
  SECTION("N=2, tau=(1,1): 4 reachable states bound, 2 reachable") {
    StateSpace space = build_state_space(two_client_unit_instance());
    // Only the empty start and (1,1) are reachable: arrivals are synchronized.
    CHECK(space.num_states() == 2);
    CHECK(space.bound() == Catch::Approx(4.0));
  }
  SECTION("kernel rows are stochastic") {
    LpInstance inst;
    inst.clients = {client_of(Ratio(1, 2), 2), client_of(Ratio(3, 4), 1)};
    inst.chains = {MarkovSource({{0.5, 0.5}, {0.25, 0.75}}, {0, 1}, 0),
                   cyclic_source({1, 0})};
    StateSpace space = build_state_space(inst);
    CHECK(space.num_states() > 2);
    for (std::size_t s = 0; s < space.num_states(); ++s) {
      for (std::size_t a = 0; a < space.kernel()[s].size(); ++a) {
        double total = 0.0;
        for (const auto& [next, p] : space.kernel()[s][a]) {
          CHECK(p > 0.0);
          total += p;
        }
        CHECK(total == Catch::Approx(1.0).margin(1e-12));
      }
    }
  }
  SECTION("cap refusal reports the computed size") {
    LpInstance inst;
    inst.clients = {client_of(Ratio(1, 2), 20)};
    inst.chains = {MarkovSource({{0.5, 0.5}, {0.5, 0.5}}, {0, 3}, 0)};
    CHECK_THROWS_AS(build_state_space(inst, 1000), StateCapExceeded);
    try {
      build_state_space(inst, 1000);
    } catch (const StateCapExceeded& e) {
      CHECK(e.computed_size == Catch::Approx(std::pow(4.0, 20) * 2));
    }
  }
}

TEST_CASE("lp_feasible on the saturated single client") {
  LpInstance inst;
  inst.clients = {client_of(Ratio(1), 1)};
  inst.chains = {cyclic_source({1})};
  StateSpace space = build_state_space(inst);

  std::vector<double> q = {1.0};
  auto res = lp_feasible(space, q);
  CHECK(res.feasible);
  CHECK(res.shortfall <= 1e-9);

  q = {1.01};
  res = lp_feasible(space, q);
  CHECK_FALSE(res.feasible);
  CHECK(res.shortfall == Catch::Approx(0.01).margin(1e-8));
}

TEST_CASE("lp_feasible matches the hand condition q1 + q2 <= 1") {
  StateSpace space = build_state_space(two_client_unit_instance());
  for (int i = 0; i <= 20; ++i) {
    for (int j = 0; j <= 20; ++j) {
      std::vector<double> q = {i * 0.05, j * 0.05};
      bool by_hand = q[0] + q[1] <= 1.0 + 1e-9;
      CAPTURE(q[0], q[1]);
      CHECK(lp_feasible(space, q).feasible == by_hand);
    }
  }
}

TEST_CASE("lp_feasible is monotone in q") {
  StateSpace space = build_state_space(two_client_unit_instance());
  SplitMix rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> q = {rng.u01(), rng.u01()};
    if (!lp_feasible(space, q).feasible) continue;
    std::vector<double> smaller = {q[0] * rng.u01(), q[1] * rng.u01()};
    CHECK(lp_feasible(space, smaller).feasible);
  }
}

TEST_CASE("extracted stationary policy attains its target") {
  StateSpace space = build_state_space(two_client_unit_instance());
  std::vector<double> q = {0.45, 0.45};
  auto res = lp_feasible(space, q);
  REQUIRE(res.feasible);
  REQUIRE(res.policy.has_value());
  auto sim = simulate_stationary_policy(space, *res.policy, 1'000'000, 77);
  CHECK(sim.throughput[0] >= q[0] - 0.01);
  CHECK(sim.throughput[1] >= q[1] - 0.01);
}

TEST_CASE("max_uniform_scale recovers hand values") {
  StateSpace space = build_state_space(two_client_unit_instance());
  SECTION("direction (1,1): lambda* = 1/2") {
    std::vector<double> d = {1.0, 1.0};
    CHECK(max_uniform_scale(space, d) == Catch::Approx(0.5).margin(2e-6));
  }
  SECTION("direction (1,0): lambda* = 1") {
    std::vector<double> d = {1.0, 0.0};
    CHECK(max_uniform_scale(space, d) == Catch::Approx(1.0).margin(2e-6));
  }
}

TEST_CASE("general machinery agrees with the homogeneous oracle") {
  // Homogeneous N=2, T=2, K=1, p=1/2 expressed as synchronized cyclic chains.
  LpInstance inst;
  inst.clients = {client_of(Ratio(1, 2), 2), client_of(Ratio(1, 2), 2)};
  inst.chains = {cyclic_source({1, 0}), cyclic_source({1, 0})};
  StateSpace space = build_state_space(inst);

  HomogeneousSpec spec;
  spec.clients = 2;
  spec.interval_slots = 2;
  spec.lifetime_intervals = 1;
  spec.reliability = Ratio(1, 2);
  double qmax = homogeneous_qmax(spec);

  std::vector<double> direction = {1.0, 1.0};
  double lambda = max_uniform_scale(space, direction);
  CHECK(lambda == Catch::Approx(qmax).margin(2e-6));
}

TEST_CASE("epdf achieves an interior point of the LP region") {
  // q strictly inside the certified region: EPDF's long-run throughput stays
  // within 0.02 of the requirement at a 1e6-slot horizon.
  StateSpace space = build_state_space(two_client_unit_instance());
  std::vector<double> q = {0.45, 0.45};
  REQUIRE(lp_feasible(space, q).feasible);

  SimConfig cfg;
  for (int n = 0; n < 2; ++n) {
    ClientConfig c;
    c.index = n;
    c.reliability = Ratio(1);
    c.delay_bound = 1;
    c.required_throughput = Ratio(9, 20);
    c.mean_rate = Ratio(1);
    cfg.clients.push_back(c);
    SlotCountTrace every;
    every.packets_per_slot = {1};
    cfg.sources.emplace_back(ArrivalSchedule::from_trace(every));
  }
  cfg.policy.kind = PolicyKind::kEpdf;
  cfg.policy.m_frame = 20;  // M w_n = 9, integral
  cfg.horizon_slots = 1'000'000;
  cfg.seed = 99;
  RunMetrics m = run(cfg);
  for (int n = 0; n < 2; ++n) {
    CHECK(m.throughput(n).to_double() >= 0.45 - 0.02);
  }
}
