#include "streamsim/channel.hpp"

#include <catch_amalgamated.hpp>
#include <cmath>

using namespace streamsim;

TEST_CASE("perfect links always succeed") {
  BernoulliChannel ch({1.0}, 42);
  for (SlotIndex t = 1; t <= 1000; ++t) CHECK(ch.attempt(0, t));
}

TEST_CASE("zero reliability is rejected at construction") {
  CHECK_THROWS_AS(BernoulliChannel({0.0}, 1), ConfigError);
  CHECK_THROWS_AS(BernoulliChannel({1.1}, 1), ConfigError);
}

TEST_CASE("empirical success rate matches p") {
  // Binomial bound: at p=0.5 and 1e6 trials, 0.002 is 4 standard deviations.
  BernoulliChannel ch({0.5}, 20260810);
  std::int64_t successes = 0;
  const std::int64_t trials = 1'000'000;
  for (SlotIndex t = 1; t <= trials; ++t) successes += ch.attempt(0, t);
  double rate = static_cast<double>(successes) / static_cast<double>(trials);
  CHECK(std::abs(rate - 0.5) < 0.002);
}

TEST_CASE("draws are a pure function of (seed, client, slot)") {
  BernoulliChannel a({0.3, 0.7}, 99);
  BernoulliChannel b({0.3, 0.7}, 99);
  for (SlotIndex t = 1; t <= 200; ++t) {
    CHECK(a.attempt(0, t) == b.attempt(0, t));
    CHECK(a.attempt(1, t) == b.attempt(1, t));
  }
  // Replaying out of order gives the same outcomes.
  CHECK(a.attempt(0, 17) == b.attempt(0, 17));
}

TEST_CASE("ewma update arithmetic") {
  ReliabilityEstimator est(1, 0.1, 0.8);
  est.update(0, true);
  CHECK(est.estimate(0) == Catch::Approx(0.82));
  ReliabilityEstimator est2(1, 0.1, 0.8);
  est2.update(0, false);
  CHECK(est2.estimate(0) == Catch::Approx(0.72));
}

TEST_CASE("constant successes converge geometrically") {
  ReliabilityEstimator est(1, 0.1, 0.0);
  double gap = 1.0;
  for (int k = 1; k <= 50; ++k) {
    est.update(0, true);
    gap *= 0.9;  // |1 - p_hat_k| = (1 - alpha)^k |1 - p_hat_0|
    CHECK(std::abs(1.0 - est.estimate(0)) == Catch::Approx(gap).margin(1e-12));
  }
}

TEST_CASE("estimate is a convex combination and stays in [0,1]") {
  ReliabilityEstimator est(1, 0.25, 1.0);
  SplitMix rng(3);
  for (int i = 0; i < 10000; ++i) {
    est.update(0, rng.u01() < 0.37);
    CHECK(est.estimate(0) >= 0.0);
    CHECK(est.estimate(0) <= 1.0);
  }
}

TEST_CASE("long-run estimate converges to the true reliability") {
  const double p = 0.62;
  BernoulliChannel ch({p}, 7);
  ReliabilityEstimator est(1, 0.01, 1.0);
  double mean = 0.0;
  const int attempts = 100'000;
  for (SlotIndex t = 1; t <= attempts; ++t) {
    est.update(0, ch.attempt(0, t));
    mean += est.estimate(0);
  }
  mean /= attempts;
  CHECK(std::abs(mean - p) < 0.02);
}

TEST_CASE("estimator parameter validation") {
  CHECK_THROWS_AS(ReliabilityEstimator(1, 0.0), ConfigError);
  CHECK_THROWS_AS(ReliabilityEstimator(1, 1.0), ConfigError);
  CHECK_THROWS_AS(ReliabilityEstimator(1, 0.1, 1.5), ConfigError);
}
