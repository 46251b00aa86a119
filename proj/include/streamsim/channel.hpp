#pragma once

#include <cstdint>
#include <vector>

#include "streamsim/core.hpp"
#include "streamsim/rng.hpp"

namespace streamsim {

/// Bernoulli per-client link with immediate feedback. Outcomes are a pure
/// function of (seed, client, slot): two runs with the same seed see the
/// same channel no matter what the scheduler does in between.
class BernoulliChannel {
 public:
  BernoulliChannel(std::vector<double> reliability, std::uint64_t seed)
      : p_(std::move(reliability)), seed_(seed) {
    for (double p : p_) {
      if (!(p > 0.0) || p > 1.0) {
        throw ConfigError("channel reliability must lie in (0, 1]");
      }
    }
  }

  int num_clients() const { return static_cast<int>(p_.size()); }
  double reliability(int client) const { return p_[client]; }

  bool attempt(int client, SlotIndex slot) const {
    return keyed_u01(seed_, static_cast<std::uint64_t>(client),
                     static_cast<std::uint64_t>(slot)) < p_[client];
  }

 private:
  std::vector<double> p_;
  std::uint64_t seed_;
};

/// EWMA channel-reliability estimate:
///   p_hat <- (1 - alpha) * p_hat + alpha * 1(success).
/// Starts optimistic (1.0 by default) so every client gets probed.
class ReliabilityEstimator {
 public:
  ReliabilityEstimator(int num_clients, double alpha = 0.01,
                       double initial = 1.0)
      : phat_(num_clients, initial), alpha_(alpha) {
    if (!(alpha > 0.0) || alpha >= 1.0) {
      throw ConfigError("estimator smoothing weight must lie in (0, 1)");
    }
    if (initial < 0.0 || initial > 1.0) {
      throw ConfigError("estimator initial value must lie in [0, 1]");
    }
  }

  void update(int client, bool success) {
    phat_[client] = (1.0 - alpha_) * phat_[client] + (success ? alpha_ : 0.0);
  }

  double estimate(int client) const { return phat_[client]; }
  const std::vector<double>& estimates() const { return phat_; }
  double alpha() const { return alpha_; }

 private:
  std::vector<double> phat_;
  double alpha_;
};

}  // namespace streamsim
