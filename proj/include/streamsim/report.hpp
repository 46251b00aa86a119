#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "streamsim/capacity.hpp"
#include "streamsim/capacity_lp.hpp"
#include "streamsim/simulator.hpp"

namespace streamsim {

/// RunMetrics as a JSON object; client indices are 1-based to match the
/// client.<n>.* config keys.
inline nlohmann::json metrics_to_json(const RunMetrics& m,
                                      const std::vector<ClientConfig>& clients) {
  nlohmann::json out;
  out["horizon_slots"] = m.horizon;
  out["slot_width_s"] = m.slot_width_s;
  out["idle_slots"] = m.idle_slots;
  out["achieved_95"] = achieved(m, clients);
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t n = 0; n < clients.size(); ++n) {
    nlohmann::json c;
    c["client"] = n + 1;
    c["reliability"] = clients[n].reliability.to_double();
    c["delay_bound_slots"] = clients[n].delay_bound;
    c["required_throughput"] = clients[n].required_throughput.to_double();
    c["required_throughput_exact"] = clients[n].required_throughput.str();
    c["generated"] = m.generated[n];
    c["delivered"] = m.delivered[n];
    c["expired"] = m.expired[n];
    c["queued_at_end"] = m.queued_at_end[n];
    c["throughput"] = m.throughput(static_cast<int>(n)).to_double();
    c["throughput_exact"] = m.throughput(static_cast<int>(n)).str();
    c["final_debt"] = m.final_debts[n].str();
    arr.push_back(std::move(c));
  }
  out["clients"] = std::move(arr);
  return out;
}

inline nlohmann::json homogeneous_report(const HomogeneousSpec& spec) {
  EdfStationary edf = edf_stationary(spec);
  nlohmann::json out;
  out["clients"] = spec.clients;
  out["interval_slots"] = spec.interval_slots;
  out["lifetime_intervals"] = spec.lifetime_intervals;
  out["reliability"] = spec.p();
  out["zeta_states"] = edf.states.size();
  out["stationary_residual"] = edf.residual;
  out["expected_idle_slots"] = edf.expected_idle;
  out["q_max"] =
      spec.p() * (spec.interval_slots - edf.expected_idle) /
      (static_cast<double>(spec.clients) * static_cast<double>(spec.interval_slots));
  return out;
}

inline nlohmann::json feasibility_report(const StateSpace& space,
                                         const std::vector<double>& q,
                                         const FeasibilityResult& result) {
  nlohmann::json out;
  out["states"] = space.num_states();
  out["state_bound"] = space.bound();
  out["q"] = q;
  out["shortfall"] = result.shortfall;
  out["feasible"] = result.feasible;
  out["achieved"] = result.achieved;
  if (result.policy) {
    nlohmann::json policy = nlohmann::json::array();
    for (std::size_t s = 0; s < space.num_states(); ++s) {
      if (result.policy->action_probs[s].empty()) continue;
      nlohmann::json entry;
      entry["state"] = s;
      nlohmann::json actions = nlohmann::json::array();
      for (std::size_t a = 0; a < space.actions()[s].size(); ++a) {
        double prob = result.policy->action_probs[s][a];
        if (prob <= 1e-12) continue;
        const PsiAction& act = space.actions()[s][a];
        nlohmann::json one;
        one["probability"] = prob;
        if (act.idle) {
          one["action"] = "idle";
        } else {
          one["action"] = "serve";
          one["client"] = act.client + 1;
          one["laxity"] = act.laxity;
        }
        actions.push_back(std::move(one));
      }
      entry["actions"] = std::move(actions);
      policy.push_back(std::move(entry));
    }
    out["stationary_policy"] = std::move(policy);
  }
  return out;
}

}  // namespace streamsim
