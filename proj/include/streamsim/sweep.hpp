#pragma once

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "streamsim/config.hpp"
#include "streamsim/simulator.hpp"

namespace streamsim {

/// Boolean achievement matrix over the (X, Y) requirement grid, plus the
/// per-cell shortfalls and staircase diagnostics.
struct RegionResult {
  PolicyKind policy = PolicyKind::kEpdf;
  Ratio step = Ratio(1, 20);
  int cells_per_axis = 21;  // 1/step + 1
  std::vector<std::uint8_t> achieved_cells;        // [yi * cells + xi]
  std::vector<std::vector<double>> shortfalls;     // [cell][client], q - thr clamped at 0
  int staircase_violations = 0;

  bool at(int xi, int yi) const {
    return achieved_cells[static_cast<std::size_t>(yi) * cells_per_axis + xi] != 0;
  }

  /// Largest achieved Y index per X column; -1 when the column is empty.
  std::vector<int> frontier() const {
    std::vector<int> out(cells_per_axis, -1);
    for (int xi = 0; xi < cells_per_axis; ++xi) {
      for (int yi = cells_per_axis - 1; yi >= 0; --yi) {
        if (at(xi, yi)) {
          out[xi] = yi;
          break;
        }
      }
    }
    return out;
  }
};

namespace detail {

inline std::uint64_t point_seed(std::uint64_t base, int xi, int yi) {
  // Policy deliberately not mixed in: all policies share one channel
  // realization per grid point.
  return base ^ derive_stream(base, 0x67726964,
                              (static_cast<std::uint64_t>(xi) << 32) |
                                  static_cast<std::uint64_t>(yi));
}

inline int sweep_workers(int cells) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STREAMSIM_WORKERS")) {
    workers = std::atoi(env);
  }
  return std::max(1, std::min(workers, cells));
}

}  // namespace detail

/// Runs the simulator at every (X, Y) grid point with q_n = X r_n for group A
/// and Y r_n for group B, marking each point achieved under the 95% rule.
/// Grid points get independent derived seeds; results are deterministic
/// regardless of worker count.
inline RegionResult sweep_region(const ExperimentConfig& experiment,
                                 PolicyKind policy, int workers = 0) {
  if (!(experiment.grid_step.positive()) || experiment.grid_step > Ratio(1)) {
    throw ConfigError("grid step must lie in (0, 1]");
  }
  Ratio cells_exact = Ratio(1) / experiment.grid_step;
  if (!cells_exact.is_integer()) {
    throw ConfigError("grid step must divide 1 evenly");
  }
  if (experiment.group_members('A').empty() ||
      experiment.group_members('B').empty()) {
    throw ConfigError("region sweeps need both client groups nonempty");
  }

  RegionResult region;
  region.policy = policy;
  region.step = experiment.grid_step;
  region.cells_per_axis = static_cast<int>(cells_exact.num()) + 1;
  const int cells = region.cells_per_axis * region.cells_per_axis;
  region.achieved_cells.assign(cells, 0);
  region.shortfalls.assign(cells, {});
  if (workers <= 0) workers = detail::sweep_workers(cells);

  std::atomic<int> cursor{0};
  auto worker = [&] {
    for (int cell = cursor.fetch_add(1); cell < cells; cell = cursor.fetch_add(1)) {
      const int xi = cell % region.cells_per_axis;
      const int yi = cell / region.cells_per_axis;
      const Ratio x = Ratio(xi) * experiment.grid_step;
      const Ratio y = Ratio(yi) * experiment.grid_step;
      std::vector<Ratio> q;
      for (int n = 0; n < experiment.num_clients(); ++n) {
        const Ratio fraction = experiment.clients[n].group == 'A' ? x : y;
        q.push_back(fraction * experiment.mean_rate_of(n));
      }
      SimConfig cfg = experiment.build_sim(policy, q);
      cfg.seed = detail::point_seed(experiment.seed, xi, yi);
      RunMetrics m = run(cfg);
      region.achieved_cells[cell] = achieved(m, cfg.clients) ? 1 : 0;
      std::vector<double> shortfall;
      for (int n = 0; n < experiment.num_clients(); ++n) {
        double gap = q[n].to_double() - m.throughput(n).to_double();
        shortfall.push_back(std::max(gap, 0.0));
      }
      region.shortfalls[cell] = std::move(shortfall);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Requirements only weaken toward the origin, so achievement should be a
  // staircase; Monte Carlo boundary noise shows up here as a diagnostic.
  for (int yi = 0; yi < region.cells_per_axis; ++yi) {
    for (int xi = 0; xi < region.cells_per_axis; ++xi) {
      if (!region.at(xi, yi)) continue;
      if ((xi > 0 && !region.at(xi - 1, yi)) || (yi > 0 && !region.at(xi, yi - 1))) {
        ++region.staircase_violations;
      }
    }
  }
  return region;
}

inline void write_region_csv(std::ostream& os, const RegionResult& region,
                             int num_clients) {
  os << "X,Y,achieved";
  for (int n = 1; n <= num_clients; ++n) os << ",shortfall_" << n;
  os << "\n";
  char buf[64];
  auto fmt = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return std::string(buf);
  };
  for (int yi = 0; yi < region.cells_per_axis; ++yi) {
    for (int xi = 0; xi < region.cells_per_axis; ++xi) {
      const std::size_t cell =
          static_cast<std::size_t>(yi) * region.cells_per_axis + xi;
      os << fmt((Ratio(xi) * region.step).to_double()) << ","
         << fmt((Ratio(yi) * region.step).to_double()) << ","
         << (region.achieved_cells[cell] ? 1 : 0);
      for (double s : region.shortfalls[cell]) os << "," << fmt(s);
      os << "\n";
    }
  }
  os << "# policy=" << policy_name(region.policy) << "\n";
  os << "# staircase_violations=" << region.staircase_violations << "\n";
  os << "# frontier_y_index_per_x:";
  for (int yi : region.frontier()) os << " " << yi;
  os << "\n";
}

/// How far region B's boundary sits below region A's, in grid cells:
/// 0 = A is contained in B, 1 = off by at most one diagonal cell, ...
inline int containment_shift(const RegionResult& a, const RegionResult& b) {
  int shift = 0;
  for (int yi = 0; yi < a.cells_per_axis; ++yi) {
    for (int xi = 0; xi < a.cells_per_axis; ++xi) {
      if (!a.at(xi, yi)) continue;
      int k = 0;
      while (!b.at(std::max(xi - k, 0), std::max(yi - k, 0))) {
        ++k;
        if (xi - k < 0 && yi - k < 0) break;  // b is empty along the diagonal
      }
      shift = std::max(shift, k);
    }
  }
  return shift;
}

struct DelayBoundStudy {
  std::vector<int> delay_bounds;
  std::vector<RegionResult> regions;
  /// max containment shift of region(tau_i) inside region(tau_{i+1});
  /// 0 means perfectly nested, 1 within one grid cell of noise.
  std::vector<int> nesting_shifts;
};

/// Re-runs the sweep with every client's delay bound set to each tau, on the
/// same seeds, and reports how cleanly the regions nest as tau grows.
inline DelayBoundStudy compare_delay_bounds(const ExperimentConfig& experiment,
                                            std::span<const int> delay_bounds,
                                            PolicyKind policy, int workers = 0) {
  if (delay_bounds.empty()) throw ConfigError("delay-bound study needs taus");
  DelayBoundStudy study;
  for (int tau : delay_bounds) {
    study.delay_bounds.push_back(tau);
    study.regions.push_back(
        sweep_region(experiment.with_delay_bound(tau), policy, workers));
  }
  for (std::size_t i = 0; i + 1 < study.regions.size(); ++i) {
    study.nesting_shifts.push_back(
        containment_shift(study.regions[i], study.regions[i + 1]));
  }
  return study;
}

}  // namespace streamsim
