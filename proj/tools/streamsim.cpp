// streamsim: slotted-time simulator and capacity analyzer for an access
// point serving deadline-constrained live video streams.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "streamsim/capacity.hpp"
#include "streamsim/capacity_lp.hpp"
#include "streamsim/config.hpp"
#include "streamsim/report.hpp"
#include "streamsim/simulator.hpp"
#include "streamsim/sweep.hpp"

namespace {

using namespace streamsim;

struct CommonFlags {
  std::string config_path;
  std::optional<std::string> policy;
  std::optional<int> m_frame;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> horizon;
  std::optional<std::string> grid_step;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path,
                  "experiment config file (key=value)")
      ->required();
  cmd->add_option("--policy", flags.policy, "edf|ldf|epdf|cost-index");
  cmd->add_option("--m-frame", flags.m_frame, "debt frame length M in slots");
  cmd->add_option("--seed", flags.seed, "base RNG seed");
  cmd->add_option("--horizon-slots", flags.horizon, "simulation length in slots");
  cmd->add_option("--grid-step", flags.grid_step, "sweep grid step, e.g. 0.05");
  cmd->add_option("--out", flags.out, "output file (default: stdout)");
}

ExperimentConfig load_experiment(const CommonFlags& flags) {
  ExperimentConfig experiment = ExperimentConfig::load(flags.config_path);
  if (flags.policy) experiment.policy = parse_policy(*flags.policy);
  if (flags.m_frame) {
    if (*flags.m_frame < 1) throw ConfigError("--m-frame must be >= 1");
    experiment.m_frame = *flags.m_frame;
  }
  if (flags.seed) experiment.seed = *flags.seed;
  if (flags.horizon) experiment.horizon_slots = *flags.horizon;
  if (flags.grid_step) experiment.grid_step = Ratio::parse(*flags.grid_step);
  return experiment;
}

void emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + out_path);
  out << text;
}

std::string json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

int cmd_simulate(const CommonFlags& flags) {
  ExperimentConfig experiment = load_experiment(flags);
  SimConfig cfg = experiment.build_sim();
  RunMetrics metrics = run(cfg);
  emit(flags.out, json_text(metrics_to_json(metrics, cfg.clients)));
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::vector<int>& delay_bounds) {
  ExperimentConfig experiment = load_experiment(flags);
  if (delay_bounds.empty()) {
    RegionResult region = sweep_region(experiment, experiment.policy);
    std::ostringstream os;
    write_region_csv(os, region, experiment.num_clients());
    emit(flags.out, os.str());
    return 0;
  }
  DelayBoundStudy study =
      compare_delay_bounds(experiment, delay_bounds, experiment.policy);
  // One CSV per tau derived from the requested output name, plus a nesting
  // report on stdout.
  std::string stem = flags.out.empty() ? "region" : flags.out;
  if (auto dot = stem.rfind(".csv"); dot != std::string::npos) stem.erase(dot);
  nlohmann::json report;
  report["delay_bounds"] = study.delay_bounds;
  report["nesting_shifts"] = study.nesting_shifts;
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < study.regions.size(); ++i) {
    std::string path =
        stem + "_tau" + std::to_string(study.delay_bounds[i]) + ".csv";
    std::ostringstream os;
    write_region_csv(os, study.regions[i], experiment.num_clients());
    emit(path, os.str());
    files.push_back(path);
  }
  report["region_files"] = std::move(files);
  std::cout << json_text(report);
  return 0;
}

int cmd_capacity_homogeneous(int clients, int interval_slots,
                             int lifetime_intervals, const std::string& p,
                             const std::string& out_path) {
  HomogeneousSpec spec;
  spec.clients = clients;
  spec.interval_slots = interval_slots;
  spec.lifetime_intervals = lifetime_intervals;
  spec.reliability = Ratio::parse(p);
  spec.validate();
  emit(out_path, json_text(homogeneous_report(spec)));
  return 0;
}

int cmd_capacity_lp(const CommonFlags& flags, const std::string& q_csv,
                    const std::string& direction_csv, std::int64_t state_cap) {
  ExperimentConfig experiment = load_experiment(flags);
  LpInstance instance = experiment.build_lp_instance();
  StateSpace space = build_state_space(instance, state_cap);
  nlohmann::json report;
  if (!direction_csv.empty()) {
    auto direction = detail::parse_csv_doubles(direction_csv, "--direction");
    if (static_cast<int>(direction.size()) != experiment.num_clients()) {
      throw ConfigError("--direction needs one component per client");
    }
    double lambda = max_uniform_scale(space, direction);
    std::vector<double> q(direction.size());
    for (std::size_t n = 0; n < direction.size(); ++n) {
      q[n] = lambda * direction[n];
    }
    report = feasibility_report(space, q, lp_feasible(space, q));
    report["direction"] = direction;
    report["lambda_star"] = lambda;
  } else {
    std::vector<double> q;
    if (!q_csv.empty()) {
      q = detail::parse_csv_doubles(q_csv, "--q");
      if (static_cast<int>(q.size()) != experiment.num_clients()) {
        throw ConfigError("--q needs one component per client");
      }
    } else {
      for (const Ratio& r : experiment.requirements()) q.push_back(r.to_double());
    }
    report = feasibility_report(space, q, lp_feasible(space, q));
  }
  emit(flags.out, json_text(report));
  return 0;
}

int cmd_trace_stats(const std::string& trace_path, double slot_width, int mtu,
                    const std::string& out_path) {
  TraceData data = load_trace_file(trace_path);
  nlohmann::json report;
  report["path"] = trace_path;
  if (const auto* frames = std::get_if<FrameTrace>(&data)) {
    ArrivalSchedule schedule = ArrivalSchedule::from_trace(*frames, mtu, slot_width);
    std::int64_t bytes = 0;
    for (auto s : frames->frame_sizes) bytes += s;
    report["format"] = "fps";
    report["fps"] = frames->fps;
    report["frames"] = frames->frame_sizes.size();
    report["total_bytes"] = bytes;
    report["duration_slots"] = frames->duration_slots(slot_width);
    report["packets_per_cycle"] = schedule.total_packets();
    report["mean_rate_packets_per_slot"] = mean_rate(schedule).to_double();
    report["mean_rate_exact"] = mean_rate(schedule).str();
  } else {
    ArrivalSchedule schedule =
        ArrivalSchedule::from_trace(std::get<SlotCountTrace>(data));
    report["format"] = "pps";
    report["duration_slots"] = schedule.cycle_slots();
    report["packets_per_cycle"] = schedule.total_packets();
    report["mean_rate_packets_per_slot"] = mean_rate(schedule).to_double();
    report["mean_rate_exact"] = mean_rate(schedule).str();
  }
  emit(out_path, json_text(report));
  return 0;
}

int cmd_per_second(const CommonFlags& flags, int client) {
  ExperimentConfig experiment = load_experiment(flags);
  if (client < 1 || client > experiment.num_clients()) {
    throw ConfigError("--client must name a configured client (1-based)");
  }
  SimConfig cfg = experiment.build_sim();
  RunMetrics metrics = run(cfg);
  auto series = per_second_series(metrics, client - 1);
  std::ostringstream os;
  os << "second,count\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    os << i << "," << series[i] << "\n";
  }
  emit(flags.out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "streamsim: deadline-constrained wireless video scheduling simulator "
      "and capacity analyzer"};
  app.require_subcommand(1);

  CommonFlags simulate_flags, sweep_flags, lp_flags, per_second_flags;
  std::vector<int> delay_bounds;
  std::string q_csv, direction_csv;
  std::int64_t state_cap = 100'000;
  int hom_clients = 1, hom_t = 1, hom_k = 1;
  std::string hom_p = "1", hom_out;
  std::string trace_path, trace_out;
  double trace_slot_width = kDefaultSlotWidthSeconds;
  int trace_mtu = kDefaultMtuBytes;
  int client_index = 1;

  auto* simulate =
      app.add_subcommand("simulate", "run one simulation, emit JSON metrics");
  add_common(simulate, simulate_flags);

  auto* sweep = app.add_subcommand(
      "sweep", "achieved-region sweep over the (X,Y) grid, emit CSV");
  add_common(sweep, sweep_flags);
  sweep->add_option("--delay-bounds", delay_bounds,
                    "compare regions across these shared delay bounds (slots)");

  auto* hom = app.add_subcommand("capacity-homogeneous",
                                 "exact homogeneous-case capacity (zeta chain)");
  hom->add_option("--clients", hom_clients, "N")->required();
  hom->add_option("--interval-slots", hom_t, "T")->required();
  hom->add_option("--lifetime-intervals", hom_k, "K (tau = K*T)")->required();
  hom->add_option("--reliability", hom_p, "p, decimal or fraction")->required();
  hom->add_option("--out", hom_out, "output file (default: stdout)");

  auto* lp =
      app.add_subcommand("capacity-lp", "general-case LP feasibility oracle");
  add_common(lp, lp_flags);
  lp->add_option("--q", q_csv, "throughput vector to test, comma separated");
  lp->add_option("--direction", direction_csv,
                 "ray to scale: reports the largest feasible lambda");
  lp->add_option("--state-cap", state_cap, "state-space enumeration cap");

  auto* stats = app.add_subcommand("trace-stats", "inspect a trace file");
  stats->add_option("--trace", trace_path, "trace file path")->required();
  stats->add_option("--slot-width", trace_slot_width, "slot width in seconds");
  stats->add_option("--mtu", trace_mtu, "packetization MTU in bytes");
  stats->add_option("--out", trace_out, "output file (default: stdout)");

  auto* per_sec = app.add_subcommand(
      "per-second", "per-second delivered counts for one client, CSV");
  add_common(per_sec, per_second_flags);
  per_sec->add_option("--client", client_index, "client index (1-based)")
      ->required();

  try {
    app.parse(argc, argv);
    if (*simulate) return cmd_simulate(simulate_flags);
    if (*sweep) return cmd_sweep(sweep_flags, delay_bounds);
    if (*hom) {
      return cmd_capacity_homogeneous(hom_clients, hom_t, hom_k, hom_p, hom_out);
    }
    if (*lp) return cmd_capacity_lp(lp_flags, q_csv, direction_csv, state_cap);
    if (*stats) {
      return cmd_trace_stats(trace_path, trace_slot_width, trace_mtu, trace_out);
    }
    if (*per_sec) return cmd_per_second(per_second_flags, client_index);
    return 1;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;  // bad flags are config errors
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
