#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "streamsim/capacity_lp.hpp"
#include "streamsim/simulator.hpp"

namespace streamsim {

/// Flat key=value configuration text. Lines are `key=value`; '#' starts a
/// comment; keys may repeat only via distinct client.<n>.<field> paths.
class KeyValues {
 public:
  static KeyValues parse(std::istream& in, std::string base_dir = ".") {
    KeyValues kv;
    kv.base_dir_ = std::move(base_dir);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) {
        line.erase(hash);
      }
      line = detail::trimmed(line);
      if (line.empty()) continue;
      auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": expected key=value, got '" + line + "'");
      }
      std::string key = detail::trimmed(line.substr(0, eq));
      std::string value = detail::trimmed(line.substr(eq + 1));
      if (!kv.values_.emplace(key, value).second) {
        throw ConfigError("config line " + std::to_string(lineno) +
                          ": duplicate key '" + key + "'");
      }
    }
    return kv;
  }

  static KeyValues parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse(in, std::filesystem::path(path).parent_path().string());
  }

  const std::string& base_dir() const { return base_dir_; }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::optional<std::string> get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    consumed_.insert(key);
    return it->second;
  }

  std::string require(const std::string& key) const {
    auto v = get(key);
    if (!v) throw ConfigError("missing required config key '" + key + "'");
    return *v;
  }

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    if (!detail::parse_int_line(*v, out)) {
      throw ConfigError("config key '" + key + "': expected an integer");
    }
    return out;
  }

  double get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      double out = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument("trail");
      return out;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': expected a number");
    }
  }

  Ratio get_ratio(const std::string& key, Ratio fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
      return Ratio::parse(*v);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key +
                        "': expected a decimal or fraction");
    }
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1" || *v == "yes") return true;
    if (*v == "false" || *v == "0" || *v == "no") return false;
    throw ConfigError("config key '" + key + "': expected true or false");
  }

  /// Keys present in the file but never consumed: almost always typos.
  std::vector<std::string> unconsumed() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) out.push_back(key);
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
  std::string base_dir_ = ".";
};

namespace detail {

inline std::vector<double> parse_csv_doubles(const std::string& text,
                                             const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(detail::trimmed(item), &used));
    } catch (const std::exception&) {
      throw ConfigError(what + ": bad number '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(what + ": empty list");
  return out;
}

inline std::vector<int> parse_csv_ints(const std::string& text,
                                       const std::string& what) {
  std::vector<int> out;
  for (double v : parse_csv_doubles(text, what)) {
    if (v != static_cast<int>(v)) throw ConfigError(what + ": expected integers");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

}  // namespace detail

inline PolicyKind parse_policy(const std::string& name) {
  if (name == "edf") return PolicyKind::kEdf;
  if (name == "ldf") return PolicyKind::kLdf;
  if (name == "epdf") return PolicyKind::kEpdf;
  if (name == "cost-index" || name == "cost_index") return PolicyKind::kCostIndex;
  throw ConfigError("unknown policy '" + name +
                    "' (expected edf, ldf, epdf or cost-index)");
}

/// One client's declaration: link reliability, delay bound, sweep group,
/// optional explicit requirement, and exactly one traffic source.
struct ClientSpec {
  Ratio reliability = 1;
  int delay_bound = 1;
  char group = 'A';
  std::optional<Ratio> required_throughput;
  std::optional<std::string> trace_path;   // resolved against the config dir
  std::optional<std::vector<int>> pattern; // cyclic packets-per-slot
  std::optional<MarkovSource> chain;
};

/// A parsed experiment file plus derived traffic sources and exact mean
/// rates; the factory for SimConfig runs, sweeps and LP instances.
class ExperimentConfig {
 public:
  double slot_width_s = kDefaultSlotWidthSeconds;
  std::int64_t horizon_slots = 133'333;  // ~100 s of 750 us slots
  std::uint64_t seed = 1;
  PolicyKind policy = PolicyKind::kEpdf;
  TieRule ties = TieRule::kLowestIndex;
  std::optional<int> m_frame;
  Ratio grid_step = Ratio(1, 20);
  double stagger_offset_s = 0.0;
  EstimatorSettings estimator;
  int mtu = kDefaultMtuBytes;
  std::optional<Ratio> group_x, group_y;
  std::vector<ClientSpec> clients;

  static ExperimentConfig load(const std::string& path) {
    KeyValues kv = KeyValues::parse_file(path);
    return from_key_values(kv);
  }

  static ExperimentConfig parse(std::istream& in, std::string base_dir = ".") {
    KeyValues kv = KeyValues::parse(in, std::move(base_dir));
    return from_key_values(kv);
  }

  int num_clients() const { return static_cast<int>(clients.size()); }

  /// Exact long-run arrival rate of client n (quantized for markov chains).
  Ratio mean_rate_of(int n) const { return rates_[n]; }

  const TrafficSource& source_of(int n) const { return sources_[n]; }

  /// Per-client requirements: explicit q wins, then X/Y by group, else 0.
  std::vector<Ratio> requirements() const {
    std::vector<Ratio> q;
    for (int n = 0; n < num_clients(); ++n) {
      const ClientSpec& c = clients[n];
      if (c.required_throughput) {
        q.push_back(*c.required_throughput);
      } else if (c.group == 'A' && group_x) {
        q.push_back(*group_x * rates_[n]);
      } else if (c.group == 'B' && group_y) {
        q.push_back(*group_y * rates_[n]);
      } else {
        q.push_back(Ratio(0));
      }
    }
    return q;
  }

  /// Heuristic debt frame: one trace frame period in slots; pattern sources
  /// use their cycle; markov sources fall back to 100. Explicit m_frame wins.
  int default_m_frame() const {
    if (m_frame) return *m_frame;
    int best = 1;
    for (int n = 0; n < num_clients(); ++n) {
      int candidate = 1;
      if (clients[n].trace_path && frame_period_slots_[n] > 0) {
        candidate = frame_period_slots_[n];
      } else if (clients[n].pattern) {
        candidate = static_cast<int>(clients[n].pattern->size());
      } else if (clients[n].chain) {
        candidate = 100;
      }
      best = std::max(best, candidate);
    }
    return best;
  }

  SimConfig build_sim() const { return build_sim(policy, requirements()); }

  SimConfig build_sim(PolicyKind kind, std::span<const Ratio> q) const {
    SimConfig cfg;
    for (int n = 0; n < num_clients(); ++n) {
      ClientConfig c;
      c.index = n;
      c.reliability = clients[n].reliability;
      c.delay_bound = clients[n].delay_bound;
      c.required_throughput = q[n];
      c.mean_rate = rates_[n];
      cfg.clients.push_back(c);
    }
    cfg.sources = sources_;
    cfg.policy.kind = kind;
    cfg.policy.m_frame = default_m_frame();
    cfg.policy.ties = ties;
    if (kind == PolicyKind::kCostIndex) {
      for (int n = 0; n < num_clients(); ++n) {
        cfg.policy.dropping_costs.push_back(
            rates_[n].is_zero() ? 0.0 : (q[n] / rates_[n]).to_double());
      }
    }
    cfg.horizon_slots = horizon_slots;
    cfg.seed = seed;
    cfg.slot_width_s = slot_width_s;
    cfg.estimator = estimator;
    return cfg;
  }

  /// The same clients as a state-space instance. Trace-driven clients are
  /// not representable there; pattern and chain sources are.
  LpInstance build_lp_instance() const {
    LpInstance inst;
    for (int n = 0; n < num_clients(); ++n) {
      inst.clients.push_back({clients[n].reliability, clients[n].delay_bound});
      if (clients[n].chain) {
        inst.chains.push_back(*clients[n].chain);
      } else if (clients[n].pattern) {
        inst.chains.push_back(cyclic_source(*clients[n].pattern));
      } else {
        throw ConfigError(
            "client " + std::to_string(n + 1) +
            ": the capacity LP needs a pattern or chain source, not a trace");
      }
    }
    return inst;
  }

  std::vector<int> group_members(char group) const {
    std::vector<int> out;
    for (int n = 0; n < num_clients(); ++n) {
      if (clients[n].group == group) out.push_back(n);
    }
    return out;
  }

  /// Rebuild with every client's delay bound replaced (delay-bound studies).
  ExperimentConfig with_delay_bound(int tau) const {
    ExperimentConfig out = *this;
    for (auto& c : out.clients) c.delay_bound = tau;
    return out;
  }

 private:
  static ExperimentConfig from_key_values(const KeyValues& kv) {
    ExperimentConfig cfg;
    cfg.slot_width_s = kv.get_double("slot_width", kDefaultSlotWidthSeconds);
    if (!(cfg.slot_width_s > 0.0)) throw ConfigError("slot_width must be positive");
    cfg.horizon_slots = kv.get_int("horizon", cfg.horizon_slots);
    cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", 1));
    if (auto p = kv.get("policy")) cfg.policy = parse_policy(*p);
    if (auto t = kv.get("ties")) {
      if (*t == "lowest-index") {
        cfg.ties = TieRule::kLowestIndex;
      } else if (*t == "seeded-random") {
        cfg.ties = TieRule::kSeededRandom;
      } else {
        throw ConfigError("ties must be lowest-index or seeded-random");
      }
    }
    if (kv.has("m_frame")) {
      auto m = kv.get_int("m_frame", 1);
      if (m < 1) throw ConfigError("m_frame must be >= 1");
      cfg.m_frame = static_cast<int>(m);
    }
    cfg.grid_step = kv.get_ratio("grid_step", cfg.grid_step);
    cfg.stagger_offset_s = kv.get_double("stagger_offset", 0.0);
    cfg.estimator.enabled = kv.get_bool("estimate_reliability", false);
    cfg.estimator.alpha = kv.get_double("ewma_alpha", 0.01);
    cfg.estimator.initial = kv.get_double("ewma_initial", 1.0);
    cfg.estimator.refresh_debt_workloads =
        kv.get_bool("refresh_debt_workloads", false);
    cfg.mtu = static_cast<int>(kv.get_int("mtu", kDefaultMtuBytes));
    if (cfg.mtu <= 0) throw ConfigError("mtu must be positive");
    if (kv.has("x")) cfg.group_x = kv.get_ratio("x", Ratio(0));
    if (kv.has("y")) cfg.group_y = kv.get_ratio("y", Ratio(0));

    const int n_clients = static_cast<int>(kv.get_int("clients", 0));
    if (n_clients < 1) throw ConfigError("config needs clients=<count> >= 1");
    auto global_trace = kv.get("trace");

    std::optional<std::vector<double>> rel_spread, tau_spread;
    if (auto s = kv.get("reliability_spread")) {
      rel_spread = detail::parse_csv_doubles(*s, "reliability_spread");
      if (rel_spread->size() != 2) {
        throw ConfigError("reliability_spread needs exactly lo,hi");
      }
    }
    if (auto s = kv.get("delay_bound_spread")) {
      tau_spread = detail::parse_csv_doubles(*s, "delay_bound_spread");
      if (tau_spread->size() != 2) {
        throw ConfigError("delay_bound_spread needs exactly lo,hi");
      }
    }
    auto spread_at = [n_clients](const std::vector<double>& lohi, int n) {
      if (n_clients == 1) return lohi[0];
      return lohi[0] + (lohi[1] - lohi[0]) * n / (n_clients - 1.0);
    };

    for (int n = 0; n < n_clients; ++n) {
      const std::string prefix = "client." + std::to_string(n + 1) + ".";
      ClientSpec c;
      if (auto r = kv.get(prefix + "reliability")) {
        c.reliability = Ratio::parse(*r);
      } else if (rel_spread) {
        c.reliability = Ratio::from_double(spread_at(*rel_spread, n), 100'000);
      } else {
        throw ConfigError("client " + std::to_string(n + 1) +
                          ": reliability missing (set the key or a spread)");
      }
      if (auto t = kv.get(prefix + "delay_bound")) {
        std::int64_t tau = 0;
        if (!detail::parse_int_line(*t, tau) || tau < 1) {
          throw ConfigError(prefix + "delay_bound must be a positive integer");
        }
        c.delay_bound = static_cast<int>(tau);
      } else if (tau_spread) {
        c.delay_bound = std::max(1, static_cast<int>(spread_at(*tau_spread, n)));
      } else {
        throw ConfigError("client " + std::to_string(n + 1) +
                          ": delay_bound missing (set the key or a spread)");
      }
      if (auto g = kv.get(prefix + "group")) {
        if (*g != "A" && *g != "B") throw ConfigError(prefix + "group must be A or B");
        c.group = (*g)[0];
      } else {
        c.group = n < (n_clients + 1) / 2 ? 'A' : 'B';  // first half is group A
      }
      if (auto q = kv.get(prefix + "q")) c.required_throughput = Ratio::parse(*q);

      int sources = 0;
      if (auto t = kv.get(prefix + "trace")) {
        c.trace_path = resolve(kv.base_dir(), *t);
        ++sources;
      }
      if (auto p = kv.get(prefix + "pattern")) {
        c.pattern = detail::parse_csv_ints(*p, prefix + "pattern");
        for (int v : *c.pattern) {
          if (v < 0) throw ConfigError(prefix + "pattern: counts must be >= 0");
        }
        ++sources;
      }
      if (auto rows = kv.get(prefix + "chain.rows")) {
        std::vector<std::vector<double>> matrix;
        std::stringstream ss(*rows);
        std::string row;
        while (std::getline(ss, row, ';')) {
          matrix.push_back(detail::parse_csv_doubles(row, prefix + "chain.rows"));
        }
        auto emit = detail::parse_csv_ints(kv.require(prefix + "chain.emit"),
                                           prefix + "chain.emit");
        auto start = kv.get_int(prefix + "chain.start", 1);
        c.chain = MarkovSource(matrix, emit, static_cast<int>(start - 1));
        ++sources;
      }
      if (sources == 0 && global_trace) {
        c.trace_path = resolve(kv.base_dir(), *global_trace);
        ++sources;
      }
      if (sources != 1) {
        throw ConfigError("client " + std::to_string(n + 1) +
                          ": needs exactly one traffic source (trace, pattern "
                          "or chain)");
      }
      cfg.clients.push_back(std::move(c));
    }

    auto leftovers = kv.unconsumed();
    if (!leftovers.empty()) {
      throw ConfigError("unknown config key '" + leftovers.front() + "'");
    }

    cfg.resolve_sources(global_trace.has_value());
    return cfg;
  }

  static std::string resolve(const std::string& base, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base) / p).string();
  }

  void resolve_sources(bool shared_trace) {
    std::map<std::string, TraceData> cache;
    for (int n = 0; n < num_clients(); ++n) {
      const ClientSpec& c = clients[n];
      if (c.trace_path) {
        auto it = cache.find(*c.trace_path);
        if (it == cache.end()) {
          it = cache.emplace(*c.trace_path, load_trace_file(*c.trace_path)).first;
        }
        ArrivalSchedule schedule;
        if (const auto* frames = std::get_if<FrameTrace>(&it->second)) {
          schedule = ArrivalSchedule::from_trace(*frames, mtu, slot_width_s);
          frame_period_slots_.push_back(std::max(
              1, static_cast<int>(std::llround(1.0 / (frames->fps * slot_width_s)))));
        } else {
          schedule = ArrivalSchedule::from_trace(std::get<SlotCountTrace>(it->second));
          frame_period_slots_.push_back(
              static_cast<int>(schedule.cycle_slots()));
        }
        if (shared_trace && stagger_offset_s != 0.0) {
          schedule = stagger(schedule, n, stagger_offset_s, slot_width_s);
        }
        rates_.push_back(mean_rate(schedule));
        sources_.emplace_back(std::move(schedule));
      } else if (c.pattern) {
        auto schedule = ArrivalSchedule::from_trace(
            SlotCountTrace{*c.pattern}, mtu);
        frame_period_slots_.push_back(0);
        rates_.push_back(mean_rate(schedule));
        sources_.emplace_back(std::move(schedule));
      } else {
        frame_period_slots_.push_back(0);
        rates_.push_back(
            Ratio::from_double(c.chain->stationary_emission_mean(), 1 << 30));
        sources_.emplace_back(*c.chain);
      }
    }
  }

  std::vector<TrafficSource> sources_;
  std::vector<Ratio> rates_;
  std::vector<int> frame_period_slots_;
};

}  // namespace streamsim
