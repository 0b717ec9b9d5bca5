#include "zccloud/serialization.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "zccloud/errors.hpp"

namespace zcc {
namespace {

// Pulls typed fields out of an object and complains about leftovers.
class Reader {
 public:
  Reader(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ConfigError(what_ + " must be a JSON object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(what_ + ": field '" + key + "' has the wrong type");
    }
  }

  // Accepts an ISO-8601 string or unix seconds.
  void get_time(const char* key, Timestamp& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    if (it->is_string()) {
      out = parse_iso8601(it->get<std::string>());
    } else if (it->is_number_integer()) {
      out = it->get<Timestamp>();
    } else {
      throw ConfigError(what_ + ": field '" + key + "' must be an ISO-8601 string or unix seconds");
    }
  }

  const Json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void allow(const char* key) { seen_.insert(key); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(what_ + ": unknown field '" + it.key() + "'");
    }
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> seen_;
};

Json histogram_json(const IntervalHistogram& h) {
  Json edges = Json::array();
  for (Seconds e : h.edges) edges.push_back(static_cast<double>(e) / kHourSeconds);
  return {{"edges_hours", edges},
          {"counts", h.counts},
          {"count_fraction", h.count_fraction},
          {"duty_contribution", h.duty_contribution}};
}

}  // namespace

Json to_json(const CostParams& p) {
  return {{"c_compute", p.c_compute}, {"c_dcf", p.c_dcf},
          {"c_power", p.c_power},     {"c_net", p.c_net},
          {"c_ssd", p.c_ssd},         {"c_battery", p.c_battery},
          {"c_ctnr", p.c_ctnr},       {"c_cool", p.c_cool},
          {"density", p.density},     {"power_price", p.power_price},
          {"unit_mw", p.unit_mw},     {"unit_peak_pflops", p.unit_peak_pflops}};
}

CostParams cost_params_from_json(const Json& j) {
  Reader r(j, "cost parameters");
  std::string profile = "mira-baseline";
  r.get("profile", profile);
  if (profile != "mira-baseline") throw ConfigError("unknown cost profile '" + profile + "'");
  CostParams p = CostParams::mira_baseline();
  // A power price without an explicit c_power re-derives c_power.
  const bool has_price = j.contains("power_price");
  const bool has_power = j.contains("c_power");
  r.get("c_compute", p.c_compute);
  r.get("c_dcf", p.c_dcf);
  r.get("c_power", p.c_power);
  r.get("c_net", p.c_net);
  r.get("c_ssd", p.c_ssd);
  r.get("c_battery", p.c_battery);
  r.get("c_ctnr", p.c_ctnr);
  r.get("c_cool", p.c_cool);
  r.get("density", p.density);
  r.get("power_price", p.power_price);
  r.get("unit_mw", p.unit_mw);
  r.get("unit_peak_pflops", p.unit_peak_pflops);
  r.finish();
  if (has_price && !has_power) p.c_power = p.derived_c_power();
  validate(p);
  return p;
}

Json to_json(const TcoReport& r) {
  Json comps = Json::object();
  for (const std::string& k : tco_component_names()) comps[k] = r.components.at(k);
  return {{"approach", std::string(to_string(r.approach))},
          {"ctr_units", r.ctr_units},
          {"z_units", r.z_units},
          {"n_units", r.n_units()},
          {"total_musd_per_year", r.total},
          {"components", comps}};
}

Json to_json(const SimResult& r) {
  Json pools = Json::array();
  for (const PoolStats& p : r.pools) {
    pools.push_back({{"name", p.name},
                     {"nodes", p.nodes},
                     {"up_hours", p.up_hours},
                     {"busy_node_hours", p.busy_node_hours},
                     {"utilization", p.utilization},
                     {"jobs_started", p.jobs_started},
                     {"jobs_completed", p.jobs_completed}});
  }
  return {{"config", r.label},
          {"ctr_units", r.ctr_units},
          {"z_units", r.z_units},
          {"z_duty_factor", r.z_duty_factor},
          {"horizon_days", r.horizon_days},
          {"throughput_jobs_per_day", r.throughput},
          {"node_hours_delivered", r.node_hours_delivered},
          {"mean_wait_h", r.mean_wait_h},
          {"p95_wait_h", r.p95_wait_h},
          {"jobs_submitted", r.jobs_submitted},
          {"jobs_completed", r.jobs_completed},
          {"jobs_unfinished", r.jobs_unfinished},
          {"jobs_migrated", r.jobs_migrated},
          {"jobs_killed", r.jobs_killed},
          {"pools", pools}};
}

Json to_json(const SpReport& r, bool include_intervals) {
  Json j = {{"site_id", r.site_id},
            {"model", r.model.name()},
            {"horizon_start", format_iso8601(r.horizon.start)},
            {"horizon_end", format_iso8601(r.horizon.end)},
            {"duty_factor", r.duty_factor},
            {"n_intervals", r.intervals.size()},
            {"avg_stranded_mw", r.avg_stranded_mw},
            {"total_mwh_per_year", r.total_mwh},
            {"histogram", histogram_json(r.histogram)}};
  if (include_intervals) {
    Json ivs = Json::array();
    for (const SpInterval& iv : r.intervals) {
      ivs.push_back({{"start", format_iso8601(iv.start)},
                     {"end", format_iso8601(iv.end)},
                     {"avg_power_mw", iv.avg_power},
                     {"energy_mwh", iv.energy},
                     {"net_price", iv.net_price}});
    }
    j["intervals"] = ivs;
  }
  return j;
}

Json to_json(const StorageBridge& b) {
  return {{"longest_gap_hours", b.longest_gap_hours}, {"bridge_cost_usd", b.bridge_cost_usd}};
}

Json to_json(const GenerationPoint& g) {
  return {{"year", g.year}, {"model", std::string(to_string(g.model))}, {"peak_pf", g.peak_pf}, {"mw", g.mw}};
}

Json to_json(const AvailabilitySchedule& s) {
  Json windows = Json::array();
  for (const UpInterval& w : s.up_intervals()) windows.push_back(Json::array({w.start, w.end}));
  return {{"horizon_start", s.horizon().start},
          {"horizon_end", s.horizon().end},
          {"duty_factor", s.horizon().length() > 0 ? s.duty_factor() : 0.0},
          {"windows", windows}};
}

AvailabilitySchedule schedule_from_json(const Json& j) {
  Reader r(j, "availability schedule");
  Horizon h;
  r.get_time("horizon_start", h.start);
  r.get_time("horizon_end", h.end);
  r.allow("duty_factor");
  if (!j.contains("horizon_start") || !j.contains("horizon_end")) {
    throw ConfigError("availability schedule needs horizon_start and horizon_end");
  }
  std::vector<UpInterval> up;
  if (const Json* w = r.child("windows")) {
    if (!w->is_array()) throw ConfigError("schedule windows must be an array");
    for (const Json& pair : *w) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
        throw ConfigError("each schedule window must be [start, end] in unix seconds");
      }
      up.push_back({pair[0].get<Timestamp>(), pair[1].get<Timestamp>()});
    }
  }
  r.finish();
  return AvailabilitySchedule(h, std::move(up));
}

Json to_json(const SynthMarketConfig& c) {
  return {{"site_id", c.site_id},
          {"epoch", format_iso8601(c.epoch)},
          {"horizon_days", static_cast<double>(c.horizon) / kDaySeconds},
          {"mean_power_mw", c.mean_power_mw},
          {"power_volatility", c.power_volatility},
          {"power_persistence", c.power_persistence},
          {"episode_rate_per_day", c.episode_rate_per_day},
          {"episode_mean_hours", c.episode_mean_hours},
          {"episode_duration_cv", c.episode_duration_cv},
          {"episode_price_mean", c.episode_price_mean},
          {"episode_price_sd", c.episode_price_sd},
          {"episode_recovery_prob", c.episode_recovery_prob},
          {"base_price_mean", c.base_price_mean},
          {"base_price_sd", c.base_price_sd},
          {"base_price_floor", c.base_price_floor},
          {"calm_rate_per_day", c.calm_rate_per_day},
          {"calm_mean_hours", c.calm_mean_hours},
          {"seed", c.seed}};
}

SynthMarketConfig synth_market_from_json(const Json& j) {
  Reader r(j, "market config");
  SynthMarketConfig c;
  double days = static_cast<double>(c.horizon) / kDaySeconds;
  r.get("site_id", c.site_id);
  r.get_time("epoch", c.epoch);
  r.get("horizon_days", days);
  r.get("mean_power_mw", c.mean_power_mw);
  r.get("power_volatility", c.power_volatility);
  r.get("power_persistence", c.power_persistence);
  r.get("episode_rate_per_day", c.episode_rate_per_day);
  r.get("episode_mean_hours", c.episode_mean_hours);
  r.get("episode_duration_cv", c.episode_duration_cv);
  r.get("episode_price_mean", c.episode_price_mean);
  r.get("episode_price_sd", c.episode_price_sd);
  r.get("episode_recovery_prob", c.episode_recovery_prob);
  r.get("base_price_mean", c.base_price_mean);
  r.get("base_price_sd", c.base_price_sd);
  r.get("base_price_floor", c.base_price_floor);
  r.get("calm_rate_per_day", c.calm_rate_per_day);
  r.get("calm_mean_hours", c.calm_mean_hours);
  r.get("seed", c.seed);
  r.finish();
  c.horizon = static_cast<Seconds>(std::llround(days * kDaySeconds));
  validate(c);
  return c;
}

Json to_json(const SynthWorkloadConfig& c) {
  const WorkloadTargets& t = c.targets;
  return {{"runtime_mean_h", t.runtime_mean_h},
          {"runtime_stdev_h", t.runtime_stdev_h},
          {"runtime_min_h", t.runtime_min_h},
          {"runtime_max_h", t.runtime_max_h},
          {"nodes_mean", t.nodes_mean},
          {"nodes_stdev", t.nodes_stdev},
          {"utilization", t.utilization},
          {"reference_nodes", c.reference_nodes},
          {"epoch", format_iso8601(c.epoch)},
          {"horizon_days", static_cast<double>(c.horizon) / kDaySeconds},
          {"seed", c.seed},
          {"node_rounding", c.node_rounding == NodeRounding::PowerOfTwo ? "power-of-two" : "nearest"},
          {"rank_correlation", c.rank_correlation},
          {"walltime_factor", c.walltime_factor}};
}

SynthWorkloadConfig synth_workload_from_json(const Json& j) {
  Reader r(j, "workload config");
  SynthWorkloadConfig c = SynthWorkloadConfig::mira_calibrated();
  WorkloadTargets& t = c.targets;
  double days = static_cast<double>(c.horizon) / kDaySeconds;
  std::string rounding = c.node_rounding == NodeRounding::PowerOfTwo ? "power-of-two" : "nearest";
  r.get("runtime_mean_h", t.runtime_mean_h);
  r.get("runtime_stdev_h", t.runtime_stdev_h);
  r.get("runtime_min_h", t.runtime_min_h);
  r.get("runtime_max_h", t.runtime_max_h);
  r.get("nodes_mean", t.nodes_mean);
  r.get("nodes_stdev", t.nodes_stdev);
  r.get("utilization", t.utilization);
  r.get("reference_nodes", c.reference_nodes);
  r.get_time("epoch", c.epoch);
  r.get("horizon_days", days);
  r.get("seed", c.seed);
  r.get("node_rounding", rounding);
  r.get("rank_correlation", c.rank_correlation);
  r.get("walltime_factor", c.walltime_factor);
  r.finish();
  if (rounding == "power-of-two") {
    c.node_rounding = NodeRounding::PowerOfTwo;
  } else if (rounding == "nearest") {
    c.node_rounding = NodeRounding::Nearest;
  } else {
    throw ConfigError("node_rounding must be 'power-of-two' or 'nearest'");
  }
  c.horizon = static_cast<Seconds>(std::llround(days * kDaySeconds));
  validate(c);
  return c;
}

Json to_json(const StudySpace& s) {
  Json avail = Json::array();
  for (const AvailabilityModel& a : s.availability) avail.push_back(a.spec());
  return {{"n_units", s.n_units},
          {"compute_price_factors", s.compute_price_factors},
          {"power_prices", s.power_prices},
          {"densities", s.densities},
          {"availability", avail},
          {"seed", s.seed},
          {"cost_params", to_json(s.base)},
          {"workload", to_json(s.workload)},
          {"market", to_json(s.market)}};
}

StudySpace study_space_from_json(const Json& j) {
  if (j.is_null()) throw ConfigError("study space document is empty");
  Reader r(j, "study space");
  StudySpace s;
  r.get("n_units", s.n_units);
  r.get("compute_price_factors", s.compute_price_factors);
  r.get("power_prices", s.power_prices);
  r.get("densities", s.densities);
  r.get("seed", s.seed);
  if (const Json* a = r.child("availability")) {
    if (!a->is_array()) throw ConfigError("availability must be a list like [\"NP0:0.6\", \"NP5:0.8\"]");
    s.availability.clear();
    for (const Json& item : *a) {
      if (!item.is_string()) throw ConfigError("availability entries must be strings");
      s.availability.push_back(AvailabilityModel::parse(item.get<std::string>()));
    }
  }
  if (const Json* c = r.child("cost_params")) s.base = cost_params_from_json(*c);
  if (const Json* w = r.child("workload")) s.workload = synth_workload_from_json(*w);
  if (const Json* m = r.child("market")) s.market = synth_market_from_json(*m);
  r.finish();
  validate(s);
  return s;
}

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw EmptyInputError("'" + path.string() + "' is empty");
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

}  // namespace zcc
