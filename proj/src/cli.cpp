#include "zccloud/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "zccloud/errors.hpp"
#include "zccloud/serialization.hpp"

namespace zcc {
namespace fs = std::filesystem;

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::now();
  return format_iso8601(std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count());
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Per-invocation state: where outputs go and what the manifest records.
struct Context {
  std::uint64_t seed = 1;
  bool seed_given = false;
  fs::path out_dir = ".";
  std::string params_path;
  std::ostream* out = nullptr;
  Json outputs = Json::array();
  Json inputs = Json::array();

  void note_input(const std::string& path, const char* role) {
    inputs.push_back({{"role", role}, {"path", path}, {"fnv1a64", hex64(fnv1a64_file(path))}});
  }

  fs::path path(const std::string& name) const { return out_dir / name; }

  void record(const std::string& name) {
    const fs::path p = path(name);
    outputs.push_back({{"path", name}, {"bytes", fs::file_size(p)}, {"fnv1a64", hex64(fnv1a64_file(p))}});
  }

  void emit(const std::string& name, const std::string& content) {
    std::ofstream f(path(name), std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + path(name).string() + "'");
    f << content;
    f.close();
    record(name);
  }

  void emit_json(const std::string& name, const Json& j) { emit(name, j.dump(2) + "\n"); }

  CostParams params() {
    if (params_path.empty()) return CostParams::mira_baseline();
    note_input(params_path, "params");
    return cost_params_from_json(read_json_file(params_path));
  }
};

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " '" + path + "' does not exist");
}

// ---------------------------------------------------------------- sp-analyze

struct MarketSource {
  std::string market_file;
  std::string synth_config;
  int sites = 3;
  double days = 365.0;
  double calibrate_df = -1.0;
};

void add_market_source(CLI::App* cmd, MarketSource& m) {
  cmd->add_option("--market", m.market_file, "Market CSV (site_id, timestamp_utc, lmp_usd_per_mwh, power_mw)");
  cmd->add_option("--synth-config", m.synth_config, "Synthetic market config JSON");
  cmd->add_option("--sites", m.sites, "Number of synthetic sites")->capture_default_str();
  cmd->add_option("--days", m.days, "Synthetic horizon in days")->capture_default_str();
  cmd->add_option("--calibrate", m.calibrate_df, "Calibrate synthetic sites to this duty factor");
}

std::vector<SiteSeries> load_markets(Context& ctx, const MarketSource& m, const SpModel& model) {
  if (!m.market_file.empty()) {
    if (!m.synth_config.empty()) throw ValidationError("--market and --synth-config are mutually exclusive");
    require_file(m.market_file, "market file");
    ctx.note_input(m.market_file, "market");
    return ingest_csv(m.market_file);
  }
  SynthMarketConfig base;
  if (!m.synth_config.empty()) {
    require_file(m.synth_config, "synthetic config");
    ctx.note_input(m.synth_config, "synth-config");
    base = synth_market_from_json(read_json_file(m.synth_config));
  } else {
    base.horizon = static_cast<Seconds>(std::llround(m.days * kDaySeconds));
  }
  if (ctx.seed_given || m.synth_config.empty()) base.seed = ctx.seed;
  if (m.sites < 1) throw ValidationError("--sites must be >= 1");
  std::vector<SiteSeries> out;
  for (int i = 0; i < m.sites; ++i) {
    SynthMarketConfig c = base;
    c.seed = base.seed + static_cast<std::uint64_t>(i);
    if (m.sites > 1) c.site_id = base.site_id + "-" + std::to_string(i + 1);
    if (m.calibrate_df >= 0.0) c = calibrate_to_duty_factor(m.calibrate_df, model, c);
    out.push_back(synthesize_market(c));
  }
  return out;
}

struct SpAnalyzeOpts {
  MarketSource market;
  std::string family = "netprice";
  double threshold = 5.0;
  std::size_t top_k = 0;
  std::string buckets = "1,5,10,50,100";
  double storage_load_mw = 4.0;
};

SpModel model_from(const std::string& family, double threshold) {
  if (family == "netprice" || family == "np") return SpModel::net_price(threshold);
  if (family == "lmp") return SpModel::lmp(threshold);
  throw ValidationError("--family must be 'lmp' or 'netprice'");
}

std::vector<Seconds> parse_buckets(const std::string& text) {
  std::vector<Seconds> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double h = std::stod(item, &used);
      if (used != item.size() || !(h > 0.0)) throw std::invalid_argument(item);
      edges.push_back(static_cast<Seconds>(std::llround(h * kHourSeconds)));
    } catch (const std::exception&) {
      throw ValidationError("bad bucket edge '" + item + "' (hours, comma separated)");
    }
  }
  if (edges.empty()) throw ValidationError("--buckets needs at least one edge");
  return edges;
}

void cmd_sp_analyze(Context& ctx, const SpAnalyzeOpts& o) {
  const SpModel model = model_from(o.family, o.threshold);
  const std::vector<Seconds> edges = parse_buckets(o.buckets);
  const std::vector<SiteSeries> sites = load_markets(ctx, o.market, model);
  std::vector<SpReport> reports;
  for (const SiteSeries& s : sites) reports.push_back(analyze_site(s, model, edges));
  const std::size_t k = o.top_k == 0 ? reports.size() : o.top_k;
  const std::vector<std::string> top = rank_sites(reports, k);

  Json j = {{"model", model.name()}, {"sites", Json::array()}, {"top_sites", top}};
  for (const SpReport& r : reports) j["sites"].push_back(to_json(r));
  bool shared = true;
  for (const SiteSeries& s : sites) shared = shared && s.epoch == sites.front().epoch && s.size() == sites.front().size();
  if (shared) {
    std::vector<SiteSeries> chosen;
    for (const std::string& id : top) {
      for (const SiteSeries& s : sites) {
        if (s.site_id == id) chosen.push_back(s);
      }
    }
    j["top_sites_cumulative_duty_factor"] = cumulative_duty_factor(chosen, model);
    try {
      j["top_sites_avg_stranded_mw"] = avg_stranded_power(chosen, model);
    } catch (const UndefinedValueError&) {
      j["top_sites_avg_stranded_mw"] = nullptr;
    }
  }
  ctx.emit_json("sp_report.json", j);

  std::ostringstream hist;
  hist << "site_id,bucket_lo_h,bucket_hi_h,count,count_fraction,duty_contribution\n";
  for (const SpReport& r : reports) {
    const auto& h = r.histogram;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      const double lo = b == 0 ? 0.0 : static_cast<double>(h.edges[b - 1]) / kHourSeconds;
      const std::string hi = b < h.edges.size() ? fixed(static_cast<double>(h.edges[b]) / kHourSeconds, 3) : "inf";
      hist << r.site_id << "," << fixed(lo, 3) << "," << hi << "," << h.counts[b] << ","
           << fixed(h.count_fraction[b], 6) << "," << fixed(h.duty_contribution[b], 6) << "\n";
    }
  }
  ctx.emit("sp_histogram.csv", hist.str());

  std::ostringstream ivs;
  ivs << "site_id,start,end,duration_h,avg_power_mw,energy_mwh,net_price\n";
  for (const SpReport& r : reports) {
    for (const SpInterval& iv : r.intervals) {
      ivs << iv.site_id << "," << format_iso8601(iv.start) << "," << format_iso8601(iv.end) << ","
          << fixed(static_cast<double>(iv.duration()) / kHourSeconds, 4) << "," << fixed(iv.avg_power, 4) << ","
          << fixed(iv.energy, 4) << "," << fixed(iv.net_price, 4) << "\n";
    }
  }
  ctx.emit("sp_intervals.csv", ivs.str());

  for (const SiteSeries& s : sites) {
    if (s.site_id == top.front()) {
      ctx.emit_json("sp_schedule.json", to_json(sp_schedule(detect_intervals(s, model), s.horizon())));
    }
  }

  for (const SpReport& r : reports) {
    *ctx.out << r.site_id << " " << model.name() << " duty_factor=" << fixed(r.duty_factor, 4)
             << " intervals=" << r.intervals.size() << "\n";
  }
}

// -------------------------------------------------------------- synth-market

struct SynthMarketOpts {
  std::string config;
  double days = 365.0;
  std::string model;
  double target_df = -1.0;
};

void cmd_synth_market(Context& ctx, const SynthMarketOpts& o) {
  SynthMarketConfig c;
  if (!o.config.empty()) {
    require_file(o.config, "market config");
    ctx.note_input(o.config, "synth-config");
    c = synth_market_from_json(read_json_file(o.config));
    if (ctx.seed_given) c.seed = ctx.seed;
  } else {
    c.horizon = static_cast<Seconds>(std::llround(o.days * kDaySeconds));
    c.seed = ctx.seed;
  }
  std::string model_name = o.model;
  if (o.target_df >= 0.0 && model_name.empty()) model_name = "NP5";
  if (o.target_df >= 0.0) c = calibrate_to_duty_factor(o.target_df, SpModel::parse(model_name), c);
  const SiteSeries s = synthesize_market(c);
  {
    std::ofstream f(ctx.path("market.csv"), std::ios::binary);
    export_csv(f, std::span<const SiteSeries>(&s, 1));
  }
  ctx.record("market.csv");
  ctx.emit_json("market_config.json", to_json(c));
  if (!model_name.empty()) {
    const SpModel m = SpModel::parse(model_name);
    const auto ivs = detect_intervals(s, m);
    const AvailabilitySchedule sched = sp_schedule(ivs, s.horizon());
    ctx.emit_json("sp_schedule.json", to_json(sched));
    *ctx.out << s.site_id << " " << m.name() << " duty_factor=" << fixed(sched.duty_factor(), 4)
             << " episode_rate_per_day=" << fixed(c.episode_rate_per_day, 4) << "\n";
  } else {
    *ctx.out << s.site_id << " slots=" << s.size() << "\n";
  }
}

// -------------------------------------------------------------- workload-gen

struct WorkloadOpts {
  std::string trace;
  std::string config;
  double days = 365.0;
  double scale = 1.0;
  double job_size = 1.0;
  double rank_correlation = -2.0;
};

void add_workload_opts(CLI::App* cmd, WorkloadOpts& w, bool allow_trace) {
  if (allow_trace) cmd->add_option("--trace", w.trace, "Workload trace file (job_id submit nodes runtime walltime)");
  cmd->add_option("--workload-config", w.config, "Synthetic workload config JSON");
  cmd->add_option("--days", w.days, "Synthetic horizon in days")->capture_default_str();
  cmd->add_option("--scale", w.scale, "Bootstrap the workload to this multiple of its node-hours")
      ->capture_default_str();
  cmd->add_option("--job-size", w.job_size, "Multiply job node counts")->capture_default_str();
  cmd->add_option("--rank-correlation", w.rank_correlation, "Runtime/nodes Spearman correlation");
}

WorkloadTrace build_workload(Context& ctx, const WorkloadOpts& w) {
  WorkloadTrace t;
  if (!w.trace.empty()) {
    require_file(w.trace, "trace file");
    ctx.note_input(w.trace, "trace");
    t = load_trace(w.trace);
  } else {
    SynthWorkloadConfig c = SynthWorkloadConfig::mira_calibrated();
    if (!w.config.empty()) {
      require_file(w.config, "workload config");
      ctx.note_input(w.config, "workload-config");
      c = synth_workload_from_json(read_json_file(w.config));
      if (ctx.seed_given) c.seed = ctx.seed;
    } else {
      c.horizon = static_cast<Seconds>(std::llround(w.days * kDaySeconds));
      c.seed = ctx.seed;
    }
    if (w.rank_correlation > -2.0) c.rank_correlation = w.rank_correlation;
    t = synthesize_workload(c);
  }
  if (!(w.scale > 0.0)) throw ValidationError("--scale must be > 0");
  if (w.scale != 1.0) t = scale_workload(t, w.scale, ctx.seed + 1000);
  if (w.job_size != 1.0) t = scale_job_size(t, w.job_size, 0);
  return t;
}

void cmd_workload_gen(Context& ctx, const WorkloadOpts& o) {
  const WorkloadTrace t = build_workload(ctx, o);
  {
    std::ofstream f(ctx.path("workload.trace"), std::ios::binary);
    write_trace(f, t);
  }
  ctx.record("workload.trace");
  const WorkloadStats& s = t.stats;
  ctx.emit_json("workload_stats.json", {{"n_jobs", s.n_jobs},
                                        {"jobs_per_day", t.jobs_per_day()},
                                        {"runtime_mean_h", s.runtime_mean_h},
                                        {"runtime_stdev_h", s.runtime_stdev_h},
                                        {"runtime_min_h", s.runtime_min_h},
                                        {"runtime_max_h", s.runtime_max_h},
                                        {"nodes_mean", s.nodes_mean},
                                        {"nodes_stdev", s.nodes_stdev},
                                        {"nodes_min", s.nodes_min},
                                        {"nodes_max", s.nodes_max},
                                        {"node_hours", s.node_hours},
                                        {"utilization", s.utilization},
                                        {"reference_nodes", t.reference_nodes},
                                        {"horizon_start", format_iso8601(t.horizon.start)},
                                        {"horizon_end", format_iso8601(t.horizon.end)}});
  *ctx.out << "jobs=" << s.n_jobs << " jobs_per_day=" << fixed(t.jobs_per_day(), 2)
           << " utilization=" << fixed(s.utilization, 4) << "\n";
}

// ------------------------------------------------------------------ simulate

struct SimulateOpts {
  WorkloadOpts workload;
  int ctr = 1;
  int z = 0;
  std::string schedule;
  std::string availability = "NP5:0.8";
  bool no_oracle = false;
  bool event_log = false;
};

AvailabilitySchedule build_schedule(Context& ctx, const SimulateOpts& o, const Horizon& horizon) {
  if (!o.schedule.empty()) {
    require_file(o.schedule, "schedule file");
    ctx.note_input(o.schedule, "schedule");
    return schedule_from_json(read_json_file(o.schedule));
  }
  if (o.availability == "always-up") return AvailabilitySchedule::always_up(horizon);
  if (o.availability == "always-down") return AvailabilitySchedule::always_down(horizon);
  StudySpace space;
  space.seed = ctx.seed;
  space.availability = {AvailabilityModel::parse(o.availability)};
  return prepare_availability(space, horizon).front().schedule;
}

void cmd_simulate(Context& ctx, const SimulateOpts& o) {
  const WorkloadTrace t = build_workload(ctx, o.workload);
  SystemConfig cfg;
  cfg.ctr_units = o.ctr;
  cfg.z_units = o.z;
  cfg.oracle_admission = !o.no_oracle;
  if (o.z > 0) cfg.z_schedule = build_schedule(ctx, o, t.horizon);
  SimOptions opts;
  std::ofstream log;
  if (o.event_log) {
    log.open(ctx.path("events.ndjson"), std::ios::binary);
    opts.event_log = &log;
  }
  const SimResult r = simulate(cfg, t, opts);
  if (o.event_log) {
    log.close();
    ctx.record("events.ndjson");
  }
  std::ostringstream csv;
  write_sim_csv_header(csv);
  write_sim_csv_row(csv, r);
  ctx.emit("sim.csv", csv.str());
  ctx.emit_json("sim.json", to_json(r));
  *ctx.out << csv.str();
}

// ----------------------------------------------------------------------- tco

struct TcoOpts {
  int ctr = 1;
  int z = 0;
  double power_price = -1.0;
  double compute_factor = 1.0;
  double density = -1.0;
};

void cmd_tco(Context& ctx, const TcoOpts& o) {
  CostParams p = ctx.params();
  if (o.power_price >= 0.0) p = p.with_power_price(o.power_price);
  if (o.compute_factor != 1.0) p = p.with_compute_factor(o.compute_factor);
  if (o.density >= 0.0) p = p.with_density(o.density);
  validate(p);
  const TcoReport r = tco_mixed(o.ctr, o.z, p);
  Json j = to_json(r);
  j["params"] = to_json(p);
  ctx.emit_json("tco.json", j);
  std::ostringstream csv;
  csv << "component,musd_per_year\n";
  for (const std::string& k : tco_component_names()) csv << k << "," << fixed(r.components.at(k), 6) << "\n";
  csv << "total," << fixed(r.total, 6) << "\n";
  ctx.emit("tco_breakdown.csv", csv.str());
  SystemConfig label_cfg;
  label_cfg.ctr_units = o.ctr;
  label_cfg.z_units = o.z;
  *ctx.out << label_cfg.label() << " total " << fixed(r.total, 1) << " $M/year\n";
}

// --------------------------------------------------------------------- sweep

struct SweepOpts {
  std::string space;
};

void cmd_sweep(Context& ctx, const SweepOpts& o) {
  StudySpace space;
  if (!o.space.empty()) {
    require_file(o.space, "space file");
    ctx.note_input(o.space, "space");
    space = study_space_from_json(read_json_file(o.space));
  }
  if (ctx.seed_given || o.space.empty()) space.seed = ctx.seed;
  if (!ctx.params_path.empty()) space.base = ctx.params();
  validate(space);
  const SweepResult sweep = run_sweep(space);
  for (const fs::path& p : write_sweep_outputs(ctx.out_dir, sweep, space)) ctx.record(p.filename().string());
  Json avail = Json::array();
  for (const PreparedAvailability& a : sweep.availability) {
    Json item = {{"model", a.model.spec()}, {"measured_duty_factor", a.measured_duty_factor}};
    if (a.market) item["market"] = to_json(*a.market);
    avail.push_back(item);
  }
  ctx.emit_json("sweep_space.json", {{"space", to_json(space)}, {"availability", avail}});
  *ctx.out << "cells=" << sweep.cells.size() << "\n";
}

// ------------------------------------------------------------------- project

struct ProjectOpts {
  int year = 2032;
  double budget = 250.0;
  double duty_factor = 0.8;
};

void cmd_project(Context& ctx, const ProjectOpts& o) {
  const CostParams p = ctx.params();
  const auto doe = project_generations(default_anchors(), o.year, GrowthModel::DoeProjection);
  const auto hs = project_generations(default_anchors(), o.year, GrowthModel::HorstSimon);
  std::ostringstream gen;
  write_generations_csv(gen, doe, hs);
  ctx.emit("generations.csv", gen.str());

  std::ostringstream budget;
  budget << "year,approach,base_mode,budget_musd,mw,peak_pf\n";
  std::ostringstream extreme;
  extreme << "year,mw,base_mode,traditional_tco_musd,zccloud_tco_musd,zccloud_reduction,traditional_mwh_per_musd,"
             "zccloud_mwh_per_musd,zccloud_cost_eff_gain\n";
  for (const GenerationPoint& g : doe) {
    struct Row {
      Approach a;
      BaseMode m;
      const char* mode;
    };
    for (const Row& row : {Row{Approach::Traditional, BaseMode::WithBase, "n/a"},
                           Row{Approach::ZCCloud, BaseMode::WithBase, "with-base"},
                           Row{Approach::ZCCloud, BaseMode::NoBase, "no-base"}}) {
      budget << g.year << "," << to_string(row.a) << "," << row.mode << "," << fixed(o.budget, 1) << ",";
      try {
        budget << fixed(mw_per_budget(o.budget, row.a, p, row.m), 3) << ","
               << fixed(peak_pflops_per_budget(o.budget, row.a, g, p, row.m), 1) << "\n";
      } catch (const InfeasibleError&) {
        budget << "infeasible,infeasible\n";
      }
    }
    if (g.mw < p.unit_mw) continue;
    for (BaseMode m : {BaseMode::WithBase, BaseMode::NoBase}) {
      const double tt = extreme_tco(g.mw, Approach::Traditional, p, m);
      const double tz = extreme_tco(g.mw, Approach::ZCCloud, p, m);
      const double et = extreme_throughput_cost_eff(g.mw, Approach::Traditional, 1.0, p, m);
      const double ez = extreme_throughput_cost_eff(g.mw, Approach::ZCCloud, o.duty_factor, p, m);
      extreme << g.year << "," << fixed(g.mw, 3) << "," << (m == BaseMode::WithBase ? "with-base" : "no-base") << ","
              << fixed(tt, 3) << "," << fixed(tz, 3) << "," << fixed((tt - tz) / tt, 6) << "," << fixed(et, 4)
              << "," << fixed(ez, 4) << "," << fixed(ez / et - 1.0, 6) << "\n";
    }
  }
  ctx.emit("budget.csv", budget.str());
  ctx.emit("extreme.csv", extreme.str());
  for (std::size_t i = 0; i < doe.size(); ++i) {
    *ctx.out << doe[i].year << " peak_pf=" << doe[i].peak_pf << " mw=" << fixed(doe[i].mw, 0)
             << " horst_simon_mw=" << fixed(hs[i].mw, 1) << "\n";
  }
}

// --------------------------------------------------------------- storage-gap

struct StorageOpts {
  MarketSource market;
  double gap_hours = -1.0;
  std::string model = "NP5";
  double load_mw = 4.0;
  double battery_price = 350.0;
};

void cmd_storage_gap(Context& ctx, StorageOpts o) {
  Json j;
  if (o.gap_hours >= 0.0) {
    j = {{"longest_gap_hours", o.gap_hours},
         {"load_mw", o.load_mw},
         {"battery_usd_per_kwh", o.battery_price},
         {"bridge_cost_usd", bridge_cost_usd(o.gap_hours, o.load_mw, o.battery_price)}};
    if (!(o.load_mw > 0.0) || !(o.battery_price > 0.0)) throw ValidationError("load and battery price must be > 0");
  } else {
    const SpModel m = SpModel::parse(o.model);
    if (o.market.market_file.empty() && o.market.synth_config.empty()) o.market.sites = 1;
    j = {{"model", m.name()}, {"load_mw", o.load_mw}, {"battery_usd_per_kwh", o.battery_price}, {"sites", Json::array()}};
    for (const SiteSeries& s : load_markets(ctx, o.market, m)) {
      Json item = to_json(storage_to_bridge(s, m, o.load_mw, o.battery_price));
      item["site_id"] = s.site_id;
      j["sites"].push_back(item);
    }
    j["bridge_cost_usd"] = j["sites"].front()["bridge_cost_usd"];
    j["longest_gap_hours"] = j["sites"].front()["longest_gap_hours"];
  }
  ctx.emit_json("storage_gap.json", j);
  *ctx.out << "longest_gap_h=" << fixed(j["longest_gap_hours"].get<double>(), 2) << " bridge_cost=$"
           << fixed(j["bridge_cost_usd"].get<double>() / 1e6, 1) << "M\n";
}

// -------------------------------------------------------------------- replay

struct ReplayOpts {
  std::string manifest;
  bool verify = false;
};

// Drops --out-dir (both spellings) so a replay can redirect outputs.
std::vector<std::string> strip_out_dir(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out-dir") {
      ++i;
      continue;
    }
    if (args[i].rfind("--out-dir=", 0) == 0) continue;
    out.push_back(args[i]);
  }
  return out;
}

int cmd_replay(Context& ctx, const ReplayOpts& o, std::ostream& err, bool out_dir_given) {
  require_file(o.manifest, "manifest");
  const Json m = read_json_file(o.manifest);
  if (!m.contains("args") || !m["args"].is_array()) throw ConfigError("manifest has no argument list");
  std::vector<std::string> args = m["args"].get<std::vector<std::string>>();
  if (!args.empty() && args.front() == "replay") throw ConfigError("cannot replay a replay manifest");
  const fs::path target =
      fs::absolute(out_dir_given ? ctx.out_dir : fs::path(o.manifest).parent_path() / "replay");
  fs::create_directories(target);
  args.push_back("--out-dir");
  args.push_back(target.string());

  const fs::path here = fs::current_path();
  if (m.contains("cwd") && fs::is_directory(m["cwd"].get<std::string>())) fs::current_path(m["cwd"].get<std::string>());
  int code = 0;
  try {
    code = run_cli(args, *ctx.out, err);
  } catch (...) {
    fs::current_path(here);
    throw;
  }
  fs::current_path(here);
  if (code != 0) return code;
  if (!o.verify) return 0;

  int mismatches = 0;
  for (const Json& out : m["outputs"]) {
    const std::string name = out["path"].get<std::string>();
    const fs::path p = target / name;
    const bool same = fs::exists(p) && hex64(fnv1a64_file(p)) == out["fnv1a64"].get<std::string>();
    *ctx.out << (same ? "identical " : "DIFFERS   ") << name << "\n";
    if (!same) ++mismatches;
  }
  if (mismatches > 0) {
    err << "replay produced " << mismatches << " differing output(s)\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string started = now_utc();
  CLI::App app{"ZCCloud capacity-planning and cost-model toolkit", "zcc"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolVersion));

  Context ctx;
  ctx.out = &out;
  std::string out_dir = ".";
  auto* seed_opt = app.add_option("--seed", ctx.seed, "Seed for synthetic inputs")->capture_default_str();
  auto* out_opt = app.add_option("--out-dir", out_dir, "Directory for outputs and manifest.json")->capture_default_str();
  app.add_option("--params", ctx.params_path, "Cost parameter JSON (defaults to mira-baseline)");

  SpAnalyzeOpts sp;
  auto* c_sp = app.add_subcommand("sp-analyze", "Stranded-power intervals, duty factors and histograms");
  add_market_source(c_sp, sp.market);
  c_sp->add_option("--family", sp.family, "lmp | netprice")->capture_default_str();
  c_sp->add_option("--threshold", sp.threshold, "Price threshold C in $/MWh")->capture_default_str();
  c_sp->add_option("--top-k", sp.top_k, "Rank the best k sites (0 = all)")->capture_default_str();
  c_sp->add_option("--buckets", sp.buckets, "Histogram bucket edges in hours")->capture_default_str();

  SynthMarketOpts sm;
  auto* c_sm = app.add_subcommand("synth-market", "Generate a synthetic 5-minute market series");
  c_sm->add_option("--config", sm.config, "Synthetic market config JSON");
  c_sm->add_option("--days", sm.days, "Horizon in days")->capture_default_str();
  c_sm->add_option("--model", sm.model, "Stranded-power model for the schedule output, e.g. NP5");
  c_sm->add_option("--target-df", sm.target_df, "Calibrate to this duty factor under --model");

  WorkloadOpts wg;
  auto* c_wg = app.add_subcommand("workload-gen", "Generate or rescale a workload trace");
  add_workload_opts(c_wg, wg, true);

  SimulateOpts so;
  auto* c_sim = app.add_subcommand("simulate", "Simulate Ctr + Z pools on a workload");
  add_workload_opts(c_sim, so.workload, true);
  c_sim->add_option("--ctr", so.ctr, "Ctr units")->capture_default_str();
  c_sim->add_option("--z", so.z, "Z units")->capture_default_str();
  c_sim->add_option("--schedule", so.schedule, "Z availability schedule JSON");
  c_sim->add_option("--availability", so.availability, "NP5:0.8 | periodic:0.5 | always-up | always-down")
      ->capture_default_str();
  c_sim->add_flag("--no-oracle", so.no_oracle, "Kill Z jobs at shutdown instead of oracle admission");
  c_sim->add_flag("--event-log", so.event_log, "Write events.ndjson");

  TcoOpts to;
  auto* c_tco = app.add_subcommand("tco", "Annualized TCO of Ctr + Z systems");
  c_tco->add_option("--ctr", to.ctr, "Ctr units")->capture_default_str();
  c_tco->add_option("--z", to.z, "Z units")->capture_default_str();
  c_tco->add_option("--power-price", to.power_price, "Power price in $/MWh");
  c_tco->add_option("--compute-factor", to.compute_factor, "Compute hardware price factor")->capture_default_str();
  c_tco->add_option("--density", to.density, "Power density factor");

  SweepOpts sw;
  auto* c_sweep = app.add_subcommand("sweep", "Cost-performance sweep over the study space");
  c_sweep->add_option("--space", sw.space, "Study space JSON");

  ProjectOpts po;
  auto* c_proj = app.add_subcommand("project", "Extreme-scale generations, budgets and TCO");
  c_proj->add_option("--year", po.year, "Last projected year")->capture_default_str();
  c_proj->add_option("--budget", po.budget, "Annual budget in $M")->capture_default_str();
  c_proj->add_option("--duty-factor", po.duty_factor, "ZCCloud duty factor")->capture_default_str();

  StorageOpts st;
  auto* c_st = app.add_subcommand("storage-gap", "Battery cost to bridge the longest stranded-power gap");
  add_market_source(c_st, st.market);
  c_st->add_option("--gap-hours", st.gap_hours, "Use this gap instead of measuring one");
  c_st->add_option("--model", st.model, "Stranded-power model")->capture_default_str();
  c_st->add_option("--load-mw", st.load_mw, "Load to carry in MW")->capture_default_str();
  c_st->add_option("--battery-price", st.battery_price, "Battery price in $/kWh")->capture_default_str();

  ReplayOpts ro;
  auto* c_replay = app.add_subcommand("replay", "Re-run a command from its manifest.json");
  c_replay->add_option("--manifest", ro.manifest, "manifest.json of an earlier run")->required();
  c_replay->add_flag("--verify", ro.verify, "Compare outputs with the recorded hashes");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    ctx.seed_given = seed_opt->count() > 0;
    ctx.out_dir = out_dir;
    if (c_replay->parsed()) return cmd_replay(ctx, ro, err, out_opt->count() > 0);
    fs::create_directories(ctx.out_dir);

    std::string command;
    if (c_sp->parsed()) {
      command = "sp-analyze";
      cmd_sp_analyze(ctx, sp);
    } else if (c_sm->parsed()) {
      command = "synth-market";
      cmd_synth_market(ctx, sm);
    } else if (c_wg->parsed()) {
      command = "workload-gen";
      cmd_workload_gen(ctx, wg);
    } else if (c_sim->parsed()) {
      command = "simulate";
      cmd_simulate(ctx, so);
    } else if (c_tco->parsed()) {
      command = "tco";
      cmd_tco(ctx, to);
    } else if (c_sweep->parsed()) {
      command = "sweep";
      cmd_sweep(ctx, sw);
    } else if (c_proj->parsed()) {
      command = "project";
      cmd_project(ctx, po);
    } else if (c_st->parsed()) {
      command = "storage-gap";
      cmd_storage_gap(ctx, st);
    }

    Json manifest = {{"tool", "zcc"},
                     {"version", std::string(kToolVersion)},
                     {"command", command},
                     {"args", strip_out_dir(args)},
                     {"cwd", fs::current_path().string()},
                     {"seed", ctx.seed},
                     {"inputs", ctx.inputs},
                     {"out_dir", fs::absolute(ctx.out_dir).string()},
                     {"outputs", ctx.outputs},
                     {"started_utc", started},
                     {"finished_utc", now_utc()}};
    write_json_file(ctx.out_dir / "manifest.json", manifest);
    return 0;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace zcc
