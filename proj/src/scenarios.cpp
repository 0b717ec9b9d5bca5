#include "zccloud/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "zccloud/errors.hpp"

namespace zcc {
namespace {

std::string fmt_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
void require_axis(const std::vector<T>& axis, const char* name) {
  if (axis.empty()) throw ValidationError(std::string("study space axis '") + name + "' is empty");
}

// Baseline value of an axis: `preferred` if present, else the first entry.
double baseline(const std::vector<double>& axis, double preferred) {
  for (double v : axis) {
    if (v == preferred) return v;
  }
  return axis.front();
}

CostParams cell_params(const StudySpace& space, const CellKey& key) {
  return space.base.with_compute_factor(key.compute_factor).with_power_price(key.power_price).with_density(key.density);
}

std::string key_text(const CellKey& k) {
  return "n=" + std::to_string(k.n) + " compute=" + fmt_number(k.compute_factor) +
         " power=" + fmt_number(k.power_price) + " density=" + fmt_number(k.density) + " availability=" + k.availability;
}

// Runs jobs[i]() over the worker pool; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::string AvailabilityModel::label() const {
  if (kind == Kind::Periodic) return "periodic-" + fmt_number(duty_factor);
  return model.name();
}

std::string AvailabilityModel::spec() const {
  return (kind == Kind::Periodic ? std::string("periodic") : model.name()) + ":" + fmt_number(duty_factor);
}

AvailabilityModel AvailabilityModel::parse(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    throw ValidationError("availability model '" + text + "' must look like NP5:0.8 or periodic:0.5");
  }
  const std::string head = text.substr(0, colon);
  const std::string tail = text.substr(colon + 1);
  AvailabilityModel m;
  auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), m.duty_factor);
  if (tail.empty() || ec != std::errc() || ptr != tail.data() + tail.size()) {
    throw ValidationError("bad duty factor in availability model '" + text + "'");
  }
  if (!(m.duty_factor >= 0.0 && m.duty_factor <= 1.0)) {
    throw ValidationError("duty factor in '" + text + "' must lie in [0, 1]");
  }
  if (head == "periodic") {
    m.kind = Kind::Periodic;
  } else {
    m.kind = Kind::StrandedPower;
    m.model = SpModel::parse(head);
  }
  return m;
}

std::size_t StudySpace::grid_size() const {
  return n_units.size() * compute_price_factors.size() * power_prices.size() * densities.size() * availability.size();
}

void validate(const StudySpace& s) {
  require_axis(s.n_units, "n_units");
  require_axis(s.compute_price_factors, "compute_price_factors");
  require_axis(s.power_prices, "power_prices");
  require_axis(s.densities, "densities");
  require_axis(s.availability, "availability");
  for (int n : s.n_units) {
    if (n < 1) throw ValidationError("n_units entries must be >= 1");
  }
  for (double f : s.compute_price_factors) {
    if (!(f > 0.0) || !std::isfinite(f)) throw ValidationError("compute price factors must be > 0");
  }
  for (double p : s.power_prices) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ValidationError("power prices must be >= 0");
  }
  for (double d : s.densities) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("densities must be > 0");
  }
  for (const AvailabilityModel& a : s.availability) {
    if (!(a.duty_factor >= 0.0 && a.duty_factor <= 1.0)) throw ValidationError("duty factors must lie in [0, 1]");
  }
  validate(s.base);
  validate(s.workload);
  validate(s.market);
}

std::vector<PreparedAvailability> prepare_availability(const StudySpace& space, const Horizon& horizon) {
  std::vector<PreparedAvailability> out(space.availability.size());
  parallel_for(space.availability.size(), [&](std::size_t i) {
    const AvailabilityModel& m = space.availability[i];
    PreparedAvailability p;
    p.model = m;
    if (m.kind == AvailabilityModel::Kind::Periodic) {
      p.schedule = periodic_schedule(m.duty_factor, horizon);
    } else {
      SynthMarketConfig base = space.market;
      base.epoch = horizon.start;
      // Calibration runs over at least a year; shorter horizons take the
      // leading slice of it.
      base.horizon = std::max<Seconds>(horizon.length(), 365 * kDaySeconds);
      base.seed = space.seed;
      const SynthMarketConfig calibrated = calibrate_to_duty_factor(m.duty_factor, m.model, base);
      const SiteSeries series = synthesize_market(calibrated);
      p.schedule = sp_schedule(detect_intervals(series, m.model), horizon);
      p.market = calibrated;
    }
    p.measured_duty_factor = p.schedule.duty_factor();
    out[i] = std::move(p);
  });
  return out;
}

const SweepCell& SweepResult::at(const CellKey& key) const {
  auto it = std::lower_bound(cells.begin(), cells.end(), key,
                             [](const SweepCell& c, const CellKey& k) { return c.key < k; });
  if (it == cells.end() || !(it->key == key)) throw ValidationError("no sweep cell " + key_text(key));
  return *it;
}

int worker_count() {
  if (const char* env = std::getenv("ZCC_WORKERS")) {
    int n = 0;
    auto [ptr, ec] = std::from_chars(env, env + std::char_traits<char>::length(env), n);
    if (ec == std::errc() && n >= 1) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const StudySpace& space, const WorkloadTrace& trace,
                      const std::vector<PreparedAvailability>& availability) {
  validate(space);
  if (availability.size() != space.availability.size()) {
    throw ValidationError("prepared availability does not match the study space");
  }

  std::vector<int> sizes = space.n_units;
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  std::map<int, WorkloadTrace> traces;
  for (int n : sizes) {
    traces[n] = scale_workload(trace, n + 1, space.seed + static_cast<std::uint64_t>(n));
  }

  struct SimTask {
    int n;
    int availability;  // -1: (n+1)Ctr
  };
  std::vector<SimTask> tasks;
  for (int n : sizes) {
    tasks.push_back({n, -1});
    for (std::size_t a = 0; a < availability.size(); ++a) tasks.push_back({n, static_cast<int>(a)});
  }
  std::vector<SimResult> sims(tasks.size());
  parallel_for(tasks.size(), [&](std::size_t i) {
    const SimTask& t = tasks[i];
    SystemConfig cfg;
    if (t.availability < 0) {
      cfg.ctr_units = t.n + 1;
    } else {
      cfg.ctr_units = 1;
      cfg.z_units = t.n;
      cfg.z_schedule = availability[static_cast<std::size_t>(t.availability)].schedule;
    }
    try {
      sims[i] = simulate(cfg, traces.at(t.n));
    } catch (const ValidationError& e) {
      throw ValidationError("sweep simulation " + cfg.label() + " failed: " + e.what());
    }
  });
  auto find_sim = [&](int n, int a) -> const SimResult& {
    for (std::size_t i = 0; i < tasks.size(); ++i) {
      if (tasks[i].n == n && tasks[i].availability == a) return sims[i];
    }
    throw std::logic_error("missing simulation");
  };

  SweepResult out;
  out.availability = availability;
  for (int n : space.n_units) {
    for (double cf : space.compute_price_factors) {
      for (double pp : space.power_prices) {
        for (double d : space.densities) {
          for (std::size_t a = 0; a < availability.size(); ++a) {
            SweepCell cell;
            cell.key = {n, cf, pp, d, space.availability[a].label()};
            try {
              const CostParams params = cell_params(space, cell.key);
              cell.z_sim = find_sim(n, static_cast<int>(a));
              cell.z_tco = tco_mixed(1, n, params);
              cell.z_cost_perf = cost_performance(cell.z_sim, cell.z_tco);
              cell.ctr_sim = find_sim(n, -1);
              cell.ctr_tco = tco_traditional(n + 1, params);
              cell.ctr_cost_perf = cost_performance(cell.ctr_sim, cell.ctr_tco);
            } catch (const ValidationError& e) {
              throw ValidationError("sweep cell " + key_text(cell.key) + ": " + e.what());
            }
            out.cells.push_back(std::move(cell));
          }
        }
      }
    }
  }
  std::sort(out.cells.begin(), out.cells.end(), [](const SweepCell& x, const SweepCell& y) { return x.key < y.key; });
  return out;
}

SweepResult run_sweep(const StudySpace& space) {
  validate(space);
  SynthWorkloadConfig wl = space.workload;
  wl.seed = space.seed;
  const WorkloadTrace trace = synthesize_workload(wl);
  return run_sweep(space, trace, prepare_availability(space, trace.horizon));
}

std::string_view to_string(FigureFamily f) {
  switch (f) {
    case FigureFamily::PowerPrice:
      return "power";
    case FigureFamily::ComputePrice:
      return "compute";
    case FigureFamily::Density:
      return "density";
  }
  return "?";
}

namespace {

struct FamilyAxis {
  const char* name;
  std::vector<double> values;
};

FamilyAxis family_axis(const StudySpace& space, FigureFamily f) {
  switch (f) {
    case FigureFamily::PowerPrice:
      return {"power_price_usd_per_mwh", space.power_prices};
    case FigureFamily::ComputePrice:
      return {"compute_price_factor", space.compute_price_factors};
    case FigureFamily::Density:
      return {"density", space.densities};
  }
  return {"?", {}};
}

CellKey family_key(const StudySpace& space, FigureFamily f, int n, double axis_value, const std::string& avail) {
  CellKey k{n, baseline(space.compute_price_factors, 1.0), baseline(space.power_prices, space.base.power_price),
            baseline(space.densities, space.base.density), avail};
  if (f == FigureFamily::PowerPrice) k.power_price = axis_value;
  if (f == FigureFamily::ComputePrice) k.compute_factor = axis_value;
  if (f == FigureFamily::Density) k.density = axis_value;
  return k;
}

void csv_row(std::ostream& out, int scale, const char* axis, double value, const std::string& config, double thr,
             double tco, double perf) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%.6f,%.6f,%.6f\n", scale, axis, fmt_number(value).c_str(),
                config.c_str(), thr, tco, perf);
  out << buf;
}

}  // namespace

void write_family_csv(std::ostream& out, const SweepResult& sweep, const StudySpace& space, FigureFamily family) {
  const FamilyAxis axis = family_axis(space, family);
  out << "scale,axis,axis_value,config,throughput,tco_musd,throughput_per_musd\n";
  std::vector<int> sizes = space.n_units;
  std::sort(sizes.begin(), sizes.end());
  for (int n : sizes) {
    for (double v : axis.values) {
      bool ctr_done = false;
      for (const AvailabilityModel& a : space.availability) {
        const SweepCell& c = sweep.at(family_key(space, family, n, v, a.label()));
        if (!ctr_done) {
          csv_row(out, n + 1, axis.name, v, c.ctr_sim.label, c.ctr_sim.throughput, c.ctr_tco.total, c.ctr_cost_perf);
          ctr_done = true;
        }
        csv_row(out, n + 1, axis.name, v, c.z_sim.label + "(" + a.label() + ")", c.z_sim.throughput, c.z_tco.total,
                c.z_cost_perf);
      }
    }
  }
}

void write_tco_family_csv(std::ostream& out, const StudySpace& space, FigureFamily family) {
  const FamilyAxis axis = family_axis(space, family);
  out << "scale,axis,axis_value,config";
  for (const std::string& k : tco_component_names()) out << "," << k;
  out << ",total_musd\n";
  std::vector<int> sizes = space.n_units;
  std::sort(sizes.begin(), sizes.end());
  auto row = [&](int scale, double v, const std::string& config, const TcoReport& r) {
    out << scale << "," << axis.name << "," << fmt_number(v) << "," << config;
    char buf[32];
    for (const std::string& k : tco_component_names()) {
      std::snprintf(buf, sizeof buf, ",%.6f", r.components.at(k));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.6f\n", r.total);
    out << buf;
  };
  for (int n : sizes) {
    for (double v : axis.values) {
      const CellKey k = family_key(space, family, n, v, "");
      const CostParams p = cell_params(space, k);
      row(n + 1, v, std::to_string(n + 1) + "Ctr", tco_traditional(n + 1, p));
      SystemConfig z;
      z.z_units = n;
      row(n + 1, v, z.label(), tco_mixed(1, n, p));
    }
  }
}

void write_grid_csv(std::ostream& out, const SweepResult& sweep) {
  out << "n,compute_price_factor,power_price_usd_per_mwh,density,availability,z_config,z_throughput,z_tco_musd,"
         "z_throughput_per_musd,ctr_config,ctr_throughput,ctr_tco_musd,ctr_throughput_per_musd,advantage\n";
  char buf[512];
  for (const SweepCell& c : sweep.cells) {
    std::snprintf(buf, sizeof buf, "%d,%s,%s,%s,%s,%s,%.6f,%.6f,%.6f,%s,%.6f,%.6f,%.6f,%.6f\n", c.key.n,
                  fmt_number(c.key.compute_factor).c_str(), fmt_number(c.key.power_price).c_str(),
                  fmt_number(c.key.density).c_str(), c.key.availability.c_str(), c.z_sim.label.c_str(),
                  c.z_sim.throughput, c.z_tco.total, c.z_cost_perf, c.ctr_sim.label.c_str(), c.ctr_sim.throughput,
                  c.ctr_tco.total, c.ctr_cost_perf, c.advantage());
    out << buf;
  }
}

std::vector<std::filesystem::path> write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& sweep,
                                                       const StudySpace& space) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto open = [&](const std::string& name) {
    written.push_back(dir / name);
    std::ofstream f(written.back(), std::ios::binary);
    if (!f) throw ValidationError("cannot write " + written.back().string());
    return f;
  };
  for (FigureFamily fam : {FigureFamily::PowerPrice, FigureFamily::ComputePrice, FigureFamily::Density}) {
    {
      auto f = open("sweep_" + std::string(to_string(fam)) + ".csv");
      write_family_csv(f, sweep, space, fam);
    }
    {
      auto f = open("tco_" + std::string(to_string(fam)) + ".csv");
      write_tco_family_csv(f, space, fam);
    }
  }
  auto f = open("sweep_grid.csv");
  write_grid_csv(f, sweep);
  return written;
}

std::string_view to_string(GrowthModel m) { return m == GrowthModel::DoeProjection ? "doe" : "horst-simon"; }

std::vector<GenerationPoint> default_anchors() {
  return {{2012, 10.0, 4.0, GrowthModel::DoeProjection}, {2017, 200.0, 12.9, GrowthModel::DoeProjection}};
}

double horst_simon_gf_per_kw(int year) { return 2200.0 + 2000.0 * (year - 2012) / 5.0; }

std::vector<GenerationPoint> project_generations(const std::vector<GenerationPoint>& anchors, int horizon_year,
                                                 GrowthModel model) {
  const GenerationPoint* a2012 = nullptr;
  const GenerationPoint* a2017 = nullptr;
  for (const GenerationPoint& g : anchors) {
    if (!(g.peak_pf > 0.0) || !(g.mw > 0.0)) throw ValidationError("anchor points need peak_pf and mw > 0");
    if (g.year == 2012) a2012 = &g;
    if (g.year == 2017) a2017 = &g;
  }
  if (!a2012 || !a2017) throw ValidationError("projection needs 2012 and 2017 anchor points");
  if (horizon_year < 2017) throw ValidationError("horizon year " + std::to_string(horizon_year) + " precedes the anchors");

  std::vector<GenerationPoint> doe{*a2012, *a2017};
  static constexpr double kMwSteps[] = {3.0, 3.0, 2.0};
  GenerationPoint cur = *a2017;
  for (int step = 0, year = 2022; year <= horizon_year; ++step, year += 5) {
    cur.year = year;
    cur.peak_pf *= 20.0;
    cur.mw *= kMwSteps[std::min(step, 2)];
    doe.push_back(cur);
  }
  for (GenerationPoint& g : doe) g.model = GrowthModel::DoeProjection;
  if (model == GrowthModel::DoeProjection) return doe;

  std::vector<GenerationPoint> hs;
  for (GenerationPoint g : doe) {
    g.model = GrowthModel::HorstSimon;
    g.mw = g.peak_pf * 1e6 / horst_simon_gf_per_kw(g.year) / 1e3;
    hs.push_back(g);
  }
  return hs;
}

void write_generations_csv(std::ostream& out, const std::vector<GenerationPoint>& doe,
                           const std::vector<GenerationPoint>& horst_simon) {
  out << "year,peak_pf,doe_mw,doe_pf_per_mw,horst_simon_gf_per_kw,horst_simon_mw\n";
  char buf[256];
  for (std::size_t i = 0; i < doe.size(); ++i) {
    const GenerationPoint& d = doe[i];
    const double hs_mw = i < horst_simon.size() ? horst_simon[i].mw : 0.0;
    std::snprintf(buf, sizeof buf, "%d,%.6g,%.6g,%.6g,%.6g,%.6g\n", d.year, d.peak_pf, d.mw, d.pf_per_mw(),
                  horst_simon_gf_per_kw(d.year), hs_mw);
    out << buf;
  }
}

namespace {

double trad_unit_cost(const CostParams& p) { return p.c_compute + p.c_dcf + p.c_power; }
double z_unit_cost(const CostParams& p) { return p.c_compute + p.c_ssd + p.c_battery + p.c_ctnr + p.c_cool; }
double base_mw(const CostParams& p, BaseMode mode) { return mode == BaseMode::WithBase ? p.unit_mw : 0.0; }

void require_extreme_approach(Approach a) {
  if (a == Approach::Mixed) throw ValidationError("extreme-scale costing takes Traditional or ZCCloud");
}

}  // namespace

double extreme_tco(double mw, Approach approach, const CostParams& p, BaseMode mode) {
  require_extreme_approach(approach);
  validate(p);
  if (!(mw >= p.unit_mw) || !std::isfinite(mw)) {
    throw ValidationError("extreme-scale system must be at least one unit (" + fmt_number(p.unit_mw) + " MW)");
  }
  if (approach == Approach::Traditional) return mw / p.unit_mw * trad_unit_cost(p) + p.c_net;
  const double b = base_mw(p, mode);
  double total = (mw - b) / p.unit_mw * z_unit_cost(p) + p.c_net;
  if (b > 0.0) total += b / p.unit_mw * trad_unit_cost(p) + p.c_net;
  return total;
}

double mw_per_budget(double budget, Approach approach, const CostParams& p, BaseMode mode) {
  require_extreme_approach(approach);
  validate(p);
  double mw = 0.0;
  if (approach == Approach::Traditional) {
    mw = (budget - p.c_net) / trad_unit_cost(p) * p.unit_mw;
  } else {
    const double b = base_mw(p, mode);
    double rest = budget - p.c_net;
    if (b > 0.0) rest -= b / p.unit_mw * trad_unit_cost(p) + p.c_net;
    mw = b + rest / z_unit_cost(p) * p.unit_mw;
  }
  if (!(mw >= p.unit_mw)) {
    throw InfeasibleError("a budget of $" + fmt_number(budget) + "M/year cannot pay for one " +
                          fmt_number(p.unit_mw) + " MW unit");
  }
  return mw;
}

double peak_pflops_per_budget(double budget, Approach approach, const GenerationPoint& g, const CostParams& p,
                              BaseMode mode) {
  if (!(g.mw > 0.0) || !(g.peak_pf > 0.0)) throw ValidationError("generation point needs peak_pf and mw > 0");
  return mw_per_budget(budget, approach, p, mode) * g.pf_per_mw();
}

double extreme_throughput_cost_eff(double mw, Approach approach, double duty_factor, const CostParams& p,
                                   BaseMode mode) {
  if (!(duty_factor >= 0.0 && duty_factor <= 1.0)) throw ValidationError("duty factor must lie in [0, 1]");
  const double tco = extreme_tco(mw, approach, p, mode);
  double effective_mw = mw;
  if (approach == Approach::ZCCloud) {
    const double b = base_mw(p, mode);
    effective_mw = (mw - b) * duty_factor + b;
  }
  return effective_mw * 8760.0 / tco;
}

}  // namespace zcc
