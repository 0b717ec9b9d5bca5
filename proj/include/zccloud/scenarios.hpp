#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zccloud/availability.hpp"
#include "zccloud/market_data.hpp"
#include "zccloud/simulator.hpp"
#include "zccloud/stranded_power.hpp"
#include "zccloud/tco.hpp"
#include "zccloud/workload.hpp"

namespace zcc {

// Where Z uptime comes from: a synthetic market calibrated so `model`
// measures `duty_factor`, or a fixed daily window of that duty factor.
struct AvailabilityModel {
  enum class Kind { StrandedPower, Periodic };
  Kind kind = Kind::StrandedPower;
  SpModel model = SpModel::net_price(5.0);
  double duty_factor = 0.8;

  // "NP5", "NP0", "periodic-0.5".
  std::string label() const;
  // "NP5:0.8", "LMP0:0.21", "periodic:0.5".
  static AvailabilityModel parse(const std::string& text);
  std::string spec() const;

  bool operator==(const AvailabilityModel&) const = default;
};

struct StudySpace {
  std::vector<int> n_units{1, 2, 4};
  std::vector<double> compute_price_factors{0.25, 0.5, 1.0, 1.25, 1.5};
  std::vector<double> power_prices{30.0, 60.0, 120.0, 240.0, 360.0};
  std::vector<double> densities{1.0, 2.0, 3.0, 4.0, 5.0};
  std::vector<AvailabilityModel> availability{
      {AvailabilityModel::Kind::StrandedPower, SpModel::net_price(0.0), 0.60},
      {AvailabilityModel::Kind::StrandedPower, SpModel::net_price(5.0), 0.80},
  };
  CostParams base = CostParams::mira_baseline();
  SynthWorkloadConfig workload = SynthWorkloadConfig::mira_calibrated();
  SynthMarketConfig market;
  std::uint64_t seed = 1;

  std::size_t grid_size() const;
  bool operator==(const StudySpace&) const = default;
};

void validate(const StudySpace& space);

struct PreparedAvailability {
  AvailabilityModel model;
  AvailabilitySchedule schedule;
  double measured_duty_factor = 0.0;
  std::optional<SynthMarketConfig> market;  // calibrated config, SP kinds only
};

// Calibrates one synthetic market per stranded-power model (seeded from
// space.seed) and turns its intervals into a schedule over `horizon`.
std::vector<PreparedAvailability> prepare_availability(const StudySpace& space, const Horizon& horizon);

struct CellKey {
  int n = 1;
  double compute_factor = 1.0;
  double power_price = 60.0;
  double density = 1.0;
  std::string availability;

  auto operator<=>(const CellKey&) const = default;
};

// Ctr+nZ against (n+1)Ctr, both fed the workload scaled to n+1 units.
struct SweepCell {
  CellKey key;
  SimResult z_sim;
  TcoReport z_tco;
  double z_cost_perf = 0.0;
  SimResult ctr_sim;
  TcoReport ctr_tco;
  double ctr_cost_perf = 0.0;

  // Relative throughput/M$ gain of Ctr+nZ over (n+1)Ctr.
  double advantage() const { return z_cost_perf / ctr_cost_perf - 1.0; }
};

struct SweepResult {
  std::vector<SweepCell> cells;  // sorted by key
  std::vector<PreparedAvailability> availability;

  const SweepCell& at(const CellKey& key) const;
};

// Simulations depend only on (n, availability); the compute, power and
// density axes only change cost. Density scales pool and job node counts
// together, which leaves the schedule unchanged. Simulations fan out over
// ZCC_WORKERS threads (default: hardware concurrency); results do not
// depend on the worker count.
SweepResult run_sweep(const StudySpace& space, const WorkloadTrace& trace,
                      const std::vector<PreparedAvailability>& availability);
SweepResult run_sweep(const StudySpace& space);

int worker_count();

enum class FigureFamily { PowerPrice, ComputePrice, Density };
std::string_view to_string(FigureFamily f);

// Long-format rows (scale, axis_value, config, throughput, tco_musd,
// throughput_per_musd) for one family, other axes held at their baseline.
void write_family_csv(std::ostream& out, const SweepResult& sweep, const StudySpace& space, FigureFamily family);
// TCO breakdown rows for the same families (no simulation needed).
void write_tco_family_csv(std::ostream& out, const StudySpace& space, FigureFamily family);
void write_grid_csv(std::ostream& out, const SweepResult& sweep);

// Writes sweep_<family>.csv, tco_<family>.csv and sweep_grid.csv; returns
// the written paths.
std::vector<std::filesystem::path> write_sweep_outputs(const std::filesystem::path& dir, const SweepResult& sweep,
                                                       const StudySpace& space);

enum class GrowthModel { DoeProjection, HorstSimon };
std::string_view to_string(GrowthModel m);

struct GenerationPoint {
  int year = 0;
  double peak_pf = 0.0;
  double mw = 0.0;
  GrowthModel model = GrowthModel::DoeProjection;

  double pf_per_mw() const { return peak_pf / mw; }
};

// 2012 (10 PF, 4 MW) and 2017 (200 PF, 12.9 MW).
std::vector<GenerationPoint> default_anchors();

// Five-year steps from the anchors through horizon_year. DOE: peak PF x20
// per step, MW x3, x3, then x2 for each later step, from the 2017 anchor.
// Horst Simon: same peak PF path, efficiency 2.2K GF/kW in 2012 growing by
// 2K per step, MW = peak PF * 1e6 / (GF/kW) / 1e3. Anchors come back as
// given (DOE) or re-derived from efficiency (Horst Simon).
std::vector<GenerationPoint> project_generations(const std::vector<GenerationPoint>& anchors, int horizon_year,
                                                 GrowthModel model);
double horst_simon_gf_per_kw(int year);

void write_generations_csv(std::ostream& out, const std::vector<GenerationPoint>& doe,
                           const std::vector<GenerationPoint>& horst_simon);

// Whether the ZCCloud extreme-scale system includes a 4 MW traditional base.
enum class BaseMode { WithBase, NoBase };

// Constant per-MW costs: traditional (mw / unit_mw) * (c_compute + c_dcf +
// c_power) + c_net. ZCCloud: the base unit's traditional cost and link,
// plus ((mw - base) / unit_mw) ZCCloud units and their own link.
// Requires mw >= unit_mw.
double extreme_tco(double mw, Approach approach, const CostParams& params, BaseMode mode = BaseMode::WithBase);

// Largest system (MW) the budget pays for; InfeasibleError below one unit.
double mw_per_budget(double budget_musd, Approach approach, const CostParams& params,
                     BaseMode mode = BaseMode::WithBase);
double peak_pflops_per_budget(double budget_musd, Approach approach, const GenerationPoint& generation,
                              const CostParams& params, BaseMode mode = BaseMode::WithBase);

// Effective MWh per $M/year: traditional MW count fully; ZCCloud MW count
// at duty_factor, the base at 1.
double extreme_throughput_cost_eff(double mw, Approach approach, double duty_factor, const CostParams& params,
                                   BaseMode mode = BaseMode::WithBase);

}  // namespace zcc
