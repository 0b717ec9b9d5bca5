#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace zcc {

struct SimResult;

// One capital component, annualized: price in $ per size unit.
struct AmortizationInput {
  double price = 0.0;
  double size = 0.0;
  double rate_r = 0.03;
  double years_l = 1.0;
};

// r * price * size / (1 - (1 + r)^-l), in $M/year. Throws ValidationError
// for r <= 0, l < 1 or a non-positive price or size.
double amortize(const AmortizationInput& input);

struct DetailedCost {
  std::string component;
  std::string price_label;
  std::string size_label;
  AmortizationInput input;
  double published_musd;  // the rounded per-unit annual cost it feeds
};

// Compute, network, SSD, battery, container and free-cooling rows.
std::vector<DetailedCost> detailed_cost_table();

// All money in $M per unit per year except c_net ($M/year per site).
struct CostParams {
  double c_compute = 21.0;
  double c_dcf = 21.0;
  double c_power = 2.1;
  double c_net = 0.8;
  double c_ssd = 0.3;
  double c_battery = 0.1;
  double c_ctnr = 2.0;
  double c_cool = 0.3;
  double density = 1.0;
  double power_price = 60.0;  // $/MWh
  double unit_mw = 4.0;
  double unit_peak_pflops = 10.0;

  // The built-in "mira-baseline" profile.
  static CostParams mira_baseline() { return {}; }
  // Same profile with every cost taken from amortize() over the detailed
  // table instead of the rounded values.
  static CostParams from_detailed_table();

  // c_power = unit_mw * 8760 h * price / 1e6.
  CostParams with_power_price(double usd_per_mwh) const;
  CostParams with_compute_factor(double factor) const;
  CostParams with_density(double d) const;

  double derived_c_power() const { return unit_mw * 8760.0 * power_price / 1e6; }

  bool operator==(const CostParams&) const = default;
};

void validate(const CostParams& params);

enum class Approach { Traditional, ZCCloud, Mixed };
std::string_view to_string(Approach a);

// Component keys: compute, dcf, power, net, ssd, battery, container, cooling.
struct TcoReport {
  Approach approach = Approach::Traditional;
  int ctr_units = 0;
  int z_units = 0;
  double total = 0.0;
  std::map<std::string, double> components;

  int n_units() const { return ctr_units + z_units; }
};

const std::vector<std::string>& tco_component_names();

// n * (c_compute + (c_dcf + c_power) * density) + c_net.
TcoReport tco_traditional(int n, const CostParams& params);
// n * (c_compute + c_ssd + c_battery + (c_ctnr + c_cool) * density) + c_net.
TcoReport tco_zccloud(int n, const CostParams& params);
// Traditional part plus ZCCloud part, each paying its own network link.
// With z_units == 0 this is the traditional report.
TcoReport tco_mixed(int ctr_units, int z_units, const CostParams& params);

// Jobs/day per $M/year.
double cost_performance(double throughput, const TcoReport& report);
double cost_performance(const SimResult& result, const TcoReport& report);

}  // namespace zcc
