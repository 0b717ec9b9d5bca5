#include "zccloud/tco.hpp"

#include <cmath>

#include "zccloud/errors.hpp"
#include "zccloud/simulator.hpp"

namespace zcc {
namespace {

void require_finite_nonneg(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) throw ValidationError(std::string(name) + " must be a finite value >= 0");
}

TcoReport empty_report(Approach a, int ctr, int z) {
  TcoReport r;
  r.approach = a;
  r.ctr_units = ctr;
  r.z_units = z;
  for (const std::string& k : tco_component_names()) r.components[k] = 0.0;
  return r;
}

void finish(TcoReport& r) {
  r.total = 0.0;
  for (const auto& [k, v] : r.components) r.total += v;
}

}  // namespace

double amortize(const AmortizationInput& in) {
  if (!(in.rate_r > 0.0) || !std::isfinite(in.rate_r)) {
    throw ValidationError("amortization needs a cost of capital r > 0");
  }
  if (!(in.years_l >= 1.0) || !std::isfinite(in.years_l)) throw ValidationError("amortization period must be >= 1 year");
  if (!(in.price > 0.0) || !(in.size > 0.0)) throw ValidationError("price and size must be > 0");
  const double capex = in.price * in.size;
  return in.rate_r * capex / (1.0 - std::pow(1.0 + in.rate_r, -in.years_l)) / 1e6;
}

std::vector<DetailedCost> detailed_cost_table() {
  return {
      {"compute", "$24M/MW", "4MW", {24e6, 4.0, 0.03, 5.0}, 21.0},
      {"network", "$13k/mile", "500 miles", {13e3, 500.0, 0.03, 10.0}, 0.8},
      {"ssd", "$0.67/GB", "2PB", {0.67, 2e6, 0.03, 5.0}, 0.3},
      {"battery", "$350/kWh", "1MWh", {350.0, 1000.0, 0.03, 5.0}, 0.1},
      {"container", "$5M/MW", "4MW", {5e6, 4.0, 0.03, 12.0}, 2.0},
      {"cooling", "$700k/MW", "4MW", {700e3, 4.0, 0.03, 10.0}, 0.3},
  };
}

CostParams CostParams::from_detailed_table() {
  CostParams p;
  for (const DetailedCost& row : detailed_cost_table()) {
    const double v = amortize(row.input);
    if (row.component == "compute") {
      p.c_compute = v;
      p.c_dcf = v;
    } else if (row.component == "network") {
      p.c_net = v;
    } else if (row.component == "ssd") {
      p.c_ssd = v;
    } else if (row.component == "battery") {
      p.c_battery = v;
    } else if (row.component == "container") {
      p.c_ctnr = v;
    } else if (row.component == "cooling") {
      p.c_cool = v;
    }
  }
  p.c_power = p.derived_c_power();
  return p;
}

CostParams CostParams::with_power_price(double usd_per_mwh) const {
  CostParams p = *this;
  p.power_price = usd_per_mwh;
  p.c_power = p.derived_c_power();
  validate(p);
  return p;
}

CostParams CostParams::with_compute_factor(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ValidationError("compute price factor must be > 0");
  CostParams p = *this;
  p.c_compute *= factor;
  return p;
}

CostParams CostParams::with_density(double d) const {
  CostParams p = *this;
  p.density = d;
  validate(p);
  return p;
}

void validate(const CostParams& p) {
  require_finite_nonneg(p.c_compute, "c_compute");
  require_finite_nonneg(p.c_dcf, "c_dcf");
  require_finite_nonneg(p.c_power, "c_power");
  require_finite_nonneg(p.c_net, "c_net");
  require_finite_nonneg(p.c_ssd, "c_ssd");
  require_finite_nonneg(p.c_battery, "c_battery");
  require_finite_nonneg(p.c_ctnr, "c_ctnr");
  require_finite_nonneg(p.c_cool, "c_cool");
  require_finite_nonneg(p.power_price, "power_price");
  if (!(p.density > 0.0) || !std::isfinite(p.density)) throw ValidationError("density must be > 0");
  if (!(p.unit_mw > 0.0) || !std::isfinite(p.unit_mw)) throw ValidationError("unit_mw must be > 0");
  if (!(p.unit_peak_pflops > 0.0) || !std::isfinite(p.unit_peak_pflops)) {
    throw ValidationError("unit_peak_pflops must be > 0");
  }
}

std::string_view to_string(Approach a) {
  switch (a) {
    case Approach::Traditional:
      return "traditional";
    case Approach::ZCCloud:
      return "zccloud";
    case Approach::Mixed:
      return "mixed";
  }
  return "?";
}

const std::vector<std::string>& tco_component_names() {
  static const std::vector<std::string> names = {"compute", "dcf", "power", "net",
                                                 "ssd", "battery", "container", "cooling"};
  return names;
}

TcoReport tco_traditional(int n, const CostParams& p) {
  if (n < 1) throw ValidationError("traditional TCO needs n >= 1");
  validate(p);
  TcoReport r = empty_report(Approach::Traditional, n, 0);
  r.components["compute"] = n * p.c_compute;
  r.components["dcf"] = n * p.c_dcf * p.density;
  r.components["power"] = n * p.c_power * p.density;
  r.components["net"] = p.c_net;
  finish(r);
  return r;
}

TcoReport tco_zccloud(int n, const CostParams& p) {
  if (n < 1) throw ValidationError("ZCCloud TCO needs n >= 1");
  validate(p);
  TcoReport r = empty_report(Approach::ZCCloud, 0, n);
  r.components["compute"] = n * p.c_compute;
  r.components["ssd"] = n * p.c_ssd;
  r.components["battery"] = n * p.c_battery;
  r.components["container"] = n * p.c_ctnr * p.density;
  r.components["cooling"] = n * p.c_cool * p.density;
  r.components["net"] = p.c_net;
  finish(r);
  return r;
}

TcoReport tco_mixed(int ctr_units, int z_units, const CostParams& p) {
  if (z_units < 0) throw ValidationError("z_units must be >= 0");
  TcoReport r = tco_traditional(ctr_units, p);
  if (z_units == 0) return r;
  r.approach = Approach::Mixed;
  const TcoReport z = tco_zccloud(z_units, p);
  for (const auto& [k, v] : z.components) r.components[k] += v;
  r.z_units = z_units;
  finish(r);
  return r;
}

double cost_performance(double throughput, const TcoReport& report) {
  if (!(report.total > 0.0)) throw ValidationError("cost-performance needs a positive TCO");
  return throughput / report.total;
}

double cost_performance(const SimResult& result, const TcoReport& report) {
  return cost_performance(result.throughput, report);
}

}  // namespace zcc
