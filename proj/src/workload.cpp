#include "zccloud/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "zccloud/errors.hpp"
#include "zccloud/random.hpp"

namespace zcc {
namespace {

void sort_jobs(std::vector<Job>& jobs) {
  std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    return a.submit != b.submit ? a.submit < b.submit : a.id < b.id;
  });
}

std::string describe(const Job& j) { return "job " + std::to_string(j.id); }

}  // namespace

std::int32_t round_nodes(double raw, NodeRounding rule, std::int32_t max_nodes) {
  double v = std::max(raw, 1.0);
  if (rule == NodeRounding::PowerOfTwo) v = std::exp2(std::round(std::log2(v)));
  const double r = std::round(v);
  return static_cast<std::int32_t>(std::clamp(r, 1.0, static_cast<double>(max_nodes)));
}

WorkloadStats compute_stats(const std::vector<Job>& jobs, std::int32_t reference_nodes, const Horizon& horizon) {
  WorkloadStats s;
  s.n_jobs = jobs.size();
  if (jobs.empty()) return s;
  double rt_sum = 0.0, rt_sq = 0.0, nd_sum = 0.0, nd_sq = 0.0;
  s.runtime_min_h = std::numeric_limits<double>::infinity();
  s.nodes_min = std::numeric_limits<std::int32_t>::max();
  for (const Job& j : jobs) {
    const double h = static_cast<double>(j.runtime) / kHourSeconds;
    rt_sum += h;
    rt_sq += h * h;
    nd_sum += j.nodes;
    nd_sq += static_cast<double>(j.nodes) * j.nodes;
    s.runtime_min_h = std::min(s.runtime_min_h, h);
    s.runtime_max_h = std::max(s.runtime_max_h, h);
    s.nodes_min = std::min(s.nodes_min, j.nodes);
    s.nodes_max = std::max(s.nodes_max, j.nodes);
    s.node_hours += j.node_hours();
  }
  const double n = static_cast<double>(jobs.size());
  s.runtime_mean_h = rt_sum / n;
  s.nodes_mean = nd_sum / n;
  if (jobs.size() > 1) {
    s.runtime_stdev_h = std::sqrt(std::max(0.0, (rt_sq - n * s.runtime_mean_h * s.runtime_mean_h) / (n - 1)));
    s.nodes_stdev = std::sqrt(std::max(0.0, (nd_sq - n * s.nodes_mean * s.nodes_mean) / (n - 1)));
  }
  if (horizon.length() > 0 && reference_nodes > 0) {
    s.utilization = s.node_hours / (static_cast<double>(reference_nodes) * horizon.hours());
  }
  return s;
}

WorkloadTrace make_trace(std::vector<Job> jobs, const Horizon& horizon, std::int32_t reference_nodes) {
  if (reference_nodes <= 0) throw ValidationError("reference_nodes must be > 0");
  if (horizon.length() <= 0) throw ValidationError("trace horizon is empty");
  for (const Job& j : jobs) {
    if (j.nodes < 1) throw ValidationError(describe(j) + ": nodes must be >= 1");
    if (j.nodes > reference_nodes) {
      throw ValidationError(describe(j) + ": " + std::to_string(j.nodes) + " nodes exceeds system size " +
                            std::to_string(reference_nodes));
    }
    if (j.runtime <= 0) throw ValidationError(describe(j) + ": runtime must be > 0");
    if (j.walltime < j.runtime) throw ValidationError(describe(j) + ": walltime shorter than runtime");
    if (!horizon.contains(j.submit)) throw ValidationError(describe(j) + ": submit time outside the horizon");
  }
  sort_jobs(jobs);
  WorkloadTrace t;
  t.horizon = horizon;
  t.reference_nodes = reference_nodes;
  t.stats = compute_stats(jobs, reference_nodes, horizon);
  t.jobs = std::move(jobs);
  return t;
}

WorkloadTrace parse_trace(std::istream& in, std::int32_t reference_nodes) {
  std::vector<Job> jobs;
  std::optional<Timestamp> h_start, h_end;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::istringstream fields(line.substr(first));
    if (line[first] == '#' || line[first] == ';') {
      std::string hash, key;
      long long value = 0;
      fields >> hash >> key;
      if (key == "horizon_start" || key == "horizon_end" || key == "reference_nodes") {
        if (!(fields >> value)) throw ParseError(line_no, "bad value for directive '" + key + "'");
        if (key == "horizon_start") h_start = value;
        if (key == "horizon_end") h_end = value;
        if (key == "reference_nodes") reference_nodes = static_cast<std::int32_t>(value);
      }
      continue;
    }
    long long id = 0, submit = 0, nodes = 0, runtime = 0, walltime = 0;
    if (!(fields >> id >> submit >> nodes >> runtime >> walltime)) {
      throw ParseError(line_no, "expected 'job_id submit_unix_s nodes runtime_s walltime_s'");
    }
    if (nodes < 1) throw ParseError(line_no, "nodes must be >= 1");
    if (nodes > reference_nodes) {
      throw ParseError(line_no, std::to_string(nodes) + " nodes exceeds system size " + std::to_string(reference_nodes));
    }
    if (runtime <= 0) throw ParseError(line_no, "runtime must be > 0");
    if (walltime == -1) walltime = runtime;
    if (walltime < runtime) throw ParseError(line_no, "walltime shorter than runtime");
    jobs.push_back({id, submit, static_cast<std::int32_t>(nodes), runtime, walltime});
  }
  if (jobs.empty()) throw EmptyInputError("trace contains no jobs");
  Horizon h;
  const auto [lo, hi] = std::minmax_element(jobs.begin(), jobs.end(),
                                            [](const Job& a, const Job& b) { return a.submit < b.submit; });
  h.start = h_start.value_or(lo->submit);
  if (h_end) {
    h.end = *h_end;
  } else {
    const Seconds span = hi->submit - h.start + 1;
    h.end = h.start + (span + kDaySeconds - 1) / kDaySeconds * kDaySeconds;
  }
  return make_trace(std::move(jobs), h, reference_nodes);
}

WorkloadTrace load_trace(const std::filesystem::path& path, std::int32_t reference_nodes) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace '" + path.string() + "'");
  return parse_trace(in, reference_nodes);
}

void write_trace(std::ostream& out, const WorkloadTrace& trace) {
  out << "# job_id submit_unix_s nodes runtime_s walltime_s\n";
  out << "# horizon_start " << trace.horizon.start << "\n";
  out << "# horizon_end " << trace.horizon.end << "\n";
  out << "# reference_nodes " << trace.reference_nodes << "\n";
  for (const Job& j : trace.jobs) {
    out << j.id << ' ' << j.submit << ' ' << j.nodes << ' ' << j.runtime << ' ' << j.walltime << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const WorkloadTrace& trace) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  write_trace(out, trace);
}

SynthWorkloadConfig SynthWorkloadConfig::mira_calibrated() {
  SynthWorkloadConfig c;
  c.rank_correlation = 0.21;
  return c;
}

void validate(const SynthWorkloadConfig& c) {
  const WorkloadTargets& t = c.targets;
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("workload config: ") + what);
  };
  require(c.reference_nodes > 0, "reference_nodes must be > 0");
  require(c.horizon > 0, "horizon must be > 0");
  require(t.utilization > 0.0 && t.utilization <= 1.0, "utilization must lie in (0, 1]");
  require(t.runtime_mean_h > 0.0 && t.runtime_stdev_h > 0.0, "runtime moments must be > 0");
  require(t.nodes_mean > 0.0 && t.nodes_stdev > 0.0, "node moments must be > 0");
  require(t.runtime_min_h >= 0.0 && t.runtime_max_h > t.runtime_min_h, "runtime bounds must satisfy 0 <= min < max");
  require(t.runtime_mean_h > t.runtime_min_h && t.runtime_mean_h < t.runtime_max_h, "runtime mean outside bounds");
  require(c.rank_correlation > -1.0 && c.rank_correlation < 1.0, "rank_correlation must lie in (-1, 1)");
  require(c.walltime_factor >= 1.0, "walltime_factor must be >= 1");
}

WorkloadTrace synthesize_workload(const SynthWorkloadConfig& c) {
  validate(c);
  const WorkloadTargets& t = c.targets;
  const auto runtime_law = LogNormalParams::from_moments(t.runtime_mean_h, t.runtime_stdev_h);
  const auto nodes_law = LogNormalParams::from_moments(t.nodes_mean, t.nodes_stdev);
  // Spearman -> Pearson for the underlying Gaussian pair.
  const double rho = 2.0 * std::sin(std::numbers::pi * c.rank_correlation / 6.0);
  const double rho_c = std::sqrt(1.0 - rho * rho);

  Rng attr(c.seed ^ 0x6a6f627300000001ULL);
  Rng arrivals(c.seed ^ 0x6172727600000002ULL);
  const double target_nh = t.utilization * c.reference_nodes * (static_cast<double>(c.horizon) / kHourSeconds);

  std::vector<Job> jobs;
  std::vector<double> cum_gap;  // cumulative unit-rate arrival epochs
  double nh = 0.0;
  double s = 0.0;
  while (nh < target_nh * 1.02) {
    double hours = 0.0;
    double z_nodes = 0.0;
    do {
      const double z1 = attr.normal();
      const double z2 = attr.normal();
      hours = runtime_law.sample(z1);
      z_nodes = rho * z1 + rho_c * z2;
    } while (hours <= t.runtime_min_h || hours > t.runtime_max_h);
    Job j;
    j.id = static_cast<std::int64_t>(jobs.size()) + 1;
    j.runtime = std::max<Seconds>(1, std::llround(hours * kHourSeconds));
    j.walltime = static_cast<Seconds>(std::ceil(static_cast<double>(j.runtime) * c.walltime_factor));
    j.nodes = round_nodes(nodes_law.sample(z_nodes), c.node_rounding, c.reference_nodes);
    nh += j.node_hours();
    s += arrivals.exponential(1.0);
    cum_gap.push_back(s);
    jobs.push_back(j);
  }
  cum_gap.push_back(s + arrivals.exponential(1.0));

  // Keep the prefix whose node-hours are closest to the target; choose the
  // Poisson rate so that exactly that many arrivals fall in the horizon.
  std::size_t best_k = 0;
  double best_err = target_nh;
  double running = 0.0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    running += jobs[k].node_hours();
    const double err = std::abs(running - target_nh);
    if (err < best_err) {
      best_err = err;
      best_k = k + 1;
    }
  }
  if (best_err > 0.01 * target_nh) {
    throw CalibrationError("arrival-rate calibration missed the utilization target", (target_nh - best_err) / target_nh * t.utilization);
  }
  jobs.resize(best_k);
  const double units_per_horizon = 0.5 * (cum_gap[best_k - 1] + cum_gap[best_k]);
  const double scale = static_cast<double>(c.horizon) / units_per_horizon;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    jobs[k].submit = c.epoch + static_cast<Seconds>(std::floor(cum_gap[k] * scale));
  }
  return make_trace(std::move(jobs), {c.epoch, c.epoch + c.horizon}, c.reference_nodes);
}

WorkloadTrace scale_workload(const WorkloadTrace& trace, double factor, std::uint64_t seed) {
  if (!(factor >= 1.0)) throw ValidationError("workload scale factor must be >= 1");
  if (factor == 1.0 || trace.jobs.empty()) return trace;
  const double original_nh = trace.stats.node_hours;
  const double target_added = (factor - 1.0) * original_nh;

  Rng pick(seed ^ 0x7363616c00000001ULL);
  std::vector<Job> added;
  double nh = 0.0;
  while (true) {
    const Job& src = trace.jobs[pick.index(trace.jobs.size())];
    // Stop at whichever side of the target is closer.
    if (nh + src.node_hours() > target_added && (nh + src.node_hours() - target_added) > (target_added - nh)) break;
    added.push_back(src);
    nh += src.node_hours();
    if (nh >= target_added) break;
  }

  Rng when(seed ^ 0x7768656e00000002ULL);
  std::vector<Timestamp> times(added.size());
  for (Timestamp& ts : times) {
    ts = trace.horizon.start + static_cast<Seconds>(std::floor(when.uniform() * static_cast<double>(trace.horizon.length())));
  }
  std::sort(times.begin(), times.end());
  std::int64_t next_id = 0;
  for (const Job& j : trace.jobs) next_id = std::max(next_id, j.id);
  std::vector<Job> jobs = trace.jobs;
  jobs.reserve(jobs.size() + added.size());
  for (std::size_t i = 0; i < added.size(); ++i) {
    Job j = added[i];
    j.id = ++next_id;
    j.submit = times[i];
    jobs.push_back(j);
  }
  return make_trace(std::move(jobs), trace.horizon, trace.reference_nodes);
}

WorkloadTrace scale_job_size(const WorkloadTrace& trace, double compute_factor, std::int32_t max_nodes) {
  if (!(compute_factor >= 1.0)) throw ValidationError("compute factor must be >= 1");
  if (max_nodes <= 0) max_nodes = trace.reference_nodes;
  std::vector<Job> jobs = trace.jobs;
  for (Job& j : jobs) {
    const double scaled = std::round(static_cast<double>(j.nodes) * compute_factor);
    j.nodes = static_cast<std::int32_t>(std::min(scaled, static_cast<double>(max_nodes)));
  }
  return make_trace(std::move(jobs), trace.horizon, max_nodes);
}

}  // namespace zcc
