#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "zccloud/time_util.hpp"

namespace zcc {

inline constexpr std::int32_t kMiraNodes = 49152;

struct Job {
  std::int64_t id = 0;
  Timestamp submit = 0;
  std::int32_t nodes = 1;
  Seconds runtime = 1;   // actual
  Seconds walltime = 1;  // requested; >= runtime

  double node_hours() const { return static_cast<double>(nodes) * static_cast<double>(runtime) / kHourSeconds; }
  bool operator==(const Job&) const = default;
};

struct WorkloadStats {
  std::size_t n_jobs = 0;
  double runtime_mean_h = 0.0;
  double runtime_stdev_h = 0.0;
  double runtime_min_h = 0.0;
  double runtime_max_h = 0.0;
  double nodes_mean = 0.0;
  double nodes_stdev = 0.0;
  std::int32_t nodes_min = 0;
  std::int32_t nodes_max = 0;
  double node_hours = 0.0;
  // Submitted node-hours over reference_nodes * horizon.
  double utilization = 0.0;
};

struct WorkloadTrace {
  std::vector<Job> jobs;  // ordered by (submit, id)
  Horizon horizon;
  std::int32_t reference_nodes = kMiraNodes;
  WorkloadStats stats;

  double jobs_per_day() const { return static_cast<double>(jobs.size()) / horizon.days(); }
};

WorkloadStats compute_stats(const std::vector<Job>& jobs, std::int32_t reference_nodes, const Horizon& horizon);

// Sorts jobs, recomputes stats and checks every job invariant. Throws
// ValidationError naming the first offending job.
WorkloadTrace make_trace(std::vector<Job> jobs, const Horizon& horizon, std::int32_t reference_nodes);

// Whitespace-separated `job_id submit_unix_s nodes runtime_s walltime_s`
// rows, `#` comments. A walltime of -1 means "same as runtime". Optional
// header directives `# horizon_start <s>`, `# horizon_end <s>` and
// `# reference_nodes <n>` override the defaults; without them the horizon
// spans whole days from the first submit past the last one.
WorkloadTrace load_trace(const std::filesystem::path& path, std::int32_t reference_nodes = kMiraNodes);
WorkloadTrace parse_trace(std::istream& in, std::int32_t reference_nodes = kMiraNodes);
void write_trace(std::ostream& out, const WorkloadTrace& trace);
void write_trace(const std::filesystem::path& path, const WorkloadTrace& trace);

enum class NodeRounding { PowerOfTwo, Nearest };

// Target marginals of a generated workload.
struct WorkloadTargets {
  double runtime_mean_h = 1.7;
  double runtime_stdev_h = 3.0;
  double runtime_min_h = 0.004;
  double runtime_max_h = 82.0;
  double nodes_mean = 1975.0;
  double nodes_stdev = 4100.0;
  double utilization = 0.84;

  bool operator==(const WorkloadTargets&) const = default;
};

struct SynthWorkloadConfig {
  WorkloadTargets targets;
  std::int32_t reference_nodes = kMiraNodes;
  Timestamp epoch = kDefaultEpoch;
  Seconds horizon = 365 * kDaySeconds;
  std::uint64_t seed = 1;
  NodeRounding node_rounding = NodeRounding::PowerOfTwo;
  // Spearman rank correlation between runtime and node count (Gaussian copula).
  double rank_correlation = 0.0;
  // walltime = ceil(runtime * walltime_factor).
  double walltime_factor = 1.0;

  // Table-I marginals on Mira, with the rank correlation that makes the
  // 84% utilization target land on the trace's ~78.8k jobs per year.
  static SynthWorkloadConfig mira_calibrated();

  bool operator==(const SynthWorkloadConfig&) const = default;
};

void validate(const SynthWorkloadConfig& config);

// Log-normal marginals by moment matching, runtime truncated to
// (min, max] by resampling, node counts rounded and clamped to
// [1, reference_nodes]. Poisson arrivals whose rate is chosen so submitted
// node-hours match the utilization target within 1%.
WorkloadTrace synthesize_workload(const SynthWorkloadConfig& config);

// Appends bootstrap-resampled jobs with fresh uniform-order-statistic
// (Poisson) arrivals until node-hours reach factor x original (within 1%).
// Original jobs are kept unchanged.
WorkloadTrace scale_workload(const WorkloadTrace& trace, double factor, std::uint64_t seed);

// nodes *= compute_factor, clamped to max_nodes (0 = the trace's
// reference_nodes), which becomes the result's reference_nodes. Runtimes
// and job count are unchanged.
WorkloadTrace scale_job_size(const WorkloadTrace& trace, double compute_factor, std::int32_t max_nodes = 0);

std::int32_t round_nodes(double raw, NodeRounding rule, std::int32_t max_nodes);

}  // namespace zcc
