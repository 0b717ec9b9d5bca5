#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "zccloud/availability.hpp"
#include "zccloud/workload.hpp"

namespace zcc {

enum class SchedulingPolicy { FcfsEasyBackfill };

// Smooth weighted round-robin over the pools a job is eligible for,
// weighted by unit count; with one Ctr and one Z unit it alternates.
enum class DispatchRule { WeightedAlternating };

struct SystemConfig {
  int ctr_units = 1;
  int z_units = 0;
  AvailabilitySchedule z_schedule;
  std::int32_t nodes_per_unit = kMiraNodes;
  SchedulingPolicy policy = SchedulingPolicy::FcfsEasyBackfill;
  DispatchRule dispatcher = DispatchRule::WeightedAlternating;
  // With oracle admission a job enters or starts on Z only if its walltime
  // fits the remaining uptime. Without it, jobs still running at shutdown
  // are killed and resubmitted to the Ctr queue.
  bool oracle_admission = true;

  int system_units() const { return ctr_units + z_units; }
  // "1Ctr", "3Ctr", "Ctr+2Z", "2Ctr+1Z".
  std::string label() const;
};

struct PoolStats {
  std::string name;
  std::int64_t nodes = 0;
  double up_hours = 0.0;
  double busy_node_hours = 0.0;
  double utilization = 0.0;
  std::size_t jobs_started = 0;
  std::size_t jobs_completed = 0;
  bool operator==(const PoolStats&) const = default;
};

struct SimResult {
  std::string label;
  int ctr_units = 0;
  int z_units = 0;
  double z_duty_factor = 0.0;
  double horizon_days = 0.0;
  double throughput = 0.0;  // completed jobs per day
  double node_hours_delivered = 0.0;
  std::vector<PoolStats> pools;
  double mean_wait_h = 0.0;
  double p95_wait_h = 0.0;
  std::size_t jobs_submitted = 0;
  std::size_t jobs_completed = 0;
  std::size_t jobs_unfinished = 0;
  std::size_t jobs_migrated = 0;
  std::size_t jobs_killed = 0;

  bool operator==(const SimResult&) const = default;
};

struct SimOptions {
  // Newline-delimited JSON, one object per arrival/start/complete/migrate/
  // kill/startup/shutdown event.
  std::ostream* event_log = nullptr;
};

// Event-driven run over the trace horizon. At one instant events apply in
// the order shutdown, startup, completion, arrival (by job order), then a
// scheduling pass per pool; the run is fully deterministic. Jobs still
// queued or running at the horizon end count as unfinished. Jobs queued on
// Z go back to the Ctr queue, keeping their submit-order position, once
// they can no longer complete inside the current window (at the latest at
// shutdown).
//
// Throws ValidationError for a job larger than the Ctr pool.
SimResult simulate(const SystemConfig& config, const WorkloadTrace& trace, const SimOptions& options = {});

// One row per config, sorted by (system units, Z duty factor, Z units).
std::vector<SimResult> throughput_curve(std::span<const SystemConfig> configs, const WorkloadTrace& trace);

void write_sim_csv_header(std::ostream& out);
void write_sim_csv_row(std::ostream& out, const SimResult& r);

}  // namespace zcc
