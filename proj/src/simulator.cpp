#include "zccloud/simulator.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>

#include "zccloud/errors.hpp"

namespace zcc {
namespace {

constexpr std::int32_t kNoNodes = std::numeric_limits<std::int32_t>::max();
constexpr Seconds kNoWall = std::numeric_limits<Seconds>::max();
constexpr Seconds kForever = std::numeric_limits<Seconds>::max();

// Queue membership over job positions (submit order). Each leaf holds the
// job's node count and walltime while queued; inner nodes keep the
// aggregates needed to find the first admissible job in O(log n) for the
// common cases.
class QueueIndex {
 public:
  explicit QueueIndex(std::size_t n) {
    size_ = 1;
    while (size_ < std::max<std::size_t>(n, 1)) size_ <<= 1;
    min_nodes_.assign(2 * size_, kNoNodes);
    min_wall_.assign(2 * size_, kNoWall);
    max_wall_.assign(2 * size_, -1);
  }

  void insert(std::size_t i, std::int32_t nodes, Seconds wall) {
    std::size_t k = i + size_;
    min_nodes_[k] = nodes;
    min_wall_[k] = wall;
    max_wall_[k] = wall;
    pull(k);
    ++count_;
  }

  void erase(std::size_t i) {
    std::size_t k = i + size_;
    min_nodes_[k] = kNoNodes;
    min_wall_[k] = kNoWall;
    max_wall_[k] = -1;
    pull(k);
    --count_;
  }

  std::size_t size() const { return count_; }

  // Leftmost queued job.
  long first() const { return count_ == 0 ? -1 : first_fit(0, kNoNodes - 1, kNoNodes - 1, kNoWall); }

  // Leftmost position >= from whose job either needs at most `any_nodes`
  // nodes, or needs at most `free` nodes and has walltime <= deadline.
  long first_fit(std::size_t from, std::int32_t free, std::int32_t any_nodes, Seconds deadline) const {
    return descend(1, 0, size_, from, free, any_nodes, deadline);
  }

  // Leftmost queued job with walltime > limit.
  long first_wall_above(Seconds limit) const {
    if (max_wall_[1] <= limit) return -1;
    std::size_t k = 1;
    while (k < size_) {
      k = max_wall_[2 * k] > limit ? 2 * k : 2 * k + 1;
    }
    return static_cast<long>(k - size_);
  }

 private:
  void pull(std::size_t k) {
    for (k >>= 1; k >= 1; k >>= 1) {
      min_nodes_[k] = std::min(min_nodes_[2 * k], min_nodes_[2 * k + 1]);
      min_wall_[k] = std::min(min_wall_[2 * k], min_wall_[2 * k + 1]);
      max_wall_[k] = std::max(max_wall_[2 * k], max_wall_[2 * k + 1]);
    }
  }

  long descend(std::size_t k, std::size_t lo, std::size_t hi, std::size_t from, std::int32_t free,
               std::int32_t any_nodes, Seconds deadline) const {
    if (hi <= from) return -1;
    if (min_nodes_[k] > free) return -1;
    if (min_nodes_[k] > any_nodes && min_wall_[k] > deadline) return -1;
    if (k >= size_) return static_cast<long>(lo);
    const std::size_t mid = (lo + hi) / 2;
    const long left = descend(2 * k, lo, mid, from, free, any_nodes, deadline);
    if (left >= 0) return left;
    return descend(2 * k + 1, mid, hi, from, free, any_nodes, deadline);
  }

  std::size_t size_ = 1;
  std::size_t count_ = 0;
  std::vector<std::int32_t> min_nodes_;
  std::vector<Seconds> min_wall_;
  std::vector<Seconds> max_wall_;
};

enum class JobState : std::uint8_t { Pending, Queued, Running, Done };

struct Pool {
  std::string name;
  std::int64_t total = 0;
  std::int64_t free = 0;
  QueueIndex queue;
  // (start + walltime, job) for reservation planning.
  std::set<std::pair<Timestamp, std::size_t>> running;
  double busy_node_seconds = 0.0;
  std::size_t started = 0;
  std::size_t completed = 0;

  Pool(std::string n, std::int64_t nodes, std::size_t jobs)
      : name(std::move(n)), total(nodes), free(nodes), queue(jobs) {}
};

class Engine {
 public:
  Engine(const SystemConfig& config, const WorkloadTrace& trace, const SimOptions& options)
      : cfg_(config), trace_(trace), jobs_(trace.jobs), log_(options.event_log) {
    const std::size_t n = jobs_.size();
    state_.assign(n, JobState::Pending);
    pool_of_.assign(n, -1);
    start_.assign(n, 0);
    tag_.assign(n, 0);
    wait_.assign(n, -1);
    pools_.emplace_back("ctr", static_cast<std::int64_t>(config.ctr_units) * config.nodes_per_unit, n);
    if (config.z_units > 0) {
      pools_.emplace_back("z", static_cast<std::int64_t>(config.z_units) * config.nodes_per_unit, n);
      for (const UpInterval& w : config.z_schedule.up_intervals()) {
        const Timestamp a = std::max(w.start, trace.horizon.start);
        const Timestamp b = std::min(w.end, trace.horizon.end);
        if (b > a) windows_.push_back({a, b});
      }
    }
  }

  SimResult run() {
    const Timestamp h_end = trace_.horizon.end;
    std::size_t next_arrival = 0;
    while (true) {
      Timestamp t = kForever;
      if (next_arrival < jobs_.size()) t = std::min(t, jobs_[next_arrival].submit);
      if (!completions_.empty()) t = std::min(t, std::get<0>(completions_.top()));
      if (z_up_) {
        t = std::min(t, z_end_);
      } else if (next_window_ < windows_.size()) {
        t = std::min(t, windows_[next_window_].start);
      }
      if (t == kForever || t >= h_end) break;

      if (z_up_ && t == z_end_) shutdown(t);
      if (!z_up_ && next_window_ < windows_.size() && windows_[next_window_].start == t) startup(t);
      while (!completions_.empty() && std::get<0>(completions_.top()) == t) {
        const auto [end, job, tag] = completions_.top();
        completions_.pop();
        if (tag == tag_[job] && state_[job] == JobState::Running) complete(job, t);
      }
      while (next_arrival < jobs_.size() && jobs_[next_arrival].submit == t) dispatch(next_arrival++, t);
      schedule(0, t);
      if (z_up_) schedule(1, t);
    }
    return finish();
  }

 private:
  bool oracle() const { return cfg_.oracle_admission; }

  void log(const char* event, Timestamp t, long job, int pool) {
    if (!log_) return;
    char buf[160];
    if (job >= 0) {
      std::snprintf(buf, sizeof buf, "{\"t\":%lld,\"event\":\"%s\",\"job\":%lld,\"pool\":\"%s\"}\n",
                    static_cast<long long>(t), event, static_cast<long long>(jobs_[static_cast<std::size_t>(job)].id),
                    pools_[static_cast<std::size_t>(pool)].name.c_str());
    } else {
      std::snprintf(buf, sizeof buf, "{\"t\":%lld,\"event\":\"%s\",\"pool\":\"%s\"}\n", static_cast<long long>(t),
                    event, pools_[static_cast<std::size_t>(pool)].name.c_str());
    }
    *log_ << buf;
  }

  void enqueue(std::size_t j, int pool) {
    state_[j] = JobState::Queued;
    pool_of_[j] = pool;
    pools_[static_cast<std::size_t>(pool)].queue.insert(j, jobs_[j].nodes, jobs_[j].walltime);
  }

  void migrate_to_ctr(std::size_t j, Timestamp t) {
    pools_[1].queue.erase(j);
    enqueue(j, 0);
    ++migrated_;
    log("migrate", t, static_cast<long>(j), 0);
  }

  void dispatch(std::size_t j, Timestamp t) {
    const Job& job = jobs_[j];
    log("arrival", t, static_cast<long>(j), 0);
    bool z_ok = z_up_ && job.nodes <= pools_[1].total && (!oracle() || job.walltime <= z_end_ - t);
    int target = 0;
    if (z_ok) {
      const long wc = cfg_.ctr_units;
      const long wz = cfg_.z_units;
      credit_ctr_ += wc;
      credit_z_ += wz;
      if (credit_z_ > credit_ctr_) {
        target = 1;
        credit_z_ -= wc + wz;
      } else {
        credit_ctr_ -= wc + wz;
      }
    }
    enqueue(j, target);
  }

  void start(std::size_t j, int pool_idx, Timestamp t) {
    Pool& p = pools_[static_cast<std::size_t>(pool_idx)];
    const Job& job = jobs_[j];
    p.queue.erase(j);
    p.free -= job.nodes;
    if (p.free < 0) throw std::logic_error("pool '" + p.name + "' over-committed");
    if (pool_idx == 1 && oracle() && t + job.walltime > z_end_) {
      throw std::logic_error("job started on Z past the end of the uptime window");
    }
    state_[j] = JobState::Running;
    start_[j] = t;
    wait_[j] = t - job.submit;
    ++p.started;
    p.running.insert({t + job.walltime, j});
    completions_.push({t + job.runtime, j, tag_[j]});
    log("start", t, static_cast<long>(j), pool_idx);
  }

  void complete(std::size_t j, Timestamp t) {
    Pool& p = pools_[static_cast<std::size_t>(pool_of_[j])];
    const Job& job = jobs_[j];
    p.free += job.nodes;
    p.running.erase({start_[j] + job.walltime, j});
    p.busy_node_seconds += static_cast<double>(job.nodes) * static_cast<double>(t - start_[j]);
    ++p.completed;
    ++completed_;
    state_[j] = JobState::Done;
    log("complete", t, static_cast<long>(j), pool_of_[j]);
  }

  void startup(Timestamp t) {
    z_up_ = true;
    z_end_ = windows_[next_window_].end;
    ++next_window_;
    log("startup", t, -1, 1);
  }

  void shutdown(Timestamp t) {
    Pool& z = pools_[1];
    std::vector<std::size_t> to_kill;
    for (const auto& [est_end, j] : z.running) {
      if (start_[j] + jobs_[j].runtime > t) {
        if (oracle()) throw std::logic_error("job running on Z at shutdown");
        to_kill.push_back(j);
      }
    }
    for (std::size_t j : to_kill) {
      const Job& job = jobs_[j];
      z.free += job.nodes;
      z.running.erase({start_[j] + job.walltime, j});
      z.busy_node_seconds += static_cast<double>(job.nodes) * static_cast<double>(t - start_[j]);
      ++tag_[j];
      ++killed_;
      log("kill", t, static_cast<long>(j), 1);
      enqueue(j, 0);
    }
    for (long j = z.queue.first(); j >= 0; j = z.queue.first()) migrate_to_ctr(static_cast<std::size_t>(j), t);
    z_up_ = false;
    log("shutdown", t, -1, 1);
  }

  void schedule(int pool_idx, Timestamp t) {
    Pool& p = pools_[static_cast<std::size_t>(pool_idx)];
    const bool bounded = pool_idx == 1 && oracle();
    if (bounded) {
      for (long j = p.queue.first_wall_above(z_end_ - t); j >= 0; j = p.queue.first_wall_above(z_end_ - t)) {
        migrate_to_ctr(static_cast<std::size_t>(j), t);
      }
    }
    long head = p.queue.first();
    while (head >= 0 && jobs_[static_cast<std::size_t>(head)].nodes <= p.free) {
      start(static_cast<std::size_t>(head), pool_idx, t);
      head = p.queue.first();
    }
    if (head < 0 || p.free == 0) return;

    // EASY reservation for the head: earliest time enough nodes free up,
    // and the nodes left over at that time.
    const Job& h = jobs_[static_cast<std::size_t>(head)];
    Timestamp shadow = kForever;
    std::int64_t extra = std::numeric_limits<std::int32_t>::max();
    std::int64_t acc = p.free;
    for (const auto& [est_end, j] : p.running) {
      acc += jobs_[j].nodes;
      if (acc >= h.nodes) {
        shadow = est_end;
        extra = acc - h.nodes;
        break;
      }
    }
    if (bounded && shadow != kForever && shadow + h.walltime > z_end_) {
      // The head cannot run in this window; nothing to protect.
      shadow = kForever;
      extra = std::numeric_limits<std::int32_t>::max();
    }

    std::size_t from = static_cast<std::size_t>(head) + 1;
    while (p.free > 0) {
      const auto free = static_cast<std::int32_t>(std::min<std::int64_t>(p.free, kNoNodes - 1));
      const auto any = static_cast<std::int32_t>(std::min<std::int64_t>(extra, free));
      const Seconds deadline = shadow == kForever ? kNoWall - 1 : shadow - t;
      const long j = p.queue.first_fit(from, free, any, deadline);
      if (j < 0) break;
      const Job& job = jobs_[static_cast<std::size_t>(j)];
      start(static_cast<std::size_t>(j), pool_idx, t);
      if (shadow != kForever && t + job.walltime > shadow) extra -= job.nodes;
      from = static_cast<std::size_t>(j) + 1;
    }
  }

  SimResult finish() {
    const Timestamp h_end = trace_.horizon.end;
    for (Pool& p : pools_) {
      for (const auto& [est_end, j] : p.running) {
        p.busy_node_seconds += static_cast<double>(jobs_[j].nodes) * static_cast<double>(h_end - start_[j]);
      }
    }
    SimResult r;
    r.label = cfg_.label();
    r.ctr_units = cfg_.ctr_units;
    r.z_units = cfg_.z_units;
    r.z_duty_factor = cfg_.z_units > 0 ? static_cast<double>(cfg_.z_schedule.uptime_within(trace_.horizon.start, h_end)) /
                                             static_cast<double>(trace_.horizon.length())
                                       : 0.0;
    r.horizon_days = trace_.horizon.days();
    r.jobs_submitted = jobs_.size();
    r.jobs_completed = completed_;
    r.jobs_unfinished = jobs_.size() - completed_;
    r.jobs_migrated = migrated_;
    r.jobs_killed = killed_;
    r.throughput = static_cast<double>(completed_) / r.horizon_days;
    for (std::size_t i = 0; i < pools_.size(); ++i) {
      const Pool& p = pools_[i];
      PoolStats s;
      s.name = p.name;
      s.nodes = p.total;
      const Seconds up = i == 0 ? trace_.horizon.length() : cfg_.z_schedule.uptime_within(trace_.horizon.start, h_end);
      s.up_hours = static_cast<double>(up) / kHourSeconds;
      s.busy_node_hours = p.busy_node_seconds / kHourSeconds;
      s.utilization = up > 0 ? p.busy_node_seconds / (static_cast<double>(p.total) * static_cast<double>(up)) : 0.0;
      s.jobs_started = p.started;
      s.jobs_completed = p.completed;
      r.node_hours_delivered += s.busy_node_hours;
      r.pools.push_back(s);
    }
    std::vector<Seconds> waits;
    for (Seconds w : wait_) {
      if (w >= 0) waits.push_back(w);
    }
    if (!waits.empty()) {
      double sum = 0.0;
      for (Seconds w : waits) sum += static_cast<double>(w);
      r.mean_wait_h = sum / static_cast<double>(waits.size()) / kHourSeconds;
      const std::size_t k = std::min(waits.size() - 1, static_cast<std::size_t>(0.95 * static_cast<double>(waits.size())));
      std::nth_element(waits.begin(), waits.begin() + static_cast<std::ptrdiff_t>(k), waits.end());
      r.p95_wait_h = static_cast<double>(waits[k]) / kHourSeconds;
    }
    return r;
  }

  const SystemConfig& cfg_;
  const WorkloadTrace& trace_;
  const std::vector<Job>& jobs_;
  std::ostream* log_;

  std::vector<Pool> pools_;
  std::vector<UpInterval> windows_;
  std::size_t next_window_ = 0;
  bool z_up_ = false;
  Timestamp z_end_ = 0;
  long credit_ctr_ = 0;
  long credit_z_ = 0;

  std::vector<JobState> state_;
  std::vector<int> pool_of_;
  std::vector<Timestamp> start_;
  std::vector<std::uint32_t> tag_;
  std::vector<Seconds> wait_;
  using Completion = std::tuple<Timestamp, std::size_t, std::uint32_t>;
  std::priority_queue<Completion, std::vector<Completion>, std::greater<>> completions_;

  std::size_t completed_ = 0;
  std::size_t migrated_ = 0;
  std::size_t killed_ = 0;
};

}  // namespace

std::string SystemConfig::label() const {
  if (z_units == 0) return std::to_string(ctr_units) + "Ctr";
  return (ctr_units == 1 ? std::string("Ctr") : std::to_string(ctr_units) + "Ctr") + "+" + std::to_string(z_units) + "Z";
}

SimResult simulate(const SystemConfig& config, const WorkloadTrace& trace, const SimOptions& options) {
  if (config.ctr_units < 1) throw ValidationError("a system needs at least one Ctr unit");
  if (config.z_units < 0) throw ValidationError("z_units must be >= 0");
  if (config.nodes_per_unit < 1) throw ValidationError("nodes_per_unit must be >= 1");
  const std::int64_t ctr_nodes = static_cast<std::int64_t>(config.ctr_units) * config.nodes_per_unit;
  for (const Job& j : trace.jobs) {
    if (j.nodes > ctr_nodes) {
      throw ValidationError("job " + std::to_string(j.id) + " needs " + std::to_string(j.nodes) +
                            " nodes, more than the Ctr pool's " + std::to_string(ctr_nodes));
    }
  }
  if (trace.horizon.length() <= 0) throw ValidationError("trace horizon is empty");
  Engine engine(config, trace, options);
  return engine.run();
}

std::vector<SimResult> throughput_curve(std::span<const SystemConfig> configs, const WorkloadTrace& trace) {
  std::vector<SimResult> rows;
  rows.reserve(configs.size());
  for (const SystemConfig& c : configs) rows.push_back(simulate(c, trace));
  std::stable_sort(rows.begin(), rows.end(), [](const SimResult& a, const SimResult& b) {
    return std::tuple(a.ctr_units + a.z_units, a.z_duty_factor, a.z_units) <
           std::tuple(b.ctr_units + b.z_units, b.z_duty_factor, b.z_units);
  });
  return rows;
}

void write_sim_csv_header(std::ostream& out) {
  out << "config,ctr_units,z_units,z_duty_factor,horizon_days,throughput_jobs_per_day,node_hours_delivered,"
         "ctr_utilization,z_utilization,mean_wait_h,p95_wait_h,jobs_submitted,jobs_completed,jobs_unfinished,"
         "jobs_migrated,jobs_killed\n";
}

void write_sim_csv_row(std::ostream& out, const SimResult& r) {
  char buf[512];
  const double z_util = r.pools.size() > 1 ? r.pools[1].utilization : 0.0;
  const double c_util = r.pools.empty() ? 0.0 : r.pools[0].utilization;
  std::snprintf(buf, sizeof buf, "%s,%d,%d,%.6f,%.6f,%.6f,%.3f,%.6f,%.6f,%.6f,%.6f,%zu,%zu,%zu,%zu,%zu\n",
                r.label.c_str(), r.ctr_units, r.z_units, r.z_duty_factor, r.horizon_days, r.throughput,
                r.node_hours_delivered, c_util, z_util, r.mean_wait_h, r.p95_wait_h, r.jobs_submitted,
                r.jobs_completed, r.jobs_unfinished, r.jobs_migrated, r.jobs_killed);
  out << buf;
}

}  // namespace zcc
