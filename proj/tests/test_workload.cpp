#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "zccloud/errors.hpp"
#include "zccloud/workload.hpp"

using namespace zcc;

namespace {

WorkloadTrace parse(const std::string& text, std::int32_t ref = kMiraNodes) {
  std::istringstream in(text);
  return parse_trace(in, ref);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("two job file gives stats of the two") {
  const auto t = parse("# comment\n1 1000 512 3600 -1\n2 2000 1024 7200 9000\n");
  REQUIRE(t.jobs.size() == 2);
  CHECK(t.jobs[0].walltime == 3600);
  CHECK(t.jobs[1].walltime == 9000);
  CHECK(t.stats.n_jobs == 2);
  CHECK(t.stats.runtime_mean_h == doctest::Approx(1.5));
  CHECK(t.stats.nodes_mean == doctest::Approx(768.0));
  CHECK(t.stats.nodes_min == 512);
  CHECK(t.stats.nodes_max == 1024);
  CHECK(t.stats.node_hours == doctest::Approx(512.0 + 2048.0));
  CHECK(t.horizon.start == 1000);
  CHECK(t.horizon.end == 1000 + kDaySeconds);
}

TEST_CASE("trace parse errors") {
  CHECK_THROWS_AS(parse(""), EmptyInputError);
  CHECK_THROWS_AS(parse("# only comments\n\n"), EmptyInputError);
  try {
    parse("1 0 10 60 60\n2 5 99999 60 60\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("1 0 -4 60 60\n"), ParseError);
  CHECK_THROWS_AS(parse("1 0 4 -60 60\n"), ParseError);
  CHECK_THROWS_AS(parse("1 0 4 60 30\n"), ParseError);
  CHECK_THROWS_AS(parse("1 0 4 sixty 60\n"), ParseError);
  CHECK_THROWS_AS(parse("# horizon_end soon\n1 0 4 60 60\n"), ParseError);
  CHECK_THROWS_AS(load_trace("/nonexistent/trace.txt"), ValidationError);
}

TEST_CASE("write then parse round trips") {
  SynthWorkloadConfig c;
  c.horizon = 7 * kDaySeconds;
  c.seed = 4;
  const auto t = synthesize_workload(c);
  std::ostringstream out;
  write_trace(out, t);
  const auto back = parse(out.str());
  CHECK(back.jobs == t.jobs);
  CHECK(back.horizon == t.horizon);
  CHECK(back.reference_nodes == t.reference_nodes);
}

TEST_CASE("make_trace checks invariants") {
  const Horizon h{0, kDaySeconds};
  CHECK_THROWS_AS(make_trace({{1, 0, 0, 10, 10}}, h, 16), ValidationError);
  CHECK_THROWS_AS(make_trace({{1, 0, 32, 10, 10}}, h, 16), ValidationError);
  CHECK_THROWS_AS(make_trace({{1, 0, 4, 10, 5}}, h, 16), ValidationError);
  CHECK_THROWS_AS(make_trace({{1, kDaySeconds, 4, 10, 10}}, h, 16), ValidationError);
  const auto t = make_trace({{2, 50, 4, 10, 10}, {1, 50, 4, 10, 10}, {3, 10, 4, 10, 10}}, h, 16);
  CHECK(t.jobs[0].id == 3);
  CHECK(t.jobs[1].id == 1);
  CHECK(t.jobs[2].id == 2);
}

TEST_CASE("Mira-calibrated year matches the trace size and moments") {
  const auto t = synthesize_workload(SynthWorkloadConfig::mira_calibrated());
  CHECK(std::fabs(static_cast<double>(t.jobs.size()) - 78795.0) <= 0.05 * 78795.0);
  CHECK(oracle::near(t.stats.utilization, 0.84, 0.0084));
  CHECK(t.stats.nodes_min >= 1);
  CHECK(t.stats.nodes_max <= kMiraNodes);
  CHECK(t.stats.runtime_max_h <= 82.0 + 1e-9);
}

TEST_CASE("sample moments over ten seeds") {
  std::vector<double> rt;
  std::vector<double> nodes;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    SynthWorkloadConfig c = SynthWorkloadConfig::mira_calibrated();
    c.seed = seed;
    c.horizon = 120 * kDaySeconds;
    const auto t = synthesize_workload(c);
    rt.push_back(t.stats.runtime_mean_h);
    nodes.push_back(t.stats.nodes_mean);
    for (const Job& j : t.jobs) {
      REQUIRE(j.nodes >= 1);
      REQUIRE(j.nodes <= kMiraNodes);
      REQUIRE(((j.nodes & (j.nodes - 1)) == 0 || j.nodes == kMiraNodes));
      REQUIRE(j.runtime > 0);
      REQUIRE(j.walltime >= j.runtime);
      REQUIRE(t.horizon.contains(j.submit));
    }
  }
  CHECK(std::fabs(mean_of(rt) - 1.7) <= 0.05 * 1.7);
  CHECK(std::fabs(mean_of(nodes) - 1975.0) <= 0.10 * 1975.0);
}

TEST_CASE("synthesis is deterministic per seed") {
  SynthWorkloadConfig c;
  c.horizon = 5 * kDaySeconds;
  const auto a = synthesize_workload(c);
  const auto b = synthesize_workload(c);
  CHECK(a.jobs == b.jobs);
  c.seed = 2;
  CHECK(synthesize_workload(c).jobs != a.jobs);
}

TEST_CASE("config validation") {
  SynthWorkloadConfig c;
  c.targets.utilization = 0.0;
  CHECK_THROWS_AS(synthesize_workload(c), ConfigError);
  c = {};
  c.targets.runtime_mean_h = -1.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = {};
  c.horizon = 0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("walltime factor and node rounding") {
  SynthWorkloadConfig c;
  c.horizon = 5 * kDaySeconds;
  c.walltime_factor = 1.5;
  for (const Job& j : synthesize_workload(c).jobs) {
    CHECK(j.walltime == static_cast<Seconds>(std::ceil(static_cast<double>(j.runtime) * 1.5)));
  }
  CHECK(round_nodes(2800.0, NodeRounding::PowerOfTwo, kMiraNodes) == 2048);
  CHECK(round_nodes(3000.0, NodeRounding::PowerOfTwo, kMiraNodes) == 4096);
  CHECK(round_nodes(0.2, NodeRounding::PowerOfTwo, kMiraNodes) == 1);
  CHECK(round_nodes(1e9, NodeRounding::PowerOfTwo, kMiraNodes) == kMiraNodes);
  CHECK(round_nodes(3000.4, NodeRounding::Nearest, kMiraNodes) == 3000);
}

TEST_CASE("workload scaling") {
  SynthWorkloadConfig c;
  c.horizon = 30 * kDaySeconds;
  const auto t = synthesize_workload(c);
  const auto same = scale_workload(t, 1.0, 9);
  CHECK(same.jobs == t.jobs);

  const auto doubled = scale_workload(t, 2.0, 9);
  CHECK(oracle::near(doubled.stats.node_hours / t.stats.node_hours, 2.0, 0.02));
  CHECK(doubled.horizon == t.horizon);

  std::set<std::pair<std::int32_t, Seconds>> support;
  for (const Job& j : t.jobs) support.insert({j.nodes, j.runtime});
  std::map<std::int64_t, Job> originals;
  for (const Job& j : t.jobs) originals[j.id] = j;
  std::set<std::int64_t> ids;
  for (const Job& j : doubled.jobs) {
    CHECK(support.count({j.nodes, j.runtime}) == 1);
    CHECK(ids.insert(j.id).second);
    if (auto it = originals.find(j.id); it != originals.end()) CHECK(it->second == j);
  }
  for (const auto& [id, j] : originals) CHECK(ids.count(id) == 1);

  CHECK(scale_workload(t, 3.0, 5).jobs == scale_workload(t, 3.0, 5).jobs);
  CHECK_THROWS_AS(scale_workload(t, 0.5, 1), ValidationError);
}

TEST_CASE("job size scaling") {
  const auto t = make_trace({{1, 0, 100, 60, 60}, {2, 10, 30000, 60, 60}}, {0, kDaySeconds}, kMiraNodes);
  CHECK(scale_job_size(t, 1.0).jobs == t.jobs);
  const auto s = scale_job_size(t, 2.0);
  CHECK(s.jobs[0].nodes == 200);
  CHECK(s.jobs[1].nodes == kMiraNodes);
  CHECK(s.jobs.size() == t.jobs.size());
  CHECK(s.jobs[0].runtime == 60);
  CHECK_THROWS_AS(scale_job_size(t, 0.5), ValidationError);
}
