#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "zccloud/cli.hpp"
#include "zccloud/market_data.hpp"
#include "zccloud/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run zcc_run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = zcc::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("zcc_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("exit codes for usage errors") {
  CHECK(zcc_run({}).code == 2);
  CHECK(zcc_run({"no-such-command"}).code == 2);
  CHECK(zcc_run({"--help"}).code == 0);
  CHECK(zcc_run({"tco", "--ctr", "many"}).code == 2);
  const auto dir = scratch("usage");
  CHECK(zcc_run({"sp-analyze", "--threshold", "abc", "--out-dir", dir.string()}).code == 2);
  const auto missing = zcc_run({"sp-analyze", "--market", "/nonexistent/market.csv", "--out-dir", dir.string()});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("market.csv") != std::string::npos);
  CHECK(zcc_run({"replay"}).code == 2);
}

TEST_CASE("tco command totals and breakdown") {
  const auto dir = scratch("tco");
  REQUIRE(zcc_run({"tco", "--ctr", "1", "--z", "0", "--out-dir", dir.string()}).code == 0);
  const auto j = read_json(dir / "tco.json");
  CHECK(j["total_musd_per_year"].get<double>() == doctest::Approx(44.9));
  CHECK(fs::exists(dir / "tco_breakdown.csv"));
  CHECK(fs::exists(dir / "manifest.json"));

  REQUIRE(zcc_run({"tco", "--ctr", "1", "--z", "1", "--out-dir", dir.string()}).code == 0);
  CHECK(read_json(dir / "tco.json")["total_musd_per_year"].get<double>() == doctest::Approx(69.4));

  REQUIRE(zcc_run({"tco", "--ctr", "1", "--z", "4", "--power-price", "360", "--out-dir", dir.string()}).code == 0);
  CHECK(read_json(dir / "tco.json")["total_musd_per_year"].get<double>() == doctest::Approx(151.0).epsilon(0.001));

  write_file(dir / "bad.json", R"({"density": -1})");
  CHECK(zcc_run({"tco", "--params", (dir / "bad.json").string(), "--out-dir", dir.string()}).code == 2);
  write_file(dir / "typo.json", R"({"c_compoot": 3})");
  CHECK(zcc_run({"tco", "--params", (dir / "typo.json").string(), "--out-dir", dir.string()}).code == 2);
  write_file(dir / "cheap.json", R"({"profile": "mira-baseline", "c_compute": 5.25})");
  REQUIRE(zcc_run({"tco", "--params", (dir / "cheap.json").string(), "--out-dir", dir.string()}).code == 0);
  CHECK(read_json(dir / "tco.json")["total_musd_per_year"].get<double>() == doctest::Approx(44.9 - 15.75));
  CHECK(zcc_run({"tco", "--ctr", "0", "--out-dir", dir.string()}).code == 2);
}

TEST_CASE("project command reproduces the generations rows") {
  const auto dir = scratch("project");
  REQUIRE(zcc_run({"project", "--year", "2022", "--out-dir", dir.string()}).code == 0);
  const std::string gen = slurp(dir / "generations.csv");
  CHECK(gen.find("\n2022,4000,38.7,") != std::string::npos);
  CHECK(gen.find("2027") == std::string::npos);
  CHECK(fs::exists(dir / "budget.csv"));
  CHECK(fs::exists(dir / "extreme.csv"));
  CHECK(zcc_run({"project", "--year", "2010", "--out-dir", dir.string()}).code == 2);
  REQUIRE(zcc_run({"project", "--year", "2022", "--budget", "0.5", "--out-dir", dir.string()}).code == 0);
  CHECK(slurp(dir / "budget.csv").find("infeasible") != std::string::npos);
}

TEST_CASE("stranded power analysis on synthetic sites") {
  const auto dir = scratch("sp");
  const auto r = zcc_run({"sp-analyze", "--family", "netprice", "--threshold", "5", "--top-k", "3", "--days", "60",
                          "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  const auto report = read_json(dir / "sp_report.json");
  CHECK(report.is_object());
  const std::string hist = slurp(dir / "sp_histogram.csv");
  CHECK(std::count(hist.begin(), hist.end(), '\n') >= 2);
  CHECK(fs::exists(dir / "sp_schedule.json"));
  CHECK(zcc_run({"sp-analyze", "--family", "hydro", "--out-dir", dir.string()}).code == 2);
  CHECK(zcc_run({"sp-analyze", "--top-k", "9", "--days", "30", "--out-dir", dir.string()}).code == 2);
}

TEST_CASE("generated inputs read back through the ingest paths") {
  const auto dir = scratch("ingest");
  REQUIRE(zcc_run({"synth-market", "--days", "10", "--out-dir", dir.string()}).code == 0);
  const auto series = zcc::ingest_csv(dir / "market.csv");
  REQUIRE(series.size() == 1);
  CHECK(series[0].size() == 10 * 288);

  REQUIRE(zcc_run({"workload-gen", "--days", "5", "--out-dir", dir.string()}).code == 0);
  const auto trace = zcc::load_trace(dir / "workload.trace");
  CHECK(trace.horizon.days() == doctest::Approx(5.0));
  CHECK(read_json(dir / "workload_stats.json")["n_jobs"].get<std::size_t>() == trace.jobs.size());

  const auto sim_dir = scratch("ingest_sim");
  REQUIRE(zcc_run({"simulate", "--trace", (dir / "workload.trace").string(), "--ctr", "1", "--z", "1",
                   "--availability", "periodic:0.5", "--out-dir", sim_dir.string()})
              .code == 0);
  CHECK(read_json(sim_dir / "sim.json")["jobs_submitted"].get<std::size_t>() == trace.jobs.size());
}

TEST_CASE("simulate output and determinism") {
  const auto a = scratch("sim_a");
  const auto b = scratch("sim_b");
  const std::vector<std::string> args = {"simulate", "--days", "20", "--ctr", "1", "--z", "1", "--availability",
                                         "periodic:0.5", "--event-log", "--seed", "7"};
  auto with_dir = [&](const fs::path& d) {
    auto v = args;
    v.push_back("--out-dir");
    v.push_back(d.string());
    return v;
  };
  REQUIRE(zcc_run(with_dir(a)).code == 0);
  REQUIRE(zcc_run(with_dir(b)).code == 0);
  const std::string csv = slurp(a / "sim.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);
  CHECK(csv.find("Ctr+1Z") != std::string::npos);
  CHECK(csv == slurp(b / "sim.csv"));
  CHECK(slurp(a / "events.ndjson") == slurp(b / "events.ndjson"));

  const auto c = scratch("sim_c");
  REQUIRE(zcc_run({"simulate", "--days", "20", "--ctr", "1", "--z", "0", "--out-dir", c.string()}).code == 0);
  CHECK(slurp(c / "sim.csv").find("\n1Ctr,") != std::string::npos);
  CHECK(zcc_run({"simulate", "--days", "20", "--z", "1", "--availability", "sometimes", "--out-dir", c.string()}).code == 2);
}

TEST_CASE("manifest replay reproduces outputs byte for byte") {
  const auto dir = scratch("replay");
  REQUIRE(zcc_run({"simulate", "--days", "15", "--z", "2", "--availability", "periodic:0.3", "--seed", "3",
                   "--out-dir", dir.string()})
              .code == 0);
  const auto manifest = read_json(dir / "manifest.json");
  CHECK(manifest["tool"] == "zcc");
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["seed"] == 3);
  CHECK(manifest["version"] == std::string(zcc::kToolVersion));
  REQUIRE(manifest["outputs"].size() >= 2);
  for (const auto& o : manifest["outputs"]) {
    CHECK(zcc::hex64(zcc::fnv1a64_file(dir / o["path"].get<std::string>())) == o["fnv1a64"].get<std::string>());
  }

  const auto r = zcc_run({"replay", "--manifest", (dir / "manifest.json").string(), "--verify"});
  CHECK(r.code == 0);
  CHECK(r.out.find("DIFFERS") == std::string::npos);
  CHECK(r.out.find("identical sim.csv") != std::string::npos);
  CHECK(slurp(dir / "sim.csv") == slurp(dir / "replay" / "sim.csv"));

  // A tampered hash is reported.
  auto tampered = manifest;
  tampered["outputs"][0]["fnv1a64"] = "0000000000000000";
  write_file(dir / "tampered.json", tampered.dump(2));
  CHECK(zcc_run({"replay", "--manifest", (dir / "tampered.json").string(), "--verify"}).code == 1);
}

TEST_CASE("fnv1a64 of known strings") {
  const auto dir = scratch("fnv");
  write_file(dir / "empty", "");
  write_file(dir / "a", "a");
  CHECK(zcc::hex64(zcc::fnv1a64_file(dir / "empty")) == "cbf29ce484222325");
  CHECK(zcc::hex64(zcc::fnv1a64_file(dir / "a")) == "af63dc4c8601ec8c");
}

TEST_CASE("sweep rejects empty or malformed space files") {
  const auto dir = scratch("sweep");
  write_file(dir / "empty.json", "");
  CHECK(zcc_run({"sweep", "--space", (dir / "empty.json").string(), "--out-dir", dir.string()}).code == 2);
  write_file(dir / "noaxis.json", R"({"power_prices": []})");
  CHECK(zcc_run({"sweep", "--space", (dir / "noaxis.json").string(), "--out-dir", dir.string()}).code == 2);
  write_file(dir / "broken.json", "{\"n_units\": [1,");
  CHECK(zcc_run({"sweep", "--space", (dir / "broken.json").string(), "--out-dir", dir.string()}).code == 2);
}

TEST_CASE("storage gap arithmetic through the CLI") {
  const auto dir = scratch("storage");
  REQUIRE(zcc_run({"storage-gap", "--gap-hours", "300", "--out-dir", dir.string()}).code == 0);
  const auto j = read_json(dir / "storage_gap.json");
  CHECK(j["bridge_cost_usd"].get<double>() == doctest::Approx(420e6));
  CHECK(zcc_run({"storage-gap", "--gap-hours", "24", "--load-mw", "0", "--out-dir", dir.string()}).code == 2);
}
