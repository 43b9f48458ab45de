#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iscap/cli.hpp"

using namespace iscap;

namespace {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Scratch config shared by the command tests: small, fast, feasible.
const char* small_config_text() {
  return R"({
    "scenario": {"n_tx": 4, "n_ris": 12, "n_sensors": 6,
                 "n_irs": 2, "n_ers": 1, "ref_gain_db": -15.0, "seed": 7},
    "protocol_variants": ["PS", "TS"],
    "sweep_axis": "rho",
    "grid": [0.5, 0.7],
    "fixed": {"p_circuit": 2e-4, "p_element": 1e-6},
    "n_trials": 2,
    "qos": {"r_com_min": 0.6, "r_sense_min": 0.1, "e_min_total": 2e-6},
    "solver": {"max_ao_iters": 120},
    "pareto": {"method": "epsilon", "objective": "comm",
               "budget_dbm": 36.0,
               "thresholds": [[0.0, 0.0], [1.5, 0.0]]}
  })";
}

struct Scratch {
  std::string config = "cli_test_cfg.json";
  std::string dir = "cli_test_out";
  Scratch() {
    write_file(config, small_config_text());
    std::filesystem::remove_all(dir);
  }
  ~Scratch() {
    std::remove(config.c_str());
    std::filesystem::remove_all(dir);
  }
  std::string out(const std::string& sub) const { return dir + "/" + sub; }
};

}  // namespace

TEST_CASE("usage and config errors exit with code 2") {
  REQUIRE(run_cli({}) == 2);
  REQUIRE(run_cli({"frobnicate"}) == 2);
  REQUIRE(run_cli({"solve", "--bogus"}) == 2);
  REQUIRE(run_cli({"--help"}) == 0);
  REQUIRE(run_cli({"sweep"}) == 2);
  REQUIRE(run_cli({"pareto"}) == 2);
  REQUIRE(run_cli({"validate-config"}) == 2);
  REQUIRE(run_cli({"validate-config", "--config", "no_such.json"}) == 2);

  write_file("cli_bad.json", "{ not json");
  REQUIRE(run_cli({"validate-config", "--config", "cli_bad.json"}) == 2);
  write_file("cli_bad.json", R"({"sweep_axis":"rho","grid":[0.6,0.3]})");
  REQUIRE(run_cli({"validate-config", "--config", "cli_bad.json"}) == 2);
  write_file("cli_bad.json",
             R"({"sweep_axis":"rho","grid":[0.3],"pareto":{"frob":1}})");
  REQUIRE(run_cli({"validate-config", "--config", "cli_bad.json"}) == 2);
  std::remove("cli_bad.json");

  Scratch s;
  REQUIRE(run_cli({"solve", "--config", s.config, "--protocol", "XX",
                   "--quiet"}) == 2);
}

TEST_CASE("validate-config accepts the bundled schema") {
  Scratch s;
  REQUIRE(run_cli({"validate-config", "--config", s.config, "--quiet"}) == 0);
}

TEST_CASE("solve writes a deterministic report and honors the seed") {
  Scratch s;
  REQUIRE(run_cli({"solve", "--config", s.config, "--protocol", "PS",
                   "--quiet", "--out", s.out("a")}) == 0);
  const std::string report_path = s.out("a") + "/solve.json";
  const std::string bytes = read_file(report_path);
  REQUIRE_FALSE(bytes.empty());

  const nlohmann::json j = nlohmann::json::parse(bytes);
  REQUIRE(j.at("seed").get<std::uint64_t>() == 7);
  REQUIRE(j.at("scenario").at("n_tx").get<int>() == 4);
  REQUIRE(j.at("results").size() == 1);
  const nlohmann::json& r = j.at("results").at(0);
  REQUIRE(r.at("protocol").get<std::string>() == "PS");
  REQUIRE(r.at("status").get<std::string>() == "converged");
  REQUIRE(r.at("power_dbm").get<double>() > 0.0);
  REQUIRE(r.at("rho").get<double>() == 0.5);
  for (const char* key : {"comm_min", "sense", "er", "ris"})
    REQUIRE(r.at("slacks").at(key).get<double>() >= -1e-6);

  // Identical invocation, byte-identical report.
  REQUIRE(run_cli({"solve", "--config", s.config, "--protocol", "PS",
                   "--quiet", "--out", s.out("b")}) == 0);
  REQUIRE(read_file(s.out("b") + "/solve.json") == bytes);

  // A different seed changes the instance (and is echoed in the report).
  REQUIRE(run_cli({"solve", "--config", s.config, "--protocol", "PS",
                   "--seed", "9", "--quiet", "--out", s.out("c")}) == 0);
  const std::string other = read_file(s.out("c") + "/solve.json");
  REQUIRE(other != bytes);
  REQUIRE(nlohmann::json::parse(other).at("seed").get<std::uint64_t>() == 9);
}

TEST_CASE("sweep outputs are byte-identical for any worker count") {
  Scratch s;
  REQUIRE(run_cli({"sweep", "--config", s.config, "--quiet", "--out",
                   s.out("j1"), "--jobs", "1", "--trial-dump"}) == 0);
  REQUIRE(run_cli({"sweep", "--config", s.config, "--quiet", "--out",
                   s.out("j3"), "--jobs", "3", "--trial-dump"}) == 0);
  REQUIRE(run_cli({"sweep", "--config", s.config, "--quiet", "--out",
                   s.out("j0")}) == 0);  // default worker count

  const std::string csv = read_file(s.out("j1") + "/sweep.csv");
  REQUIRE_FALSE(csv.empty());
  REQUIRE(csv == read_file(s.out("j3") + "/sweep.csv"));
  REQUIRE(csv == read_file(s.out("j0") + "/sweep.csv"));
  REQUIRE(read_file(s.out("j1") + "/trials.jsonl") ==
          read_file(s.out("j3") + "/trials.jsonl"));
  for (const char* p : {"PS", "TS"}) {
    const std::string series = std::string("/series_") + p + ".dat";
    REQUIRE(read_file(s.out("j1") + series) ==
            read_file(s.out("j3") + series));
    REQUIRE_FALSE(read_file(s.out("j1") + series).empty());
  }
  // The default run does not dump trials.
  REQUIRE_FALSE(std::filesystem::exists(s.out("j0") + "/trials.jsonl"));
}

TEST_CASE("pareto traces one front per protocol") {
  Scratch s;
  REQUIRE(run_cli({"pareto", "--config", s.config, "--protocol", "PS",
                   "--quiet", "--out", s.out("p")}) == 0);
  const std::string path = s.out("p") + "/front_PS.csv";
  const std::string bytes = read_file(path);
  REQUIRE(bytes.rfind(
              "method,grid_id,comm_bpshz,sense_bpshz,wpt_mw,dominated,status",
              0) == 0);
  REQUIRE(std::count(bytes.begin(), bytes.end(), '\n') >= 2);

  REQUIRE(run_cli({"pareto", "--config", s.config, "--protocol", "PS",
                   "--quiet", "--out", s.out("q")}) == 0);
  REQUIRE(read_file(s.out("q") + "/front_PS.csv") == bytes);
}

TEST_CASE("failed solves map to exit code 1") {
  Scratch s;
  // A power cap far below the self-powering floor defeats every solve.
  write_file("cli_hard.json", R"({
    "scenario": {"n_tx": 4, "n_ris": 12, "n_sensors": 6,
                 "n_irs": 2, "n_ers": 1, "ref_gain_db": -15.0, "seed": 7},
    "protocol_variants": ["PS"],
    "sweep_axis": "rho",
    "grid": [0.5],
    "fixed": {"p_circuit": 2e-4, "p_element": 1e-6},
    "n_trials": 1,
    "qos": {"r_com_min": 0.6, "r_sense_min": 0.1, "e_min_total": 2e-6},
    "solver": {"power_cap_w": 1e-3},
    "pareto": {"budget_dbm": 0.0}
  })");
  REQUIRE(run_cli({"solve", "--config", "cli_hard.json", "--quiet", "--out",
                   s.out("h")}) == 1);
  REQUIRE(run_cli({"sweep", "--config", "cli_hard.json", "--quiet", "--out",
                   s.out("h")}) == 1);
  REQUIRE(run_cli({"pareto", "--config", "cli_hard.json", "--quiet", "--out",
                   s.out("h")}) == 1);
  // The empty front is still persisted as a header-only file.
  REQUIRE(read_file(s.out("h") + "/front_PS.csv") ==
          "method,grid_id,comm_bpshz,sense_bpshz,wpt_mw,dominated,status\n");
  std::remove("cli_hard.json");
}
