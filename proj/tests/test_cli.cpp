#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "conlab/cli.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "consensus-lab");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = conlab::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conlab_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(line);
  std::string s;
  while (std::getline(ss, s, sep)) parts.push_back(s);
  return parts;
}

const std::string data_dir = CONLAB_DATA_DIR;

}  // namespace

TEST_CASE("table1") {
  const auto r = cli({"table1"});
  CHECK(r.code == 0);
  CHECK(r.out == "d,coefficient\n1,0.250\n2,0.148\n3,0.105\n4,0.082\n5,0.067\n");
  const auto dir = scratch("table1");
  CHECK(cli({"table1", "--out-dir", dir.string()}).code == 0);
  CHECK(slurp(dir / "table1.csv") == r.out);
}

TEST_CASE("rates on the five-agent edge list") {
  const auto r = cli({"rates", "--graph", data_dir + "/fig1.edges", "--delta", "0.125", "--dmax", "4"});
  REQUIRE(r.code == 0);
  std::stringstream ss(r.out);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "d,r_d,r_0,theorem1_pass,monotone");
  std::getline(ss, line);
  const auto row = split(line, ',');
  REQUIRE(row.size() == 5);
  const double expect = std::max(std::abs(1 - 0.125 * (3 - std::sqrt(2.0))), std::abs(1 - 0.125 * 5));
  CHECK(std::stod(row[1]) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(std::stod(row[2]) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(row[3] == "0");
  int rows = 1;
  while (std::getline(ss, line)) ++rows;
  CHECK(rows == 5);
  CHECK(cli({"rates", "--graph", "fig1", "--delta", "0.125", "--dmax", "4"}).out == r.out);
}

TEST_CASE("run writes reproducible output") {
  const auto a = scratch("run_a");
  const auto b = scratch("run_b");
  const std::string cfg = data_dir + "/ring20_compare.json";
  const auto ra = cli({"run", "--config", cfg, "--out-dir", a.string()});
  const auto rb = cli({"run", "--config", cfg, "--out-dir", b.string()});
  REQUIRE(ra.code == 0);
  CHECK(ra.out == rb.out);
  CHECK(ra.out.rfind("tm,", 0) == 0);
  CHECK(slurp(a / "report.json") == slurp(b / "report.json"));
  CHECK(slurp(a / "trajectory_laplacian.csv") == slurp(b / "trajectory_laplacian.csv"));
  const auto seeded = cli({"run", "--config", cfg, "--out-dir", b.string(), "--seed", "2"});
  CHECK(seeded.code == 0);
  CHECK(slurp(a / "report.json") != slurp(b / "report.json"));
}

TEST_CASE("gmm writes models and likelihood traces") {
  const auto dir = scratch("gmm");
  fs::create_directories(dir);
  std::ofstream(dir / "small.json") << R"({"N": 4, "topology": "ring", "M": 120, "Ns": 3,
    "T_em": 3, "T_consensus": 20, "inner_alg": "tm", "seed": 5})";
  const auto r = cli({"gmm", "--config", (dir / "small.json").string(), "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("final_gap_agent_1,", 0) == 0);
  const auto models = nlohmann::json::parse(slurp(dir / "gmm_models.json"));
  CHECK(models.at("agents").size() == 4);
  CHECK(models.at("truth").size() == 3);
  const auto csv = slurp(dir / "gmm_loglik.csv");
  CHECK(csv.rfind("iteration,agent_1,agent_2,agent_3,agent_4,central\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("regress on synthetic data") {
  const auto dir = scratch("regress");
  const auto r = cli({"regress", "--alg", "laplacian", "--d", "5", "--delta", "0.025", "--rounds", "60",
                      "--seed", "4", "--out-dir", dir.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("central_slope,", 0) == 0);
  const auto csv = slurp(dir / "regression_buffered_d5.csv");
  CHECK(csv.rfind("round,agent_1,agent_2,agent_3,agent_4,agent_5,error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 62);
}

TEST_CASE("errors are reported as json with exit codes") {
  const auto missing = cli({"run", "--config", "/nonexistent/cfg.json"});
  CHECK(missing.code == 2);
  const auto j = nlohmann::json::parse(missing.err);
  CHECK(j.at("error").at("kind") == "ConfigError");
  CHECK(j.at("error").at("code") == 2);

  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({}).code == 2);
  CHECK(cli({"rates", "--graph", "fig1"}).code == 2);
  const auto nofile = cli({"rates", "--graph", "/nonexistent/g.edges", "--delta", "0.1"});
  CHECK(nofile.code == 4);
  CHECK(nlohmann::json::parse(nofile.err).at("error").at("kind") == "IoError");
  const auto step = cli({"regress", "--delta", "3.0", "--rounds", "5"});
  CHECK(step.code == 3);
}

TEST_CASE("installed binary exit status") {
  const std::string bin = CONLAB_CLI_PATH;
  const auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  CHECK(status("table1") == 0);
  CHECK(status("--help") == 0);
  CHECK(status("run --config /nonexistent/cfg.json") == 2);
  CHECK(status("bogus") == 2);
}
