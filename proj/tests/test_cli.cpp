#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int line_count(const std::string& s) {
  return static_cast<int>(std::count(s.begin(), s.end(), '\n'));
}

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("gridscc_cli_" + tag + "_" + std::to_string(::getpid()) +
                        "_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

CmdResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(GRIDSCC_BIN) + " " + args + " >" +
                          out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace

TEST_CASE("an unreadable scenario is a configuration error") {
  const fs::path dir = fresh_dir("missing");
  const CmdResult r = run_cli("run /nonexistent/scenario.json", dir);
  CHECK(r.exit_code == 1);
  fs::remove_all(dir);
}

TEST_CASE("a scenario with an unknown key is refused and the key is named") {
  const fs::path dir = fresh_dir("badkey");
  const fs::path bad = dir / "bad.json";
  std::string text = slurp(SCENARIO_FILE);
  text.insert(1, "\n \"mystery_knob\": 3,");
  std::ofstream(bad) << text;

  const CmdResult r = run_cli("run " + bad.string(), dir);
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("mystery_knob") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("bad flag values map onto the configuration exit code") {
  const fs::path dir = fresh_dir("badflag");
  CHECK(run_cli(std::string("run ") + SCENARIO_FILE + " --controller pid", dir)
            .exit_code == 1);
  CHECK(run_cli("", dir).exit_code == 1);
  CHECK(run_cli("--help", dir).exit_code == 0);
  fs::remove_all(dir);
}

TEST_CASE("a short benchmark run writes the trace and summary and exits cleanly") {
  const fs::path dir = fresh_dir("run");
  const CmdResult r = run_cli(std::string("run ") + SCENARIO_FILE +
                                  " --t-final 0.02 --seed 77 --out " +
                                  (dir / "a").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("converged=yes") != std::string::npos);

  const std::string trace = slurp(dir / "a" / "trace.csv");
  REQUIRE(!trace.empty());
  CHECK(trace.rfind("t,v1,v2,v3,v4,v5,it1,it2,it3,it4,it5,vL,u1,u2,u3,u4,u5,"
                    "V_eta,min_b,flags\n",
                    0) == 0);
  CHECK(line_count(trace) == 2002);  // header, one record per hold, closing record

  const nlohmann::json summary =
      nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary.at("controller") == "scc");
  CHECK(summary.at("converged") == true);
  CHECK(summary.at("safety_violated") == false);
  CHECK(summary.at("seed") == 77);
  fs::remove_all(dir);
}

TEST_CASE("repeated runs are byte-identical apart from wall time") {
  const fs::path dir = fresh_dir("repeat");
  const std::string base = std::string("run ") + SCENARIO_FILE +
                           " --t-final 0.001 --raw-trace --out ";
  REQUIRE(run_cli(base + (dir / "a").string(), dir).exit_code == 0);
  REQUIRE(run_cli(base + (dir / "b").string(), dir).exit_code == 0);

  CHECK(slurp(dir / "a" / "trace.csv") == slurp(dir / "b" / "trace.csv"));
  nlohmann::json ja = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  nlohmann::json jb = nlohmann::json::parse(slurp(dir / "b" / "summary.json"));
  ja.erase("wall_time_s");
  jb.erase("wall_time_s");
  CHECK(ja == jb);
  fs::remove_all(dir);
}

TEST_CASE("raw tracing records every integrator step") {
  const fs::path dir = fresh_dir("raw");
  const CmdResult r = run_cli(std::string("run ") + SCENARIO_FILE +
                                  " --t-final 0.0002 --raw-trace --out " +
                                  (dir / "a").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  CHECK(line_count(slurp(dir / "a" / "trace.csv")) == 202);
  fs::remove_all(dir);
}

TEST_CASE("the droop baseline completes with its saturation on record") {
  const fs::path dir = fresh_dir("droop");
  const CmdResult r = run_cli(std::string("run ") + SCENARIO_FILE +
                                  " --controller droop --out " +
                                  (dir / "a").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  const nlohmann::json summary =
      nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary.at("controller") == "droop");
  CHECK(summary.at("converged") == false);
  CHECK(summary.at("safety_violated") == true);
  fs::remove_all(dir);
}

TEST_CASE("a diverging loop exits with the numerical failure code") {
  const fs::path dir = fresh_dir("diverge");
  const fs::path bad = dir / "diverge.json";
  nlohmann::json j = nlohmann::json::parse(slurp(SCENARIO_FILE));
  j["controller"] = "fl";
  j["scc"]["chain_poles_re"] = {-1e9, -2e9, -3e9};
  j["t_final_s"] = 0.01;
  std::ofstream(bad) << j.dump(1);

  const CmdResult r = run_cli("run " + bad.string() + " --out " +
                                  (dir / "a").string(),
                              dir);
  CHECK(r.exit_code == 3);
  const nlohmann::json summary =
      nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary.at("aborted") == true);
  fs::remove_all(dir);
}

TEST_CASE("the comparison table command writes both renderings") {
  const fs::path dir = fresh_dir("table");
  const CmdResult r = run_cli(std::string("table2 ") + SCENARIO_FILE +
                                  " --t-final 0.002 --out " + (dir / "a").string(),
                              dir);
  REQUIRE(r.exit_code == 0);
  const std::string csv = slurp(dir / "a" / "table2.csv");
  CHECK(line_count(csv) == 17);  // header plus three rows per converter plus bus
  CHECK(!slurp(dir / "a" / "table2.txt").empty());
  fs::remove_all(dir);
}

TEST_CASE("sweeps reproduce across worker counts") {
  const fs::path dir = fresh_dir("sweep");
  const std::string base = std::string("sweep ") + SCENARIO_FILE +
                           " --samples 3 --seed 5 --t-final 0.0005 --out ";
  REQUIRE(run_cli(base + (dir / "a").string() + " --workers 2", dir).exit_code == 0);
  REQUIRE(run_cli(base + (dir / "b").string() + " --workers 1", dir).exit_code == 0);
  const std::string a = slurp(dir / "a" / "sweep.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b" / "sweep.csv"));
  CHECK(line_count(a) == 7);
  fs::remove_all(dir);
}
