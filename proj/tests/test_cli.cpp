// Drives the command-line tool as a subprocess.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::path(HARVESTSIM_TEST_DIR) / "cli_work";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + HARVESTSIM_CLI + "\" " + args + " >>\"" +
                          path("log.txt") + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const std::string& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

void write_json(const std::string& p, const json& j) { std::ofstream(p) << j.dump(2); }

json default_config() {
  REQUIRE(run("config dump --out " + path("default.json")) == 0);
  return json::parse(slurp(path("default.json")));
}

}  // namespace

TEST_CASE("torque curve output") {
  REQUIRE(run("mech torque-curve --fingers 6 --eta 0.8 --out " + path("curve.csv")) == 0);
  const auto rows = read_csv(path("curve.csv"));
  REQUIRE(rows.size() == 21);
  CHECK(rows.front()[0] == 0.0);
  CHECK(rows.back()[0] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 3);
    CHECK(rows[i][2] == doctest::Approx(6.0 / 0.8 * rows[i][1]).epsilon(1e-9));
    if (i > 0) CHECK(rows[i][1] > rows[i - 1][1]);
  }
  CHECK(fs::exists(path("curve.csv.manifest.json")));
  CHECK(slurp(path("curve.csv")).rfind("P_newton,T_newton_mm", 0) == 0);

  CHECK(run("mech torque-curve --points 0 --out " + path("empty.csv")) != 0);
  CHECK_FALSE(fs::exists(path("empty.csv")));
}

TEST_CASE("exit codes") {
  SUBCASE("usage") {
    CHECK(run("grasp --out " + path("noseed.csv")) == 2);  // --seed is mandatory
    CHECK(run("frobnicate") == 2);
  }
  SUBCASE("missing section names the section") {
    json cfg = default_config();
    cfg.erase("arm");
    write_json(path("no_arm.json"), cfg);
    fs::remove(path("log.txt"));
    CHECK(run("plan --seed 1 --config " + path("no_arm.json") + " --out " + path("p.csv")) == 2);
    CHECK(slurp(path("log.txt")).find("arm: missing section") != std::string::npos);
    CHECK_FALSE(fs::exists(path("p.csv")));
  }
  SUBCASE("unwritable output") {
    CHECK(run("mech sweep --out " + path("no/such/dir/s.csv")) == 4);
  }
  SUBCASE("no oscillation in the tuning grid") {
    json cfg = default_config();
    cfg["control"]["tune"]["kp_grid"] = json::array({0.01, 0.02});
    write_json(path("lowgrid.json"), cfg);
    CHECK(run("tune --seed 1 --config " + path("lowgrid.json") + " --out " + path("tune.json")) == 3);
    CHECK_FALSE(fs::exists(path("tune.json")));
  }
}

TEST_CASE("validation failure leaves no files behind") {
  json cfg = default_config();
  cfg["harvest"]["trials"] = -3;
  write_json(path("bad.json"), cfg);
  const std::string out = path("bad_summary.json");
  CHECK(run("harvest run --seed 1 --config " + path("bad.json") + " --out " + out + " --records " +
            path("bad_records.csv")) == 2);
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(path("bad_records.csv")));
  CHECK_FALSE(fs::exists(out + ".manifest.json"));
}

TEST_CASE("grasp plateau for the heaviest fruit") {
  REQUIRE(run("grasp --tomato F1 --ref auto --seed 4 --out " + path("f1.csv") + " --metrics " +
              path("f1.json")) == 0);
  const json m = json::parse(slurp(path("f1.json")));
  CHECK(m["plateau_N"].get<double>() >= 0.45);
  CHECK(m["plateau_N"].get<double>() <= 0.52);
  CHECK(slurp(path("f1.csv")).rfind("time_s,f_ref_N,f_meas_N,f_true_N,servo_deg", 0) == 0);
}

TEST_CASE("stochastic commands are byte-reproducible") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cmds = {
      {"grasp --tomato F2 --seed 11 --out {}g.csv", {"g.csv"}},
      {"tune --seed 11 --out {}t.json", {"t.json"}},
      {"plan --target 400,100,300 --seed 11 --out {}p.csv --goal {}p.json", {"p.csv", "p.json"}},
      {"perception eval --scenes 50 --noise 1,0.1,0.5,0.05 --seed 11 --out {}e.json", {"e.json"}},
  };
  for (const auto& [tmpl, files] : cmds) {
    std::vector<std::string> first;
    for (const char* tag : {"a_", "b_"}) {
      std::string args = tmpl;
      for (std::size_t at; (at = args.find("{}")) != std::string::npos;) {
        args.replace(at, 2, path(tag));
      }
      CAPTURE(args);
      REQUIRE(run(args) == 0);
      for (const auto& f : files) {
        const std::string content = slurp(path(tag + f));
        REQUIRE_FALSE(content.empty());
        if (std::string(tag) == "a_") {
          first.push_back(content);
        } else {
          CHECK(content == first[&f - files.data()]);
        }
      }
    }
  }
}

TEST_CASE("harvest campaign is identical across runs and thread counts") {
  auto go = [](const std::string& tag, int threads) {
    return run("harvest run --trials 2000 --seed 7 --threads " + std::to_string(threads) +
               " --out " + path(tag + "s.json") + " --records " + path(tag + "r.csv") +
               " --stages " + path(tag + "st.csv"));
  };
  REQUIRE(go("h1_", 1) == 0);
  REQUIRE(go("h2_", 1) == 0);
  REQUIRE(go("h3_", 4) == 0);
  for (const char* f : {"s.json", "r.csv", "st.csv"}) {
    CAPTURE(f);
    const std::string base = slurp(path(std::string("h1_") + f));
    CHECK(base == slurp(path(std::string("h2_") + f)));
    CHECK(base == slurp(path(std::string("h3_") + f)));
  }
  const json manifest = json::parse(slurp(path("h1_s.json.manifest.json")));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["outputs"].size() == 3);
  const std::string records = slurp(path("h1_r.csv"));
  CHECK(records.rfind("trial,outcome,failure_mode,t_approach", 0) == 0);
}
