#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "fwave/experiment.hpp"

using namespace fwave;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / ("fwave_exp_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

json small_e1() {
  return json::parse(R"({
    "model": {"d": [1, 1, 1], "r": [1, 1, 1], "a": 2, "b": 0.1, "h": 0.5, "k": 0.5, "s_factor": 1.2},
    "kernels": {"family": "uniform", "half_width": 1},
    "environment": {"family": "tanh_ramp", "center": 0, "steepness": 1, "alpha_minus": -0.5, "alpha_plus": 1, "rho": 2},
    "regime": "e1",
    "numerics": {"L": 60, "h": 0.02, "tol": 1e-11}
  })");
}

struct Run {
  int code;
  std::string err;
};

Run cli(const std::string& args, const fs::path& dir) {
  std::string errf = (dir / "stderr.txt").string();
  std::string cmd = std::string(FWAVE_CLI_PATH) + " " + args + " >/dev/null 2>" + errf;
  int st = std::system(cmd.c_str());
  std::ifstream in(errf);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(st) ? WEXITSTATUS(st) : -1, ss.str()};
}

fs::path write(const fs::path& dir, const json& j) {
  fs::path p = dir / "config.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

json read(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

}  // namespace

TEST_CASE("config parsing is strict") {
  json j = small_e1();
  CHECK_NOTHROW(parse_config(j));
  json bad = j;
  bad["model"]["colour"] = 1;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = j;
  bad["kernels"]["radius"] = 1;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = j;
  bad["model"]["s"] = 1;
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = j;
  bad["regime"] = "e5";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);
  bad = j;
  bad["numerics"]["scheme"] = "leapfrog";
  CHECK_THROWS_AS(parse_config(bad), ConfigError);

  ExperimentConfig c = parse_config(j);
  CHECK(c.num.scheme == Scheme::euler_upwind1);
  CHECK(c.rho == 2);
  // the serialised form parses back to itself
  CHECK(config_to_json(parse_config(config_to_json(c))) == config_to_json(c));
}

TEST_CASE("role swap is an involution") {
  json j = small_e1();
  j["model"]["d"] = {1, 2, 1};
  j["model"]["r"] = {1, 3, 1};
  j["model"]["h"] = 0.3;
  j["kernels"] = json::array({{{"family", "uniform"}, {"half_width", 1}},
                              {{"family", "laplace"}, {"rate", 2}},
                              {{"family", "uniform"}, {"half_width", 1}}});
  ExperimentConfig c = parse_config(j);
  ExperimentConfig s = swap_roles_e3(c);
  CHECK(s.params.d[0] == 2);
  CHECK(s.params.r[0] == 3);
  CHECK(s.params.k == doctest::Approx(0.3));
  CHECK(s.kernel_specs[0]["family"] == "laplace");
  CHECK(s.roles_swapped);
  CHECK(config_to_json(swap_roles_e3(s)) == config_to_json(c));
}

TEST_CASE("sha256") {
  fs::path d = scratch("sha");
  std::ofstream(d / "abc.txt") << "abc";
  CHECK(sha256_file((d / "abc.txt").string()) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("cli: stages, manifest and exit codes") {
  fs::path d = scratch("cli");
  fs::path cfg = write(d, small_e1());

  Run r = cli("validate --config " + cfg.string() + " --out " + (d / "v").string(), d);
  CHECK(r.code == 0);
  json m = read(d / "v" / "manifest.json");
  CHECK(m["exit_code"] == 0);
  CHECK(m["stages"] == json::array({"validate"}));

  r = cli("run --config " + cfg.string() + " --out " + (d / "run").string(), d);
  REQUIRE(r.code == 0);
  m = read(d / "run" / "manifest.json");
  CHECK(m["classification"] == "E1");
  for (const auto& f : m["files"])
    CHECK(f["sha256"] == sha256_file((d / "run" / f["name"].get<std::string>()).string()));
  json sj = read(d / "run" / "solve.json");
  CHECK(sj["clips_final"] == 0);
  CHECK(sj["tail_fit"]["char_residual_rel"].get<double>() < 1e-6);
  json br = read(d / "run" / "bounds_report.json");
  CHECK(br["verification"]["pass"] == true);
  CHECK(fs::exists(d / "run" / "profile.csv"));

  // manifest only
  r = cli("bounds --emit \"\" --config " + cfg.string() + " --out " + (d / "quiet").string(), d);
  CHECK(r.code == 0);
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(d / "quiet")) {
    (void)e;
    ++count;
  }
  CHECK(count == 1);
  CHECK(fs::exists(d / "quiet" / "manifest.json"));

  // unknown key
  json bad = small_e1();
  bad["numerics"]["hh"] = 0.1;
  fs::path bd = d / "bad";
  fs::create_directories(bd);
  r = cli("validate --config " + write(bd, bad).string() + " --out " + (bd / "o").string(), d);
  CHECK(r.code == 2);
  CHECK(r.err.find("hh") != std::string::npos);

  // co-existence gate
  json e4 = small_e1();
  e4["model"]["b"] = 0.3;
  e4["regime"] = "e4";
  fs::path ed = d / "e4";
  fs::create_directories(ed);
  r = cli("bounds --config " + write(ed, e4).string() + " --out " + (ed / "o").string(), d);
  CHECK(r.code == 3);
  CHECK(r.err.find("b < min{(1-h)/(2a),(1-k)/(2a)} = 0.125") != std::string::npos);
  m = read(ed / "o" / "manifest.json");
  CHECK(m["failed_at"] == "bounds");

  // bad CLI usage
  CHECK(cli("frobnicate", d).code == 2);
  CHECK(cli("run", d).code == 2);
}

TEST_CASE("cli: sweep") {
  fs::path d = scratch("sweep");
  fs::path cfg = write(d, small_e1());
  Run r = cli("sweep --config " + cfg.string() + " --out " + (d / "s").string() +
                  " --param /model/s_factor --values 1.2 1.4 --jobs 2",
              d);
  CHECK(r.code == 0);
  for (const char* k : {"run_000", "run_001"}) CHECK(read(d / "s" / k / "manifest.json")["classification"] == "E1");
  double s0 = read(d / "s" / "run_000" / "speeds.json")["s"];
  double s1 = read(d / "s" / "run_001" / "speeds.json")["s"];
  CHECK(s1 / s0 == doctest::Approx(1.4 / 1.2));
}
