#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult run(const std::string& args, const std::string& env = {}) {
  const std::string cmd = env + (env.empty() ? "" : " ") + "\"" CERES_CLI "\" " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::fgets(buf, sizeof buf, pipe)) r.output += buf;
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ceres_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kFixtures = std::string(CERES_SOURCE_DIR) + "/fixtures";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run("frobnicate").code == 2);
  CHECK(run("frontdoor-exp --rho 1.5 --out " + scratch("rho").string()).code == 2);
  CHECK(run("qp-verify --tau-grid 1,abc --out " + scratch("grid").string()).code == 2);
  CHECK(run("backdoor-exp --spec /nonexistent/spec.json --out " + scratch("nospec").string()).code == 2);
}

TEST_CASE("backdoor-exp on a spec without confounders") {
  const fs::path out = scratch("nc");
  const auto r = run("backdoor-exp --seed 3 --spec " + kFixtures + "/no_confounder.json --out " + out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("PASS criterion 1") != std::string::npos);
  const std::string csv = slurp(out / "backdoor_identity.csv");
  CHECK(csv.rfind("# config_hash=", 0) == 0);
  CHECK(csv.find(" seed=3\r\n") != std::string::npos);
  CHECK(fs::exists(out / "summary.json"));
}

TEST_CASE("qp-verify with an explicit grid") {
  const fs::path out = scratch("qp");
  const auto r = run("qp-verify --tau-grid 1,0.3,0.1,0.03,0.01 --out " + out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("PASS criterion 4") != std::string::npos);
  CHECK(r.output.find("PASS criterion 5") != std::string::npos);
  CHECK(fs::exists(out / "qp_gamma_convergence.csv"));
}

TEST_CASE("flags override the config file") {
  const fs::path dir = scratch("cfg");
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"seed": 11, "trials": 5, "tau-grid": [1, 0.1]})";
  }
  const auto r = run("nwgm-gap --config " + (dir / "cfg.json").string() + " --seed 12 --out " + (dir / "out").string());
  CHECK(r.code == 0);
  const std::string csv = slurp(dir / "out" / "nwgm_exactness.csv");
  CHECK(csv.find(" seed=12\r\n") != std::string::npos);

  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"sede": 1})";
  }
  CHECK(run("nwgm-gap --config " + (dir / "bad.json").string() + " --out " + (dir / "o2").string()).code == 2);
}

TEST_CASE("CERES_FIXTURES redirects the fixture lookup") {
  const auto r = run("frontdoor-exp --trials 20 --out " + scratch("fx").string(), "CERES_FIXTURES=/nonexistent");
  CHECK(r.code != 0);
}
