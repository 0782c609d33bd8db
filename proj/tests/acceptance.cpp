#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ceres_causal/experiments.hpp"

namespace fs = std::filesystem;
using namespace ceres;

namespace {

struct Criterion {
  int id;
  std::string name;
  std::function<StudyResult(const ExperimentConfig&)> study;
  double limit_seconds;
};

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[fs::relative(e.path(), root).string()] = ss.str();
  }
  return files;
}

int run_cli(const std::string& args) {
  const std::string cmd = "\"" CERES_CLI "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

int main() {
  ExperimentConfig config;
  config.seed = 7;

  const std::vector<Criterion> criteria{
      {1, "backdoor identity", backdoor_identity_study, 30},
      {2, "frontdoor identity", frontdoor_identity_study, 60},
      {3, "nwgm exactness", nwgm_exactness_study, 5},
      {4, "qp oracle", qp_oracle_study, 120},
      {5, "isotropic slack", isotropic_slack_study, 60},
      {6, "memory bank bounds", membank_study, 120},
      {7, "mediator robustness", mediator_robustness_study, 180},
      {8, "gate contract", gate_contract_study, 5},
  };

  bool all = true;
  for (const auto& c : criteria) {
    bool ok = false;
    std::string detail;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const StudyResult r = c.study(config);
      ok = r.passed();
      for (const auto& v : r.verdicts) detail += (detail.empty() ? "" : "; ") + v.detail;
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > c.limit_seconds) {
      ok = false;
      detail += "; over time limit";
    }
    all = all && ok;
    std::printf("%s criterion %d %s (%.2fs): %s\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(), secs, detail.c_str());
  }

  {
    const fs::path base = fs::temp_directory_path() / "ceres_acceptance";
    fs::remove_all(base);
    const auto t0 = std::chrono::steady_clock::now();
    const int a = run_cli("all --seed 7 --out " + (base / "a").string());
    const int b = run_cli("all --seed 7 --jobs 1 --out " + (base / "b").string());
    bool ok = a == 0 && b == 0;
    std::string detail = "exit codes " + std::to_string(a) + "," + std::to_string(b);
    if (ok) {
      const auto ta = read_tree(base / "a"), tb = read_tree(base / "b");
      ok = !ta.empty() && ta == tb;
      detail += ", " + std::to_string(ta.size()) + " files " + (ta == tb ? "identical" : "differ");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && ok;
    std::printf("%s criterion 9 determinism (%.2fs): %s\n", ok ? "PASS" : "FAIL", secs, detail.c_str());
    fs::remove_all(base);
  }
  return all ? 0 : 1;
}
