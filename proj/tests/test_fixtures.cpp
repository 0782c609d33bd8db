#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ceres_causal/backdoor.hpp"
#include "ceres_causal/fixtures.hpp"
#include "ceres_causal/frontdoor.hpp"
#include "ceres_causal/scm.hpp"

using namespace ceres;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("shipped fixture files match the generators") {
  const std::filesystem::path dir = std::filesystem::path(CERES_SOURCE_DIR) / "fixtures";
  for (const auto& f : fixtures::files()) {
    CAPTURE(f.name);
    REQUIRE(std::filesystem::exists(dir / f.name));
    CHECK(slurp(dir / f.name) == f.contents);
  }
}

TEST_CASE("shipped specs load and validate") {
  const std::filesystem::path dir = std::filesystem::path(CERES_SOURCE_DIR) / "fixtures";
  for (const char* name : {"demo2.json", "demo4.json", "demo8.json", "no_confounder.json"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_spec(dir / name));
  }
  CHECK(fixtures::load_qp_problems(dir).size() == 3);
}

TEST_CASE("demo4 corruption never reports the true mediator state") {
  const ScmSpec s = fixtures::demo4();
  for (std::size_t c : s.card) CHECK(c == 4);
  const ScmSpec full = with_corruption(s, 1.0);
  const auto& mv = full.table(Var::Mv);
  // Rows indexed by (x, u); entry x of each row is the probability of reporting x.
  for (std::size_t x = 0; x < 4; ++x)
    for (std::size_t u = 0; u < 4; ++u) CHECK(mv.probs[(x * 4 + u) * 4 + x] <= 1e-12);
}

TEST_CASE("no_confounder adjustment is a no-op") {
  const ScmSpec s = fixtures::no_confounder();
  CHECK(s.cardinality(Var::Z) == 1);
  CHECK(s.cardinality(Var::U) == 1);
  for (std::size_t t = 0; t < s.cardinality(Var::T); ++t) {
    const auto obs = observational(s, Var::Y, Assignment{{Var::T, t}});
    const auto doo = intervene(s, Assignment{{Var::T, t}}, Var::Y);
    CHECK(max_abs_diff(obs.span(), doo.span()) <= 1e-15);
  }
}

TEST_CASE("CERES_FIXTURES overrides the directory") {
  setenv("CERES_FIXTURES", "/tmp/elsewhere", 1);
  CHECK(fixtures::directory() == std::filesystem::path("/tmp/elsewhere"));
  unsetenv("CERES_FIXTURES");
  CHECK(fixtures::directory() == std::filesystem::path(CERES_SOURCE_DIR) / "fixtures");
}
