#include "ceres_causal/fixtures.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ceres_causal/error.hpp"

#ifndef CERES_DEFAULT_FIXTURES
#define CERES_DEFAULT_FIXTURES "fixtures"
#endif

namespace ceres::fixtures {

namespace {

std::vector<double> diagonal_table(std::size_t rows, std::size_t card, double diag) {
  const double off = (1.0 - diag) / static_cast<double>(card - 1);
  std::vector<double> p(rows * card, off);
  for (std::size_t r = 0; r < rows; ++r) p[r * card + r % card] = diag;
  return p;
}

ScmSpec random_fixed(std::uint64_t seed, std::size_t card, bool no_confounders) {
  Rng rng = Rng::stream(seed, 0);
  RandomSpecOptions opt;
  opt.min_card = card;
  opt.max_card = card;
  opt.no_confounders = no_confounders;
  ScmSpec spec = random_spec(rng, opt);
  spec.embedding_seed = seed;
  return spec;
}

}  // namespace

ScmSpec demo2() { return random_fixed(2, 2, false); }

ScmSpec demo8() { return random_fixed(8, 8, false); }

ScmSpec no_confounder() { return random_fixed(1, 3, true); }

ScmSpec demo4() {
  constexpr std::size_t k = 4;
  ScmSpec s;
  s.card.fill(k);
  s.embedding_seed = 4;
  s.table(Var::Z) = Cpt{Var::Z, {}, std::vector<double>(k, 0.25)};
  s.table(Var::U) = Cpt{Var::U, {}, {0.4, 0.3, 0.2, 0.1}};
  s.table(Var::T) = Cpt{Var::T, {Var::Z}, diagonal_table(k, k, 0.7)};
  s.table(Var::X) = Cpt{Var::X, {Var::U}, diagonal_table(k, k, 0.7)};
  s.table(Var::M) = Cpt{Var::M, {Var::X}, diagonal_table(k, k, 0.85)};
  s.table(Var::Md) = Cpt{Var::Md, {Var::X}, diagonal_table(k, k, 0.85)};

  std::vector<double> corrupt(k * k * k, 0.0);
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t u = 0; u < k; ++u) corrupt[(x * k + u) * k + (x + 1 + u % 3) % k] = 1.0;
  s.mv_corruption = Cpt{Var::Mv, {Var::X, Var::U}, std::move(corrupt)};

  std::vector<double> y;
  y.reserve(k * k * k * k * k);
  for (std::size_t t = 0; t < k; ++t)
    for (std::size_t m = 0; m < k; ++m)
      for (std::size_t z = 0; z < k; ++z)
        for (std::size_t u = 0; u < k; ++u) {
          std::vector<double> logits(k);
          for (std::size_t v = 0; v < k; ++v) {
            logits[v] = 3.0 * (v == m) + 1.5 * (v == u) + 0.5 * (v == t) + 0.5 * (v == z);
          }
          const auto p = softmax(logits);
          y.insert(y.end(), p.begin(), p.end());
        }
  s.table(Var::Y) = Cpt{Var::Y, {Var::T, Var::M, Var::Z, Var::U}, std::move(y)};
  s = with_corruption(std::move(s), 0.5);
  require_valid(s);
  return s;
}

QpProblem qp_linear_vertex() {
  return QpProblem(Matrix(4, 4, 0.0), Vector{0.1, 0.9, -0.3, 0.4}, "linear_vertex");
}

QpProblem qp_psd_vertex() {
  return QpProblem(Matrix::identity(4), Vector{2.0, 0.1, 0.2, 0.3}, "psd_vertex");
}

QpProblem qp_interior() {
  Matrix g{{30.0, 2.0, 1.0, 0.0}, {2.0, 28.0, -1.0, 1.0}, {1.0, -1.0, 26.0, 2.0}, {0.0, 1.0, 2.0, 27.0}};
  const Vector target{0.3, 0.25, 0.25, 0.2};
  Vector b = g * target;
  return QpProblem(std::move(g), std::move(b), "interior");
}

std::vector<QpProblem> qp_problems() { return {qp_linear_vertex(), qp_psd_vertex(), qp_interior()}; }

std::vector<FixtureFile> files() {
  std::vector<FixtureFile> out{
      {"demo2.json", spec_to_json(demo2())},
      {"demo4.json", spec_to_json(demo4())},
      {"demo8.json", spec_to_json(demo8())},
      {"no_confounder.json", spec_to_json(no_confounder())},
  };
  for (const auto& p : qp_problems()) out.push_back({"qp_" + p.name() + ".json", problem_to_json(p)});
  return out;
}

std::filesystem::path directory() {
  if (const char* env = std::getenv("CERES_FIXTURES"); env != nullptr && *env != '\0') return env;
  return CERES_DEFAULT_FIXTURES;
}

std::vector<QpProblem> load_qp_problems(const std::filesystem::path& dir) {
  std::vector<QpProblem> out;
  for (const char* name : {"qp_linear_vertex.json", "qp_psd_vertex.json", "qp_interior.json"}) {
    std::ifstream in(dir / name);
    if (!in) throw InvalidInput("cannot open fixture " + (dir / name).string());
    std::stringstream buf;
    buf << in.rdbuf();
    out.push_back(problem_from_json(buf.str()));
  }
  return out;
}

}  // namespace ceres::fixtures
