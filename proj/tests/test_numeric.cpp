#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ceres_causal/error.hpp"
#include "ceres_causal/numeric.hpp"
#include "ceres_causal/rng.hpp"

using namespace ceres;

namespace {

// Reference softmax in extended precision, no max-subtraction needed for the
// ranges used here.
std::vector<long double> softmax_ld(const std::vector<double>& s, long double tau = 1.0L) {
  std::vector<long double> e(s.size());
  long double total = 0.0L;
  for (std::size_t i = 0; i < s.size(); ++i) {
    e[i] = std::exp(static_cast<long double>(s[i]) / tau);
    total += e[i];
  }
  for (auto& x : e) x /= total;
  return e;
}

// Brute-force projection onto the 1-simplex in R^2: scan a = (t, 1 - t).
std::vector<double> grid_project_2d(double v0, double v1, double step) {
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (double t = 0.0; t <= 1.0 + 1e-15; t += step) {
    const double d = (t - v0) * (t - v0) + (1.0 - t - v1) * (1.0 - t - v1);
    if (d < best) {
      best = d;
      arg = t;
    }
  }
  return {arg, 1.0 - arg};
}

double sum(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s;
}

}  // namespace

TEST_CASE("vector rejects non-finite entries") {
  CHECK_THROWS_AS(Vector({1.0, std::nan("")}), InvalidInput);
  CHECK_THROWS_AS(Vector({std::numeric_limits<double>::infinity()}), InvalidInput);
  Vector v{1.0, 2.0};
  CHECK_THROWS_AS(v.set(0, std::nan("")), InvalidInput);
  CHECK(v == Vector{1.0, 2.0});
}

TEST_CASE("vector arithmetic") {
  const Vector a{1.0, 2.0, 3.0}, b{4.0, -5.0, 6.0};
  CHECK(dot(a, b) == doctest::Approx(12.0));
  CHECK(norm2(Vector{3.0, 4.0}) == 5.0);
  CHECK(norm_inf(b) == 6.0);
  CHECK((a + b) == Vector{5.0, -3.0, 9.0});
  CHECK((b - a) == Vector{3.0, -7.0, 3.0});
  CHECK((2.0 * a) == Vector{2.0, 4.0, 6.0});
  CHECK(concat(a, Vector{7.0}) == Vector{1.0, 2.0, 3.0, 7.0});
  CHECK_THROWS_AS(dot(a, Vector{1.0}), DimensionMismatch);
}

TEST_CASE("matrix basics") {
  const Matrix m{{1.0, 2.0}, {3.0, 4.0}};
  CHECK(m * Vector{1.0, 1.0} == Vector{3.0, 7.0});
  CHECK(m.transpose()(0, 1) == 3.0);
  CHECK(Matrix::identity(3) * Vector{1.0, 2.0, 3.0} == Vector{1.0, 2.0, 3.0});
  CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0}), DimensionMismatch);
  CHECK_THROWS_AS(m * Vector{1.0}, DimensionMismatch);
}

TEST_CASE("simplex weights validation") {
  CHECK_NOTHROW(SimplexWeights({0.25, 0.75}));
  CHECK_THROWS_AS(SimplexWeights({0.5, 0.6}), InvalidInput);
  CHECK_THROWS_AS(SimplexWeights({-0.1, 1.1}), InvalidInput);
}

TEST_CASE("softmax examples") {
  const auto u = softmax(Vector{0.0, 0.0, 0.0});
  for (double w : u) CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  for (double c : {-3.0, 0.0, 17.5}) {
    const auto w = softmax(Vector{c, c + std::log(2.0)});
    CHECK(std::abs(w[0] - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(w[1] - 2.0 / 3.0) < 1e-15);
  }
  // Far from zero c + ln 2 itself rounds by ~1e-13, so compare with the exact
  // softmax of the stored inputs.
  for (double c : {-500.0, 690.0}) {
    const std::vector<double> s{c, c + std::log(2.0)};
    const auto w = softmax(s);
    const auto ref = softmax_ld(s);
    CHECK(std::abs(w[0] - static_cast<double>(ref[0])) < 1e-15);
    CHECK(std::abs(w[1] - static_cast<double>(ref[1])) < 1e-15);
    CHECK(std::abs(w[0] - 1.0 / 3.0) < 1e-13);
  }

  const auto big = softmax(Vector{1000.0, 0.0});
  const auto ref = softmax_ld({1000.0, 0.0});
  CHECK(big[0] == 1.0);
  CHECK(big[1] == static_cast<double>(ref[1]));  // underflows to 0 in double
  CHECK(sum(big.span()) == 1.0);
}

TEST_CASE("softmax matches extended precision") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(20);
    std::vector<double> s(n);
    for (double& x : s) x = 30.0 * rng.normal();
    const double tau = rng.uniform(0.1, 4.0);
    const auto w = softmax(s, tau);
    const auto ref = softmax_ld(s, tau);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(w[i] - static_cast<double>(ref[i])) < 1e-15);
    CHECK(std::abs(sum(w.span()) - 1.0) <= 1e-12);
  }
}

TEST_CASE("softmax errors") {
  CHECK_THROWS_AS(softmax(std::span<const double>{}), InvalidInput);
  const std::vector<double> bad{1.0, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(softmax(bad), InvalidInput);
  CHECK_THROWS_AS(softmax(Vector{1.0}, 0.0), InvalidInput);
  CHECK_THROWS_AS(softmax(Vector{1.0}, -1.0), InvalidInput);
}

TEST_CASE("softmax shift invariance") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(8);
    // Scores on a 2^-20 grid and an integer shift keep s + c exact.
    for (double& x : s) x = std::ldexp(std::round(std::ldexp(5.0 * rng.normal(), 20)), -20);
    const double c = std::round(rng.uniform(-700.0, 700.0));
    std::vector<double> shifted = s;
    for (double& x : shifted) x += c;
    CHECK(max_abs_diff(softmax(s).span(), softmax(shifted).span()) <= 1e-14);
  }
}

TEST_CASE("softmax temperature monotonicity") {
  const std::vector<double> s{0.3, 1.7, -2.0, 1.2};
  double prev = 0.0;
  for (double tau : {10.0, 3.0, 1.0, 0.3, 0.1, 0.03, 0.01}) {
    const double w = softmax(s, tau)[1];
    CHECK(w >= prev);
    prev = w;
  }
  CHECK(prev == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("softmax on a large input stays on the simplex") {
  Rng rng(5);
  std::vector<double> s(1000000);
  for (double& x : s) x = 50.0 * rng.normal();
  const auto w = softmax(s);
  CHECK(std::abs(stable_sum(w.span()) - 1.0) <= 1e-12);
  CHECK(std::all_of(w.begin(), w.end(), [](double x) { return x >= 0.0; }));
}

TEST_CASE("log_sum_exp") {
  CHECK(log_sum_exp(Vector{3.25}) == 3.25);
  CHECK(log_sum_exp(Vector{0.0, 0.0}) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(log_sum_exp(Vector{1000.0, 1000.0}) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(log_sum_exp(std::span<const double>{}), InvalidInput);
}

TEST_CASE("stable_sum compensates cancellation") {
  const std::vector<double> xs{1e100, 1.0, -1e100};
  CHECK(stable_sum(xs) == 1.0);
}

TEST_CASE("convex_combine examples") {
  const Vector v{1.5, -2.0};
  CHECK(convex_combine(SimplexWeights({1.0}), std::vector<Vector>{v}) == v);
  CHECK(convex_combine(SimplexWeights({0.5, 0.5}), std::vector<Vector>{v, v}) == v);
  CHECK(convex_combine(SimplexWeights({0.25, 0.75}), std::vector<Vector>{Vector{0.0, 0.0}, Vector{4.0, 8.0}}) ==
        Vector{3.0, 6.0});
  CHECK_THROWS_AS(convex_combine(SimplexWeights({1.0}), std::vector<Vector>{}), InvalidInput);
  CHECK_THROWS_AS(convex_combine(SimplexWeights({0.5, 0.5}), std::vector<Vector>{v}), DimensionMismatch);
  CHECK_THROWS_AS(convex_combine(SimplexWeights({0.5, 0.5}), std::vector<Vector>{v, Vector{1.0}}),
                  DimensionMismatch);
}

TEST_CASE("convex_combine stays inside coordinate bounds") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vector> tokens;
    for (int j = 0; j < 6; ++j) tokens.push_back(Vector{rng.normal(), rng.normal(), rng.normal()});
    std::vector<double> raw(6);
    for (double& x : raw) x = rng.normal();
    const auto out = convex_combine(softmax(raw), tokens);
    for (std::size_t c = 0; c < 3; ++c) {
      double lo = tokens[0][c], hi = tokens[0][c];
      for (const auto& t : tokens) {
        lo = std::min(lo, t[c]);
        hi = std::max(hi, t[c]);
      }
      CHECK(out[c] >= lo - 1e-15);
      CHECK(out[c] <= hi + 1e-15);
    }
  }
}

TEST_CASE("simplex_project examples") {
  const std::vector<double> on{0.2, 0.3, 0.5};
  CHECK(simplex_project(on).values() == on);
  CHECK(simplex_project(Vector{2.0, 0.0}).values() == std::vector<double>{1.0, 0.0});

  const auto p = simplex_project(Vector{0.6, 0.6});
  const auto grid = grid_project_2d(0.6, 0.6, 1e-4);
  CHECK(std::abs(p[0] - 0.5) < 1e-15);
  CHECK(std::abs(p[0] - grid[0]) <= 1e-4);
  CHECK(std::abs(p[1] - grid[1]) <= 1e-4);
  CHECK_THROWS_AS(simplex_project(std::span<const double>{}), InvalidInput);
}

TEST_CASE("simplex_project agrees with grid search in two dimensions") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    const auto p = simplex_project(Vector{a, b});
    const auto g = grid_project_2d(a, b, 1e-4);
    CHECK(std::abs(p[0] - g[0]) <= 1e-4);
  }
}

TEST_CASE("simplex_project is optimal and idempotent") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(12);
    std::vector<double> v(n);
    for (double& x : v) x = 3.0 * rng.normal();
    const auto p = simplex_project(v);
    CHECK(simplex_project(p.span()) == p);

    // Optimality: <v - p, q - p> <= 0 for every vertex q.
    for (std::size_t k = 0; k < n; ++k) {
      double inner = 0.0;
      for (std::size_t j = 0; j < n; ++j) inner += (v[j] - p[j]) * ((j == k ? 1.0 : 0.0) - p[j]);
      CHECK(inner <= 1e-12);
    }
  }
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  const std::vector<double> xs{1.0, 3.0, 3.0, 2.0};
  CHECK(argmax(xs) == 1);
}
