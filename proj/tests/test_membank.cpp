#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ceres_causal/error.hpp"
#include "ceres_causal/membank.hpp"

using namespace ceres;

namespace {

Vector gaussian(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (double& x : v) x = rng.normal();
  return Vector(std::move(v));
}

}  // namespace

TEST_CASE("push keeps the newest W frames") {
  MemoryBank bank(5);
  for (std::int64_t t = 1; t <= 100; ++t) bank.push(Vector{double(t)}, t);
  CHECK(bank.full());
  CHECK(bank.times() == std::vector<std::int64_t>{96, 97, 98, 99, 100});
  CHECK(bank.embeddings().front() == Vector{96.0});
  CHECK(bank.newest_time() == 100);
}

TEST_CASE("push rejects stale times and ragged frames") {
  MemoryBank bank(3);
  bank.push(Vector{1.0, 2.0}, 4);
  CHECK_THROWS_AS(bank.push(Vector{1.0, 2.0}, 4), TimeOrderError);
  CHECK_THROWS_AS(bank.push(Vector{1.0, 2.0}, 3), TimeOrderError);
  CHECK_THROWS_AS(bank.push(Vector{1.0}, 5), DimensionMismatch);
  CHECK(bank.size() == 1);
  CHECK_THROWS_AS(MemoryBank(3, 0.0), InvalidInput);
}

TEST_CASE("capacity zero drops pushes and passes through") {
  MemoryBank bank(0);
  bank.push(Vector{1.0}, 1);
  bank.push(Vector{2.0}, 2);
  CHECK(bank.empty());
  CHECK(bank.newest_time() == 2);
  CHECK_THROWS_AS(bank.push(Vector{3.0}, 2), TimeOrderError);
  const auto ctx = context(bank, Vector{7.0});
  CHECK(ctx.value == Vector{7.0});
  CHECK(ctx.weights.empty());
}

TEST_CASE("context examples") {
  MemoryBank bank(3);
  CHECK(context(bank, Vector{1.0, 1.0}).value == Vector{1.0, 1.0});

  bank.push(Vector{0.5, -1.0}, 0);
  CHECK(context(bank, Vector{3.0, 3.0}).value == Vector{0.5, -1.0});

  MemoryBank same(3);
  for (int t = 0; t < 3; ++t) same.push(Vector{0.2, 0.4}, t);
  const auto ctx = context(same, Vector{-5.0, 9.0});
  CHECK(max_abs_diff(ctx.value.span(), Vector{0.2, 0.4}.span()) <= 1e-15);

  MemoryBank orth(2);
  orth.push(Vector{1.0, 0.0}, 0);
  orth.push(Vector{0.0, 1.0}, 1);
  const auto two = context(orth, Vector{0.0, 0.0});
  CHECK(two.weights[0] == 0.5);
  CHECK(two.weights[1] == 0.5);

  CHECK_THROWS_AS(context(orth, Vector{1.0}), DimensionMismatch);
}

TEST_CASE("scores are clamped to kappa, after offsets") {
  MemoryBank bank(2, 1.0);
  bank.push(Vector{10.0}, 0);
  bank.push(Vector{-10.0}, 1);
  CHECK(bank.scores(Vector{1.0}) == std::vector<double>{1.0, -1.0});
  const std::vector<double> off{-10.5, 10.25};
  CHECK(bank.scores(Vector{1.0}, off) == std::vector<double>{-0.5, 0.25});
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS((void)bank.scores(Vector{1.0}, bad), DimensionMismatch);
}

TEST_CASE("tiny kappa gives nearly uniform weights") {
  MemoryBank bank(4, 1e-12);
  Rng rng(1);
  for (int t = 0; t < 4; ++t) bank.push(gaussian(rng, 3), t);
  const auto rep = weight_deviation(bank, gaussian(rng, 3));
  CHECK(rep.max_deviation <= 1e-11);
}

TEST_CASE("deviation example with similarities of plus and minus one half") {
  // Raw similarities +-10 clamp to +-kappa = +-0.5.
  MemoryBank bank(2, 0.5);
  bank.push(Vector{10.0}, 0);
  bank.push(Vector{-10.0}, 1);
  const auto rep = weight_deviation(bank, Vector{1.0});
  CHECK(rep.coordinate_bound == doctest::Approx((std::exp(1.0) - 1.0) / 2.0).epsilon(1e-15));
  CHECK(rep.coordinate_bound == doctest::Approx(0.8591).epsilon(1e-4));
  const double w0 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(rep.weights[0] == doctest::Approx(w0).epsilon(1e-15));
  CHECK(rep.max_deviation == doctest::Approx(w0 - 0.5).epsilon(1e-14));
  CHECK(rep.max_deviation == doctest::Approx(0.2311).epsilon(1e-4));
  CHECK(rep.l1_deviation == doctest::Approx(2.0 * (w0 - 0.5)).epsilon(1e-14));
  CHECK(rep.coordinate_pass);
  CHECK(rep.ratio_pass);
}

TEST_CASE("deviation needs a full bank") {
  MemoryBank bank(3);
  bank.push(Vector{1.0}, 0);
  CHECK_THROWS_AS(weight_deviation(bank, Vector{1.0}), InvalidState);
  CHECK_THROWS_AS(weight_deviation(MemoryBank(0), Vector{1.0}), InvalidState);
}

TEST_CASE("coordinate and ratio bounds hold on random draws") {
  Rng rng(2024);
  for (int draw = 0; draw < 1000; ++draw) {
    const std::size_t w = 1 + rng.uniform_int(10);
    const double kappa = 0.05 + 2.0 * rng.uniform();
    MemoryBank bank(w, kappa);
    for (std::size_t t = 0; t < w; ++t) bank.push(3.0 * gaussian(rng, 4), std::int64_t(t));
    const auto rep = weight_deviation(bank, 3.0 * gaussian(rng, 4));
    CHECK(rep.coordinate_pass);
    CHECK(rep.ratio_pass);
    CHECK(rep.max_deviation <= rep.coordinate_bound);
  }
}

TEST_CASE("deviation JSON carries every field") {
  MemoryBank bank(2);
  bank.push(Vector{0.5}, 0);
  bank.push(Vector{-0.5}, 1);
  const std::string json = deviation_to_json(weight_deviation(bank, Vector{1.0}));
  for (const char* key : {"weights", "l1_deviation", "max_deviation", "coordinate_bound", "l1_bound",
                          "coordinate_pass", "ratio_pass", "l1_pass"})
    CHECK(json.find(key) != std::string::npos);
}

TEST_CASE("loglog slope") {
  const std::vector<double> x{1.0, 10.0, 100.0};
  const std::vector<double> y{1.0, 0.1, 0.01};
  CHECK(loglog_slope(x, y) == doctest::Approx(-1.0).epsilon(1e-12));
  const std::vector<double> zeros{0.0, 0.0, 0.0};
  CHECK(loglog_slope(x, zeros) == 0.0);
  CHECK_THROWS_AS(loglog_slope(std::span(x).first(1), std::span(y).first(1)), InvalidInput);
}

TEST_CASE("point-mass frames have zero error") {
  const auto gen = FrameGenerator::point_mass(Vector{0.1, -0.2, 0.3});
  const std::vector<std::size_t> grid{1, 4, 16};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto t = convergence_experiment(gen, grid, seeds, 1.0);
  for (const auto& row : t.rows) {
    CHECK(row.mean_err_unweighted <= 1e-15);
    CHECK(row.mean_err_weighted <= 1e-15);
  }
  CHECK(t.slope_unweighted == 0.0);
  CHECK(t.envelope_pass);
}

TEST_CASE("the plain mean converges at the square-root rate") {
  const auto gen = FrameGenerator::isotropic_gaussian(Vector(8));
  const std::vector<std::size_t> grid{4, 16, 64, 256};
  std::vector<std::uint64_t> seeds(100);
  std::iota(seeds.begin(), seeds.end(), 1);
  const auto t = convergence_experiment(gen, grid, seeds, 1.0, 4);
  CHECK(std::abs(t.slope_unweighted + 0.5) <= 0.1);
  CHECK(t.envelope_pass);

  const auto again = convergence_experiment(gen, grid, seeds, 1.0, 1);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(t.rows[i].mean_err_unweighted == again.rows[i].mean_err_unweighted);
    CHECK(t.rows[i].mean_err_weighted == again.rows[i].mean_err_weighted);
  }
}
