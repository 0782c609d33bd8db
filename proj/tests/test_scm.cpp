#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ceres_causal/error.hpp"
#include "ceres_causal/fixtures.hpp"
#include "ceres_causal/scm.hpp"
#include "test_support.hpp"

using namespace ceres;
using testing_support::build_spec;
using testing_support::NaiveJoint;

namespace {

std::array<std::size_t, kVarCount> all_cards(std::size_t k) {
  std::array<std::size_t, kVarCount> c{};
  c.fill(k);
  return c;
}

ScmSpec small_random_spec(std::uint64_t seed, std::size_t max_card = 3, bool direct = false) {
  Rng rng = Rng::stream(seed, 0);
  RandomSpecOptions opt;
  opt.max_card = max_card;
  opt.direct_x_to_y = direct;
  return random_spec(rng, opt);
}

double max_diff(std::span<const double> a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("naive oracle: observational matches full-joint enumeration") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScmSpec spec = small_random_spec(seed);
    const NaiveJoint naive(spec);
    for (Var target : kAllVars) CHECK(max_diff(observational(spec, target).span(), naive.conditional(target)) < 1e-13);

    auto ev = NaiveJoint::filled(-1);
    ev[index_of(Var::T)] = 0;
    ev[index_of(Var::X)] = static_cast<long>(spec.cardinality(Var::X) - 1);
    const Assignment cond{{Var::T, 0}, {Var::X, spec.cardinality(Var::X) - 1}};
    CHECK(max_diff(observational(spec, Var::Y, cond).span(), naive.conditional(Var::Y, ev)) < 1e-13);
    CHECK(max_diff(observational(spec, Var::U, cond).span(), naive.conditional(Var::U, ev)) < 1e-13);
  }
}

TEST_CASE("naive oracle: intervene matches forced-table enumeration") {
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    const ScmSpec spec = small_random_spec(seed, 3, seed % 2 == 0);
    for (Var v : {Var::T, Var::X, Var::M}) {
      for (std::size_t s = 0; s < spec.cardinality(v); ++s) {
        auto forced = NaiveJoint::filled(-1);
        forced[index_of(v)] = static_cast<long>(s);
        const NaiveJoint naive(spec, forced);
        CHECK(max_diff(intervene(spec, Assignment{{v, s}}, Var::Y).span(), naive.conditional(Var::Y)) < 1e-13);
      }
    }
  }
}

TEST_CASE("validate_spec accepts a well-formed binary spec") {
  const ScmSpec s = build_spec(all_cards(2), [](Var, const auto&, std::size_t y) { return 1.0 + y; });
  CHECK(validate_spec(s).empty());
}

TEST_CASE("validate_spec names a row that sums to 0.9") {
  ScmSpec s = build_spec(all_cards(2), [](Var, const auto&, std::size_t) { return 1.0; });
  s.table(Var::X).probs = {0.5, 0.5, 0.45, 0.45};
  const auto v = validate_spec(s);
  REQUIRE(v.size() == 1);
  CHECK(v[0].where.find("X_given_U") != std::string::npos);
  CHECK(v[0].where.find("[1]") != std::string::npos);
}

TEST_CASE("validate_spec flags an Md table that depends on U") {
  ScmSpec s = build_spec(all_cards(2), [](Var, const auto&, std::size_t) { return 1.0; });
  s.table(Var::Md) = Cpt{Var::Md, {Var::X, Var::U}, std::vector<double>(8, 0.5)};
  const auto v = validate_spec(s);
  CHECK_FALSE(v.empty());
  CHECK_THROWS_AS(require_valid(s), SpecError);
  CHECK_THROWS_AS(sample(s, 1, 3), SpecError);
}

TEST_CASE("validate_spec flags negative entries and bad cardinalities") {
  ScmSpec s = build_spec(all_cards(2), [](Var, const auto&, std::size_t) { return 1.0; });
  s.table(Var::Z).probs = {1.5, -0.5};
  CHECK_FALSE(validate_spec(s).empty());
  ScmSpec t = build_spec(all_cards(2), [](Var, const auto&, std::size_t) { return 1.0; });
  t.table(Var::Y).probs.pop_back();
  CHECK_FALSE(validate_spec(t).empty());
}

TEST_CASE("sampling examples") {
  const ScmSpec spec = fixtures::demo2();
  CHECK(sample(spec, 5, 0).empty());

  // All point masses: every draw is the same forced assignment.
  const ScmSpec fixed = build_spec(all_cards(3), [](Var v, const auto&, std::size_t y) {
    return y == (index_of(v) % 3) ? 1.0 : 0.0;
  });
  const auto draws = sample(fixed, 123, 3);
  REQUIRE(draws.size() == 3);
  for (const auto& d : draws) {
    CHECK(d == draws[0]);
    for (Var v : kAllVars) CHECK(d.get(v) == index_of(v) % 3);
  }
}

TEST_CASE("sampled P(Y=1) lies within 3 sigma of the exact marginal") {
  const ScmSpec spec = fixtures::demo2();
  const std::size_t n = 100000;
  const auto draws = sample(spec, 42, n);
  double ones = 0.0;
  for (const auto& d : draws) ones += d.y == 1;
  const double p = observational(spec, Var::Y)[1];
  const double sigma = std::sqrt(p * (1.0 - p) / n);
  CHECK(std::abs(ones / n - p) <= 3.0 * sigma);
}

TEST_CASE("sampling is reproducible per seed") {
  const ScmSpec spec = fixtures::demo4();
  CHECK(sample(spec, 9, 500) == sample(spec, 9, 500));
  CHECK_FALSE(sample(spec, 9, 500) == sample(spec, 10, 500));
}

TEST_CASE("sample frequencies match every exact marginal") {
  const ScmSpec spec = small_random_spec(77, 4);
  const std::size_t n = 200000;
  const auto draws = sample(spec, 3, n);
  for (Var v : kAllVars) {
    const auto exact = observational(spec, v);
    std::vector<double> freq(spec.cardinality(v), 0.0);
    for (const auto& d : draws) freq[d.get(v)] += 1.0;
    for (std::size_t s = 0; s < freq.size(); ++s) {
      const double sigma = std::sqrt(exact[s] * (1.0 - exact[s]) / n);
      CHECK(std::abs(freq[s] / n - exact[s]) <= 4.5 * sigma + 1e-12);
    }
  }
}

TEST_CASE("observational examples") {
  const ScmSpec spec = small_random_spec(5);
  const auto py = observational(spec, Var::Y);
  double total = 0.0;
  for (double p : py.span()) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  // Y copies T.
  const ScmSpec copy = build_spec(all_cards(2), [](Var v, const std::vector<std::size_t>& ps, std::size_t y) {
    if (v == Var::Y) return y == ps[0] ? 1.0 : 0.0;
    return 1.0 + static_cast<double>(y);
  });
  const auto d = observational(copy, Var::Y, Assignment{{Var::T, 1}});
  CHECK(d[0] == 0.0);
  CHECK(d[1] == 1.0);
}

TEST_CASE("observational rejects zero-probability conditions") {
  const ScmSpec s = build_spec(all_cards(2), [](Var v, const auto&, std::size_t y) {
    if (v == Var::Z) return y == 0 ? 1.0 : 0.0;
    return 1.0;
  });
  CHECK_THROWS_AS(observational(s, Var::Y, Assignment{{Var::Z, 1}}), ConditionUnsupported);
}

TEST_CASE("intervene examples") {
  // Y ignores T: do(T) leaves P(Y) unchanged.
  const ScmSpec spec = build_spec(all_cards(2), [](Var v, const std::vector<std::size_t>& ps, std::size_t y) {
    if (v == Var::Y) return 1.0 + static_cast<double>(y * (ps[1] + 2 * ps[3] + 1));
    return 1.0 + static_cast<double>(y) * 0.7 + (ps.empty() ? 0.0 : static_cast<double>(ps[0]) * y);
  });
  const auto marginal = observational(spec, Var::Y);
  for (std::size_t t = 0; t < 2; ++t) {
    CHECK(max_diff(intervene(spec, Assignment{{Var::T, t}}, Var::Y).span(), marginal.probs()) < 1e-15);
  }

  // No confounders: do equals conditioning, for T and for X.
  Rng rng = Rng::stream(31, 0);
  RandomSpecOptions opt;
  opt.no_confounders = true;
  for (int k = 0; k < 20; ++k) {
    const ScmSpec nc = random_spec(rng, opt);
    for (Var v : {Var::T, Var::X}) {
      for (std::size_t s = 0; s < nc.cardinality(v); ++s) {
        CHECK(max_diff(intervene(nc, Assignment{{v, s}}, Var::Y).span(),
                       observational(nc, Var::Y, Assignment{{v, s}}).probs()) <= 1e-12);
      }
    }
  }

  CHECK_THROWS_AS(intervene(spec, Assignment{}, Var::Y), InvalidInput);
}

TEST_CASE("intervention differs from conditioning under confounding") {
  const ScmSpec spec = fixtures::demo4();
  const auto a = intervene(spec, Assignment{{Var::X, 1}}, Var::Y);
  const auto b = observational(spec, Var::Y, Assignment{{Var::X, 1}});
  CHECK(max_diff(a.span(), b.probs()) > 1e-3);
}

TEST_CASE("random specs are valid with bounded cardinalities") {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    const ScmSpec s = random_spec(rng);
    CHECK(validate_spec(s).empty());
    for (Var v : kAllVars) {
      CHECK(s.cardinality(v) >= 2);
      CHECK(s.cardinality(v) <= 8);
    }
    CHECK(s.table(Var::Md).probs == s.table(Var::M).probs);
  }
}

TEST_CASE("with_corruption mixes the base and corruption tables") {
  const ScmSpec base = fixtures::demo4();
  const ScmSpec clean = with_corruption(base, 0.0);
  const ScmSpec dirty = with_corruption(base, 1.0);
  const std::size_t k = 4;
  for (std::size_t x = 0; x < k; ++x)
    for (std::size_t u = 0; u < k; ++u)
      for (std::size_t m = 0; m < k; ++m) {
        const std::size_t i = (x * k + u) * k + m;
        CHECK(clean.table(Var::Mv).probs[i] == base.table(Var::M).probs[x * k + m]);
        CHECK(dirty.table(Var::Mv).probs[i] == base.mv_corruption->probs[i]);
      }
  CHECK_THROWS_AS(with_corruption(base, 1.5), InvalidInput);
}

TEST_CASE("embeddings are unit norm and seeded") {
  const ScmSpec spec = fixtures::demo4();
  const auto e = make_embeddings(spec);
  REQUIRE(e.x.size() == 4);
  for (const auto& v : e.x) CHECK(norm2(v) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(make_embeddings(spec).m_d == e.m_d);
}

TEST_CASE("spec JSON round trip") {
  for (const ScmSpec& s : {fixtures::demo2(), fixtures::demo4(), small_random_spec(8, 5, true)}) {
    const std::string text = spec_to_json(s);
    const ScmSpec back = spec_from_json(text);
    CHECK(spec_to_json(back) == text);
    CHECK(back.card == s.card);
    for (Var v : kAllVars) CHECK(back.table(v).probs == s.table(v).probs);
    CHECK(back.direct_x_to_y == s.direct_x_to_y);
  }
}

TEST_CASE("spec JSON loader names the offending path") {
  auto doc = nlohmann::ordered_json::parse(spec_to_json(fixtures::demo2()));
  doc["tables"]["Y_given_TMZU"][1][0][0][1][0] = 0.999;
  try {
    (void)spec_from_json(doc.dump());
    FAIL("expected SpecError");
  } catch (const SpecError& e) {
    CHECK(std::string(e.what()).find("tables.Y_given_TMZU[1][0][0][1]") != std::string::npos);
  }

  // Within the 1e-9 load tolerance is accepted.
  auto near = nlohmann::ordered_json::parse(spec_to_json(fixtures::demo2()));
  const double p0 = near["tables"]["X_given_U"][0][0].get<double>();
  near["tables"]["X_given_U"][0][0] = p0 + 1e-10;
  CHECK_NOTHROW((void)spec_from_json(near.dump()));

  CHECK_THROWS_AS(spec_from_json("{\"cards\": 3}"), SpecError);
  CHECK_THROWS_AS(spec_from_json("not json"), SpecError);
  CHECK_THROWS_AS(load_spec("/nonexistent/spec.json"), SpecError);
}
