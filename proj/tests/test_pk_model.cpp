#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "properties.hpp"
#include "tresim/pk_model.hpp"
#include "tresim/random.hpp"

using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {
const tresim::PkParams kTypical{12.0, 12.0, 14.0, 14.0, 5.0};
}

TEST_CASE("standard regimen layout", "[pk]") {
  const auto reg = tresim::standard_regimen(0.5, 5, 8.0, 3.0);
  REQUIRE(reg.events().size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(reg.events()[i].start == 8.0 * i);
    CHECK(reg.events()[i].duration == 0.5);
  }
  CHECK(reg.horizon() == 40.0);

  const auto single = tresim::standard_regimen(4.0, 1, 8.0, 3.0);
  REQUIRE(single.events().size() == 1);
  CHECK(single.events()[0].end() == 4.0);
  CHECK(single.horizon() == 8.0);

  const auto continuous = tresim::standard_regimen(8.0, 5, 8.0, 3.0);
  CHECK(continuous.infusing(12.0));
  CHECK(continuous.infusing(39.9));

  CHECK_THROWS_AS(tresim::standard_regimen(9.0, 5, 8.0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(tresim::standard_regimen(0.5, 0, 8.0, 3.0), std::invalid_argument);
  CHECK_THROWS_AS(tresim::standard_regimen(0.0, 5, 8.0, 3.0), std::invalid_argument);
}

TEST_CASE("dose windows", "[pk]") {
  const auto w = tresim::standard_regimen(0.5, 5, 8.0, 3.0).windows();
  REQUIRE(w.size() == 5);
  CHECK(w[3].index == 4);
  CHECK(w[3].start == 24.0);
  CHECK(w[3].end == 32.0);
  CHECK(w[3].infusion_end == 24.5);
  CHECK(w[3].infusing(24.5));
  CHECK_FALSE(w[3].infusing(24.51));
  CHECK(w[4].end == 40.0);
}

TEST_CASE("infusion rate is amount over duration in mg/h", "[pk]") {
  CHECK(tresim::InfusionEvent{0.0, 0.5, 3.0}.rate() == 6000.0);
  CHECK(tresim::InfusionEvent{0.0, 4.0, 3.0}.rate() == 750.0);
}

TEST_CASE("shift_infusion", "[pk]") {
  const auto reg = tresim::standard_regimen(0.5, 5, 8.0, 3.0);
  const auto same = tresim::shift_infusion(reg, 3, 0.0);
  for (std::size_t i = 0; i < 5; ++i) CHECK(same.events()[i].start == reg.events()[i].start);

  const auto moved = tresim::shift_infusion(reg, 3, 0.5);
  CHECK(moved.events()[3].start == 24.5);
  CHECK(moved.events()[3].duration == 0.5);
  CHECK(moved.events()[3].amount == 3.0);
  CHECK(moved.horizon() == 40.0);

  const tresim::DosingRegimen late({{1.0, 0.5, 3.0}}, 8.0);
  CHECK_THROWS_AS(tresim::shift_infusion(late, 0, -1.5), std::invalid_argument);
  CHECK_THROWS_AS(tresim::shift_infusion(reg, 5, 0.1), std::out_of_range);
}

TEST_CASE("concentration is zero before the first infusion", "[pk]") {
  const auto reg = tresim::standard_regimen(0.5, 5, 8.0, 3.0);
  CHECK(tresim::concentration(0.0, kTypical, reg) == 0.0);
}

TEST_CASE("q = 0 during a single infusion matches R/cl (1 - exp(-cl/v1 t))", "[pk][oracle]") {
  const tresim::DosingRegimen reg({{0.0, 4.0, 3.0}}, 8.0);
  const tresim::PkParams p{10.0, 20.0, 0.0, 15.0, 1.0};
  for (double t : {0.1, 1.0, 2.5, 3.99}) {
    const double want = 750.0 / 10.0 * (1.0 - std::exp(-0.5 * t));
    CHECK_THAT(tresim::concentration(t, p, reg), WithinRel(want, 1e-12));
  }
}

TEST_CASE("multi-dose concentration is the sum of shifted single doses", "[pk]") {
  const auto reg = tresim::standard_regimen(0.5, 5, 8.0, 3.0);
  const tresim::DosingRegimen one({{0.0, 0.5, 3.0}}, 40.0);
  for (double t : {0.3, 7.9, 16.2, 24.25, 31.0, 39.5}) {
    double sum = 0.0;
    for (int k = 0; k < 5; ++k)
      if (t > 8.0 * k) sum += tresim::concentration(t - 8.0 * k, kTypical, one);
    CHECK_THAT(tresim::concentration(t, kTypical, reg), WithinRel(sum, 1e-12));
  }
}

TEST_CASE("simulate_observation", "[pk]") {
  const auto reg = tresim::standard_regimen(0.5, 5, 8.0, 3.0);
  const double t = 25.0, c = tresim::concentration(t, kTypical, reg);

  SECTION("vanishing noise gives the model value") {
    tresim::Rng rng(1);
    auto p = kTypical;
    p.sigma = 1e-300;
    CHECK_THAT(tresim::simulate_observation(t, p, reg, rng), WithinRel(c, 1e-15));
  }
  SECTION("replay with the same seed") {
    tresim::Rng a(7), b(7);
    for (int i = 0; i < 10; ++i) CHECK(tresim::simulate_observation(t, kTypical, reg, a) == tresim::simulate_observation(t, kTypical, reg, b));
  }
  SECTION("Monte Carlo mean") {
    tresim::Rng rng(8);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += tresim::simulate_observation(t, kTypical, reg, rng);
    CHECK(std::abs(sum / n - c) < 3.0 * kTypical.sigma / std::sqrt(double(n)));
  }
}

TEST_CASE("seed derivation", "[random]") {
  CHECK(tresim::derive_seed(1, {2, 3}) == tresim::derive_seed(1, {2, 3}));
  CHECK(tresim::derive_seed(1, {2, 3}) != tresim::derive_seed(1, {3, 2}));
  CHECK(tresim::derive_seed(1, {2}) != tresim::derive_seed(2, {2}));
  static_assert(tresim::name_key("a") != tresim::name_key("b"));
}

TEST_CASE("pk properties", "[pk][property]") {
  for (auto check : {prop::pk_nonnegative, prop::pk_linearity, prop::pk_superposition, prop::pk_continuity,
                     prop::pk_one_compartment_oracle, prop::pk_matrix_exponential_oracle,
                     prop::pk_grid_matches_closed_form}) {
    const auto c = check();
    INFO(c.name << ": " << c.detail);
    CHECK(c.ok);
  }
}
