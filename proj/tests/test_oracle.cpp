#include <doctest.h>

#include <cmath>
#include <random>

#include "dagchoice/oracle.hpp"
#include "helpers.hpp"

using namespace dagchoice;

TEST_CASE("fixture probabilities match the direct definition") {
  const auto set = enumerate_lmdc(testutil::toy_universe(), testutil::kToyBounds,
                                  testutil::toy_params());
  REQUIRE(set.composites.size() == 6);

  Scalar total = 0.0;
  for (const auto& c : set.composites) total += c.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));

  for (std::size_t i = 0; i < testutil::kToySubsets.size(); ++i)
    CHECK(set.probability_of(testutil::kToySubsets[i]) ==
          doctest::Approx(testutil::kToyProbs[i]).epsilon(1e-10));

  CHECK(std::log(set.probability_of(testutil::kToySubsets[0])) ==
        doctest::Approx(-0.8816829486244869).epsilon(1e-10));

  const std::vector<Selection> absent = {{0, 1}, {1, 1}, {2, 1}};
  CHECK(!set.find(absent).has_value());
  CHECK_THROWS_AS((void)set.probability_of(absent), ModelError);
}

TEST_CASE("enumeration sizes match the combinatorics") {
  std::mt19937_64 rng(7);
  const ItemUniverse u5 = testutil::random_universe(5, rng);
  const ParameterVector params{testutil::random_vector(3, rng), {}, 1.0};

  CHECK(enumerate_lmdc(u5, {0, 3}, params).composites.size() == 26);
  CHECK(enumerate_lmdc(u5, {2, 2}, params).composites.size() == 10);

  // count composites: all count vectors with total in [0, 2] over 3 items
  const ItemUniverse u3 = testutil::random_universe(3, rng);
  CHECK(enumerate_count_lmdc(u3, {0, 2}, params).composites.size() == 10);
  CHECK(static_cast<std::size_t>(composite_space_size(3, {0, 2}, true)) == 10);
}

TEST_CASE("count enumeration normalizes and orders counts") {
  std::mt19937_64 rng(11);
  const ItemUniverse universe = testutil::random_universe(4, rng);
  const ParameterVector params{testutil::random_vector(3, rng), {}, 1.0};
  const auto set = enumerate_count_lmdc(universe, {1, 3}, params);

  Scalar total = 0.0;
  for (const auto& c : set.composites) {
    total += c.probability;
    int last = -1;
    int sum = 0;
    for (const Selection& s : c.selections) {
      CHECK(s.item > last);
      last = s.item;
      CHECK(s.count >= 1);
      sum += s.count;
    }
    CHECK(sum >= 1);
    CHECK(sum <= 3);
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("oracle log-likelihood sums member log probabilities") {
  const ItemUniverse universe = testutil::toy_universe();
  const ParameterVector params = testutil::toy_params();
  const std::vector<Observation> obs = {
      {"a", testutil::kToyBounds, testutil::kToySubsets[0]},
      {"b", testutil::kToyBounds, testutil::kToySubsets[3]},
      {"c", testutil::kToyBounds, testutil::kToySubsets[5]},
  };
  const Scalar expected = std::log(testutil::kToyProbs[0]) + std::log(testutil::kToyProbs[3]) +
                          std::log(testutil::kToyProbs[5]);
  CHECK(brute_force_loglik(universe, obs, params, false) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("enumeration refuses oversized spaces and empty ones") {
  std::mt19937_64 rng(13);
  const ParameterVector params{testutil::random_vector(3, rng), {}, 1.0};
  const ItemUniverse big = testutil::random_universe(26, rng);
  CHECK_THROWS_AS((void)enumerate_lmdc(big, {0, 26}, params), ModelError);

  const ItemUniverse small = testutil::random_universe(2, rng);
  CHECK_THROWS_AS((void)enumerate_lmdc(small, {3, 3}, params), ModelError);
}
