#include <doctest.h>

#include "dagchoice/types.hpp"
#include "helpers.hpp"

using namespace dagchoice;

TEST_CASE("linear utilities") {
  Matrix attributes(2, 3);
  attributes << 2.0, 0.0, 1.0, 1.0, 1.0, 1.0;
  const ItemUniverse universe(attributes, {"x1", "x2", "const"});
  Vector beta(3);
  beta << -0.5, -0.02, -0.1;
  const ParameterVector params{beta, {}, 1.0};

  Item first{0, attributes.row(0).transpose()};
  CHECK(item_utility(first, params) == doctest::Approx(-1.1));
  CHECK_THROWS_AS((void)item_utility(Item{0, Vector::Ones(2)}, params), ConfigError);

  const Vector all = all_item_utilities(universe, params);
  CHECK(all[0] == doctest::Approx(-1.1));
  CHECK(all[1] == doctest::Approx(-0.62));

  Vector wrong(2);
  CHECK_THROWS_AS((void)all_item_utilities(universe, ParameterVector{wrong, {}, 1.0}),
                  ConfigError);
}

TEST_CASE("subset utility adds member utilities, weighted by counts") {
  const ItemUniverse universe = testutil::toy_universe();
  const ParameterVector params = testutil::toy_params();

  Observation pair{"o", {1, 2}, {{0, 1}, {1, 1}}};
  CHECK(subset_utility(pair, universe, params).value == doctest::Approx(-2.5));

  Observation empty{"o", {0, 2}, {}};
  CHECK(subset_utility(empty, universe, params).value == doctest::Approx(0.0));

  Observation repeated{"o", {0, 3}, {{0, 3}}};
  CHECK(subset_utility(repeated, universe, params).value == doctest::Approx(-3.0));
}

TEST_CASE("bounds validation") {
  CHECK_NOTHROW(validate_bounds({0, 1}));
  CHECK_NOTHROW(validate_bounds({3, 3}));
  CHECK_THROWS_AS(validate_bounds({-1, 2}), ConfigError);
  CHECK_THROWS_AS(validate_bounds({2, 1}), ConfigError);
  CHECK_THROWS_AS(validate_bounds({0, 0}), ConfigError);
}

TEST_CASE("item universe validation") {
  Matrix good(2, 1);
  good << 1.0, 2.0;
  CHECK_NOTHROW(ItemUniverse(good, {"x"}));
  CHECK_THROWS_AS(ItemUniverse(good, {"x", "y"}), DataError);

  Matrix bad = good;
  bad(1, 0) = std::numeric_limits<Scalar>::quiet_NaN();
  CHECK_THROWS_AS(ItemUniverse(bad, {"x"}), DataError);

  std::vector<Item> items;
  items.push_back({0, Vector::Ones(1)});
  items.push_back({0, Vector::Ones(1)});
  CHECK_THROWS_AS(ItemUniverse(items, {"x"}), DataError);

  items[1].id = 2;  // not dense
  CHECK_THROWS_AS(ItemUniverse(items, {"x"}), DataError);
}

TEST_CASE("observation validation lists violations") {
  const ItemUniverse universe = testutil::toy_universe();

  Observation ok{"o", {1, 2}, {{0, 1}, {2, 1}}};
  CHECK(validate_observation(ok, universe, false).empty());

  Observation unknown{"o", {1, 2}, {{7, 1}}};
  CHECK(validate_observation(unknown, universe, false).size() == 1);

  Observation repeat{"o", {1, 2}, {{0, 2}}};
  CHECK(!validate_observation(repeat, universe, false).empty());
  CHECK(validate_observation(repeat, universe, true).empty());

  Observation oversized{"o", {1, 2}, {{0, 1}, {1, 1}, {2, 1}}};
  CHECK(!validate_observation(oversized, universe, false).empty());

  Observation undersized{"o", {2, 3}, {{0, 1}}};
  CHECK(!validate_observation(undersized, universe, false).empty());
}
