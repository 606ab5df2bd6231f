#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "dagchoice/nested_logit.hpp"
#include "dagchoice/recursive_logit.hpp"
#include "helpers.hpp"

using namespace dagchoice;

TEST_CASE("scale spec parsing") {
  std::mt19937_64 rng(1);
  const ItemUniverse universe = testutil::random_universe(3, rng);

  const ScaleSpec spec = ScaleSpec::parse("const, count, x2", universe);
  REQUIRE(spec.size() == 3);
  CHECK(spec.selectors[0].kind == ScaleSelector::Kind::Const);
  CHECK(spec.selectors[1].kind == ScaleSelector::Kind::Count);
  CHECK(spec.selectors[2].kind == ScaleSelector::Kind::ItemAttr);
  CHECK(spec.selectors[2].attribute == 1);
  CHECK(!spec.count_only());
  CHECK(ScaleSpec::parse("const,count", universe).count_only());

  const auto names = spec.names(universe);
  CHECK(names == std::vector<std::string>{"scale:const", "scale:count", "scale:x2"});

  CHECK_THROWS_AS((void)ScaleSpec::parse("bogus", universe), ConfigError);
  CHECK_THROWS_AS((void)ScaleSpec::parse("", universe), ConfigError);
}

TEST_CASE("zero scale coefficients reduce to the plain model") {
  std::mt19937_64 rng(2);
  const int m = 5;
  const Bounds bounds{1, 3};
  const ItemUniverse universe = testutil::random_universe(m, rng);
  const ParameterVector params{testutil::random_vector(3, rng, 0.5), Vector::Zero(2), 1.0};
  const ScaleSpec spec = ScaleSpec::parse("const,count", universe);
  const ArcUtilities utils = make_arc_utilities(universe, params);

  for (const DagVariant variant : {DagVariant::BiC, DagVariant::MuC}) {
    const ChoiceDag dag = build_dag(variant, m, bounds);
    const ValueTable plain = solve_value(dag, utils);
    const NestedValueTable nested = solve_nested_value(dag, utils, universe, spec, params.gamma);
    for (int k = 0; k < dag.num_nodes(); ++k) {
      if (plain.value[k] == kNegInf) {
        CHECK(nested.value[k] == kNegInf);
      } else {
        CHECK(nested.value[k] == doctest::Approx(plain.value[k]).epsilon(1e-12));
      }
      CHECK(nested.mu[k] == doctest::Approx(1.0));
    }

    for (const Observation& obs : testutil::draw_observations(dag, universe, params, 20, 3))
      CHECK(nested_subset_log_probability(dag, nested, utils, obs) ==
            doctest::Approx(subset_log_probability(dag, plain, utils, obs)).epsilon(1e-12));
  }
}

TEST_CASE("count-only scales give the same distribution on both graphs") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_int_distribution<int> m_draw(2, 6);
    const int m = m_draw(rng);
    const Bounds bounds = testutil::random_bounds(m, rng);
    const ItemUniverse universe = testutil::random_universe(m, rng);
    const ScaleSpec spec = ScaleSpec::parse("const,count", universe);
    const ParameterVector params{testutil::random_vector(3, rng, 0.4),
                                 testutil::random_vector(2, rng, 0.3), 1.0};
    const ArcUtilities utils = make_arc_utilities(universe, params);

    const ChoiceDag bic = build_bic(m, bounds);
    const ChoiceDag muc = build_muc(m, bounds);
    const NestedValueTable tb = solve_nested_value(bic, utils, universe, spec, params.gamma);
    const NestedValueTable tm = solve_nested_value(muc, utils, universe, spec, params.gamma);

    // walk every feasible subset via bitmask enumeration
    Scalar total_bic = 0.0;
    for (unsigned mask = 0; mask < (1u << m); ++mask) {
      const int size = std::popcount(mask);
      if (size < bounds.lower || size > bounds.upper) continue;
      Observation obs{"t", bounds, {}};
      for (int i = 0; i < m; ++i)
        if (mask & (1u << i)) obs.selections.push_back({i, 1});
      const Scalar pb = std::exp(nested_subset_log_probability(bic, tb, utils, obs));
      const Scalar pm = std::exp(nested_subset_log_probability(muc, tm, utils, obs));
      CHECK(std::abs(pb - pm) < 1e-10);
      total_bic += pb;
    }
    CHECK(total_bic == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("non-count scales make the distribution order-dependent") {
  // Three items, one informative attribute; the scale reads that attribute, so
  // relabeling the items changes subset probabilities.
  Matrix attributes(3, 2);
  attributes << 1.0, -1.0, 1.0, -1.5, 1.0, -2.0;
  const ItemUniverse forward(attributes, {"const", "x"});
  Matrix reversed_rows(3, 2);
  reversed_rows << attributes.row(2), attributes.row(1), attributes.row(0);
  const ItemUniverse reversed(reversed_rows, {"const", "x"});

  Vector beta(2);
  beta << 0.0, 1.0;
  Vector gamma(1);
  gamma << 0.6;
  const ParameterVector params{beta, gamma, 1.0};
  const Bounds bounds{1, 2};

  const auto subset_prob = [&](const ItemUniverse& universe, std::vector<Selection> sels) {
    const ScaleSpec spec = ScaleSpec::parse("x", universe);
    const ArcUtilities utils = make_arc_utilities(universe, params);
    const ChoiceDag dag = build_bic(3, bounds);
    const NestedValueTable table = solve_nested_value(dag, utils, universe, spec, gamma);
    return std::exp(
        nested_subset_log_probability(dag, table, utils, {"t", bounds, std::move(sels)}));
  };

  // {s1} in the forward labeling is {s3} after reversal; same underlying item
  const Scalar forward_p = subset_prob(forward, {{0, 1}});
  const Scalar reversed_p = subset_prob(reversed, {{2, 1}});
  CHECK(std::abs(forward_p - reversed_p) > 1e-6);
}

TEST_CASE("nested gradient matches central differences") {
  std::mt19937_64 rng(4);
  const int m = 5;
  const Bounds bounds{0, 3};
  const ItemUniverse universe = testutil::random_universe(m, rng);
  const ScaleSpec spec = ScaleSpec::parse("const,count,x1", universe);
  ParameterVector params{testutil::random_vector(3, rng, 0.3),
                         testutil::random_vector(3, rng, 0.2), 1.0};

  for (const DagVariant variant : {DagVariant::BiC, DagVariant::MuC}) {
    const ChoiceDag proto = build_dag(variant, m, bounds);
    const auto observations = testutil::draw_observations(proto, universe, params, 30, 6);
    const DagsByBounds dags = build_dags(variant, m, observations);

    const Vector grad =
        nested_log_likelihood_gradient(dags, observations, universe, params, spec);
    REQUIRE(grad.size() == 6);

    const auto eval = [&](const ParameterVector& p) {
      return nested_log_likelihood(dags, observations, universe, p, spec);
    };
    for (int q = 0; q < 6; ++q) {
      ParameterVector hi = params, lo = params;
      Vector& hi_block = q < 3 ? hi.beta : hi.gamma;
      Vector& lo_block = q < 3 ? lo.beta : lo.gamma;
      const int j = q < 3 ? q : q - 3;
      const Scalar h = 1e-5;
      hi_block[j] += h;
      lo_block[j] -= h;
      const Scalar fd = (eval(hi) - eval(lo)) / (2 * h);
      CHECK(grad[q] == doctest::Approx(fd).epsilon(1e-5));
    }

    CHECK(nested_log_likelihood(dags, observations, universe, params, spec, 4) ==
          nested_log_likelihood(dags, observations, universe, params, spec, 1));
  }
}

TEST_CASE("nested value iteration settles after m + 2 sweeps") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Scalar> start(0.0, 2.0);
  for (int trial = 0; trial < 8; ++trial) {
    std::uniform_int_distribution<int> m_draw(1, 7);
    const int m = m_draw(rng);
    const Bounds bounds = testutil::random_bounds(m, rng);
    const ItemUniverse universe = testutil::random_universe(m, rng);
    const ScaleSpec spec = ScaleSpec::parse("const,count", universe);
    const ParameterVector params{testutil::random_vector(3, rng, 0.4),
                                 testutil::random_vector(2, rng, 0.3), 1.0};
    const ArcUtilities utils = make_arc_utilities(universe, params);
    for (const DagVariant variant : {DagVariant::BiC, DagVariant::MuC}) {
      const ChoiceDag dag = build_dag(variant, m, bounds);
      const Vector mu = node_scales(dag, spec, universe, params.gamma);
      Vector z0(dag.num_nodes());
      for (int k = 0; k < dag.num_nodes(); ++k) z0[k] = start(rng);

      const NestedValueTable exact = solve_nested_value(dag, utils, universe, spec, params.gamma);
      const Vector settled = nested_value_iterate(dag, utils, mu, z0, m + 2);
      const Vector next = nested_value_iterate(dag, utils, mu, settled, 1);
      for (int k = 0; k < dag.num_nodes(); ++k) {
        const Scalar zk =
            exact.value[k] == kNegInf ? 0.0 : std::exp(exact.value[k] / exact.mu[k]);
        CHECK(settled[k] == doctest::Approx(zk).epsilon(1e-10));
        CHECK(next[k] == doctest::Approx(settled[k]).epsilon(1e-12));
      }
    }
  }
}
