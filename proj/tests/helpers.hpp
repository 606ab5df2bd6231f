#pragma once

// Shared fixtures for the test binaries: the three-item instance with
// utilities (-1, -1.5, -2) whose probabilities are pinned below, plus random
// instance generators.

#include <random>
#include <vector>

#include "dagchoice/dag.hpp"
#include "dagchoice/recursive_logit.hpp"
#include "dagchoice/types.hpp"

namespace testutil {

using namespace dagchoice;

// Three items, one attribute equal to the utility itself, beta = 1.
inline ItemUniverse toy_universe() {
  Matrix attributes(3, 1);
  attributes << -1.0, -1.5, -2.0;
  return ItemUniverse(attributes, {"x"});
}

inline ParameterVector toy_params() { return {Vector::Ones(1), {}, 1.0}; }

inline const Bounds kToyBounds{1, 2};

// Subset probabilities of the toy instance, recomputed from the definition:
// P(S) = exp(v(S)) / sum over |S'| in [1,2] of exp(v(S')).
//   {s1} {s2} {s3} {s1,s2} {s1,s3} {s2,s3}
inline const std::vector<std::vector<Selection>> kToySubsets = {
    {{0, 1}}, {{1, 1}}, {{2, 1}}, {{0, 1}, {1, 1}}, {{0, 1}, {2, 1}}, {{1, 1}, {2, 1}}};
inline const std::vector<Scalar> kToyProbs = {0.4140854404196781, 0.2511555153551437,
                                              0.1523335204188218, 0.0923949506359759,
                                              0.0560403703633547, 0.0339902028070258};

// Two log-normal(0,1) attributes and a constant, the synthetic layout.
inline ItemUniverse random_universe(int m, std::mt19937_64& rng) {
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  Matrix attributes(m, 3);
  for (int i = 0; i < m; ++i) {
    attributes(i, 0) = std::exp(normal(rng));
    attributes(i, 1) = std::exp(normal(rng));
    attributes(i, 2) = 1.0;
  }
  return ItemUniverse(attributes, {"x1", "x2", "const"});
}

inline Vector random_vector(int k, std::mt19937_64& rng, Scalar scale = 1.0) {
  std::normal_distribution<Scalar> normal(0.0, scale);
  Vector v(k);
  for (int q = 0; q < k; ++q) v[q] = normal(rng);
  return v;
}

inline Bounds random_bounds(int m, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> upper_draw(1, m);
  const int upper = upper_draw(rng);
  std::uniform_int_distribution<int> lower_draw(0, upper);
  return {lower_draw(rng), upper};
}

// Observations drawn from the model itself (exact distribution).
inline std::vector<Observation> draw_observations(const ChoiceDag& dag,
                                                  const ItemUniverse& universe,
                                                  const ParameterVector& params, int n,
                                                  std::uint64_t seed) {
  const ArcUtilities utils = make_arc_utilities(universe, params);
  const ValueTable table = solve_value(dag, utils);
  return sample_paths(dag, table, utils, n, seed);
}

}  // namespace testutil
