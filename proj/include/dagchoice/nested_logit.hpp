#pragma once

// Nested recursive logit: the scale varies by node, mu_k = exp(gamma' w_k),
// with node features w_k built from simple selectors. The value function
//
//   V(d) = 0,   V(k) = mu_k * log sum_{a in N(k)} exp((v(a|k) + V(a)) / mu_k)
//
// is again exact after one backward sweep. Arc probabilities use the scale of
// the tail node: P(a|k) = exp((v(a|k) + V(a) - V(k)) / mu_k). Path log
// probabilities no longer telescope, so the likelihood walks each path.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dagchoice/dag.hpp"
#include "dagchoice/recursive_logit.hpp"
#include "dagchoice/types.hpp"

namespace dagchoice {

struct ScaleSelector {
  enum class Kind { Const, Count, ItemAttr };
  Kind kind = Kind::Const;
  int attribute = -1;  // column into the universe for ItemAttr
};

// Which node features enter the scale function. Feature values per node:
// Const -> 1, Count -> accumulated count c, ItemAttr -> the attribute of the
// node's tier item (0 at the origin and destination).
struct ScaleSpec {
  std::vector<ScaleSelector> selectors;

  int size() const { return static_cast<int>(selectors.size()); }
  bool empty() const { return selectors.empty(); }

  // True when the scale depends on the count alone (Const/Count selectors
  // only); in that case the nested BiC and MuC models induce the same subset
  // distribution, otherwise they need not.
  bool count_only() const;

  // Comma-separated list: "const", "count", or an attribute name.
  static ScaleSpec parse(const std::string& text, const ItemUniverse& universe);

  std::vector<std::string> names(const ItemUniverse& universe) const;
};

Vector scale_features(const ChoiceDag& dag, int node, const ScaleSpec& spec,
                      const ItemUniverse& universe);

// mu_k = exp(gamma' w_k) for every node.
Vector node_scales(const ChoiceDag& dag, const ScaleSpec& spec, const ItemUniverse& universe,
                   const Vector& gamma);

struct NestedValueTable {
  Vector value;  // V(k); -inf on dead branches
  Vector mu;     // per-node scale
};

NestedValueTable solve_nested_value(const ChoiceDag& dag, const ArcUtilities& utils,
                                    const ItemUniverse& universe, const ScaleSpec& spec,
                                    const Vector& gamma);

// Synchronous iteration of z_k = sum_a M_ka z_a^{mu_a / mu_k} + b_k from z0
// (z0 must be nonnegative; 0^positive = 0 covers dead ends).
Vector nested_value_iterate(const ChoiceDag& dag, const ArcUtilities& utils, const Vector& mu,
                            Vector z0, int iterations);

Scalar nested_arc_log_probability(const NestedValueTable& table, const ArcUtilities& utils,
                                  const Arc& arc);

Scalar nested_path_log_probability(const ChoiceDag& dag, const NestedValueTable& table,
                                   const ArcUtilities& utils, const PathInDag& path);

Scalar nested_subset_log_probability(const ChoiceDag& dag, const NestedValueTable& table,
                                     const ArcUtilities& utils, const Observation& obs);

// d value / d (beta, gamma): num_nodes x (K + G), built by differentiating the
// backward sweep (tangent propagation along the same node order):
//   dV(k) = sum_a P(a|k) (dv_a + dV(a)) + w_k (V(k) - sum_a P(a|k)(v_a + V(a)))
// where the w_k term enters the gamma block only.
struct NestedGradientTable {
  Matrix dvalue;
};

NestedGradientTable solve_nested_gradient(const ChoiceDag& dag, const ArcUtilities& utils,
                                          const ItemUniverse& universe, const ScaleSpec& spec,
                                          const NestedValueTable& table);

Scalar nested_log_likelihood(const DagsByBounds& dags, std::span<const Observation> observations,
                             const ItemUniverse& universe, const ParameterVector& params,
                             const ScaleSpec& spec, int threads = 1);

// Gradient with respect to [beta; gamma], length K + G.
Vector nested_log_likelihood_gradient(const DagsByBounds& dags,
                                      std::span<const Observation> observations,
                                      const ItemUniverse& universe, const ParameterVector& params,
                                      const ScaleSpec& spec, int threads = 1);

}  // namespace dagchoice
