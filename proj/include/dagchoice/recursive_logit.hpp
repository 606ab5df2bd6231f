#pragma once

// Recursive logit on a choice DAG. The value function
//
//   V(d) = 0,   V(k) = mu * log sum_{a in N(k)} exp((v(a|k) + V(a)) / mu)
//
// is solved exactly by one backward sweep in the log domain (descending node
// index is reverse-topological by construction). z = exp(V/mu) also satisfies
// the linear system (I - M) z = b with M_ka = exp(v(a|k)/mu) and b = e_d; that
// route is implemented on a sparse matrix as an independent cross-check and
// must stay alongside the sweep.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "dagchoice/dag.hpp"
#include "dagchoice/types.hpp"

namespace dagchoice {

// Per-arc systematic utilities: select/repeat arcs carry the utility of their
// item, skip/terminate arcs carry zero.
struct ArcUtilities {
  Vector item_utility;  // v_i = beta' x_i
  Scalar mu = 1.0;
};

ArcUtilities make_arc_utilities(const ItemUniverse& universe, const ParameterVector& params);

inline Scalar arc_utility(const ArcUtilities& u, const Arc& a) {
  return (a.kind == ArcKind::Select || a.kind == ArcKind::Repeat) ? u.item_utility[a.item] : 0.0;
}

struct ValueTable {
  Vector value;  // V(k); -inf on nodes that cannot reach the destination
  Scalar mu = 1.0;

  Scalar z(int k) const { return std::exp(value[k] / mu); }
  Vector z_vector() const { return (value / mu).array().exp(); }
};

// Backward tier sweep in the log domain (the production route).
ValueTable solve_value(const ChoiceDag& dag, const ArcUtilities& utils);

// Sparse (I - M) z = b solve (row-compressed M), the verification route.
ValueTable solve_value_linear(const ChoiceDag& dag, const ArcUtilities& utils);

// Synchronous value iteration z <- M z + b in the exp domain, run for a fixed
// number of iterations from z0. Used to exercise the finite-convergence claim.
Vector value_iterate(const ChoiceDag& dag, const ArcUtilities& utils, Vector z0, int iterations);

// P(a|k) = exp((v(a|k) + V(a) - V(k)) / mu). The from-node must be live.
Scalar arc_probability(const ChoiceDag& dag, const ValueTable& table, const ArcUtilities& utils,
                       const Arc& arc);

// log P(sigma) = (v(sigma) - V(origin)) / mu (telescoped form).
Scalar path_log_probability(const ChoiceDag& dag, const ValueTable& table,
                            const ArcUtilities& utils, const PathInDag& path);

// Same quantity as the product of arc probabilities; kept for equality tests.
Scalar path_log_probability_product(const ChoiceDag& dag, const ValueTable& table,
                                    const ArcUtilities& utils, const PathInDag& path);

// log P(S) without materializing the path.
Scalar subset_log_probability(const ChoiceDag& dag, const ValueTable& table,
                              const ArcUtilities& utils, const Observation& obs);

// Derivatives of the value function with respect to beta, one column per
// attribute, via the same backward sweep:
//   dV(k) = sum_a P(a|k) (x_a + dV(a)),  x_a = attributes of the arc's item.
// Rows of dead/unreachable nodes are zero. dz/dbeta = z * dV / mu.
struct GradientTable {
  Matrix dvalue;  // num_nodes x K
};

GradientTable solve_value_gradient(const ChoiceDag& dag, const ArcUtilities& utils,
                                   const ItemUniverse& universe, const ValueTable& table);

// dz/dbeta_q via sparse solves of (I - M) dz = (dM/dbeta_q) z, one column per
// attribute. Verification route for the gradient table.
Matrix solve_gradient_linear(const ChoiceDag& dag, const ArcUtilities& utils,
                             const ItemUniverse& universe, const ValueTable& table);

using DagsByBounds = std::map<Bounds, ChoiceDag>;

// One dag per distinct bounds value appearing in the observations.
DagsByBounds build_dags(DagVariant variant, int m, std::span<const Observation> observations);

// Sum over observations of (v(S_t) - V^t(origin)) / mu, value tables cached
// per bounds group. threads > 1 evaluates groups concurrently; the reduction
// order over groups is fixed by the group index either way.
Scalar log_likelihood(const DagsByBounds& dags, std::span<const Observation> observations,
                      const ItemUniverse& universe, const ParameterVector& params,
                      int threads = 1);

Vector log_likelihood_gradient(const DagsByBounds& dags,
                               std::span<const Observation> observations,
                               const ItemUniverse& universe, const ParameterVector& params,
                               int threads = 1);

// Draw n composites by walking arc probabilities from the origin. Seeded and
// deterministic; observation ids are "s<index>".
std::vector<Observation> sample_paths(const ChoiceDag& dag, const ValueTable& table,
                                      const ArcUtilities& utils, int n, std::uint64_t seed);

}  // namespace dagchoice
