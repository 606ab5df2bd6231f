#include "dagchoice/recursive_logit.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <random>
#include <thread>

namespace dagchoice {

ArcUtilities make_arc_utilities(const ItemUniverse& universe, const ParameterVector& params) {
  if (params.mu <= 0) throw ConfigError("scale mu must be positive");
  return {all_item_utilities(universe, params), params.mu};
}

ValueTable solve_value(const ChoiceDag& dag, const ArcUtilities& utils) {
  ValueTable table;
  table.mu = utils.mu;
  table.value.setConstant(dag.num_nodes(), kNegInf);
  table.value[dag.destination()] = 0.0;
  for (int k = dag.num_nodes() - 2; k >= 0; --k) {
    // log-sum-exp over outgoing arcs, shifted by the running maximum
    Scalar best = kNegInf;
    for (const Arc& a : dag.out(k)) {
      const Scalar t = arc_utility(utils, a) + table.value[a.to];
      best = std::max(best, t);
    }
    if (best == kNegInf) continue;  // dead end or only dead successors
    Scalar sum = 0.0;
    for (const Arc& a : dag.out(k)) {
      const Scalar t = arc_utility(utils, a) + table.value[a.to];
      if (t != kNegInf) sum += std::exp((t - best) / utils.mu);
    }
    table.value[k] = best + utils.mu * std::log(sum);
  }
  if (table.value[dag.origin()] == kNegInf)
    throw ModelError("no feasible path from the origin; check bounds");
  return table;
}

namespace {

Eigen::SparseMatrix<Scalar, Eigen::RowMajor> system_matrix(const ChoiceDag& dag,
                                                           const ArcUtilities& utils) {
  const int n = dag.num_nodes();
  std::vector<Eigen::Triplet<Scalar>> trip;
  trip.reserve(dag.num_arcs() + n);
  for (int k = 0; k < n; ++k) {
    trip.emplace_back(k, k, 1.0);
    for (const Arc& a : dag.out(k))
      trip.emplace_back(k, a.to, -std::exp(arc_utility(utils, a) / utils.mu));
  }
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> mat(n, n);
  mat.setFromTriplets(trip.begin(), trip.end());
  return mat;
}

}  // namespace

ValueTable solve_value_linear(const ChoiceDag& dag, const ArcUtilities& utils) {
  const int n = dag.num_nodes();
  const Eigen::SparseMatrix<Scalar> mat = system_matrix(dag, utils);
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> solver;
  solver.compute(mat);
  if (solver.info() != Eigen::Success)
    throw ModelError("sparse factorization of (I - M) failed");
  Vector b = Vector::Zero(n);
  b[dag.destination()] = 1.0;
  const Vector z = solver.solve(b);
  ValueTable table;
  table.mu = utils.mu;
  table.value.resize(n);
  for (int k = 0; k < n; ++k)
    table.value[k] = z[k] > 0 ? utils.mu * std::log(z[k]) : kNegInf;
  if (table.value[dag.origin()] == kNegInf)
    throw ModelError("no feasible path from the origin; check bounds");
  return table;
}

Vector value_iterate(const ChoiceDag& dag, const ArcUtilities& utils, Vector z0, int iterations) {
  const int n = dag.num_nodes();
  if (z0.size() != n) throw ConfigError("start vector size does not match the dag");
  Vector z = std::move(z0), next(n);
  for (int it = 0; it < iterations; ++it) {
    for (int k = 0; k < n; ++k) {
      Scalar acc = k == dag.destination() ? 1.0 : 0.0;
      for (const Arc& a : dag.out(k)) acc += std::exp(arc_utility(utils, a) / utils.mu) * z[a.to];
      next[k] = acc;
    }
    z.swap(next);
  }
  return z;
}

Scalar arc_probability(const ChoiceDag& dag, const ValueTable& table, const ArcUtilities& utils,
                       const Arc& arc) {
  if (table.value[arc.from] == kNegInf)
    throw ModelError("arc probability requested from a dead node");
  (void)dag;
  return std::exp((arc_utility(utils, arc) + table.value[arc.to] - table.value[arc.from]) /
                  table.mu);
}

Scalar path_log_probability(const ChoiceDag& dag, const ValueTable& table,
                            const ArcUtilities& utils, const PathInDag& path) {
  Scalar v = 0.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const Arc* arc = dag.find_arc(path.nodes[i], path.nodes[i + 1]);
    if (arc == nullptr) throw MappingError("path is not arc-connected");
    v += arc_utility(utils, *arc);
  }
  return (v - table.value[dag.origin()]) / table.mu;
}

Scalar path_log_probability_product(const ChoiceDag& dag, const ValueTable& table,
                                    const ArcUtilities& utils, const PathInDag& path) {
  Scalar lp = 0.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const Arc* arc = dag.find_arc(path.nodes[i], path.nodes[i + 1]);
    if (arc == nullptr) throw MappingError("path is not arc-connected");
    lp += std::log(arc_probability(dag, table, utils, *arc));
  }
  return lp;
}

Scalar subset_log_probability(const ChoiceDag& dag, const ValueTable& table,
                              const ArcUtilities& utils, const Observation& obs) {
  Scalar v = 0.0;
  for (const Selection& s : obs.selections) v += s.count * utils.item_utility[s.item];
  return (v - table.value[dag.origin()]) / table.mu;
}

GradientTable solve_value_gradient(const ChoiceDag& dag, const ArcUtilities& utils,
                                   const ItemUniverse& universe, const ValueTable& table) {
  const int n = dag.num_nodes();
  const auto K = universe.num_attributes();
  GradientTable grad;
  grad.dvalue = Matrix::Zero(n, K);
  for (int k = n - 2; k >= 0; --k) {
    if (table.value[k] == kNegInf) continue;
    auto row = grad.dvalue.row(k);
    for (const Arc& a : dag.out(k)) {
      if (table.value[a.to] == kNegInf) continue;
      const Scalar p =
          std::exp((arc_utility(utils, a) + table.value[a.to] - table.value[k]) / table.mu);
      row += p * grad.dvalue.row(a.to);
      if (a.kind == ArcKind::Select || a.kind == ArcKind::Repeat)
        row += p * universe.attributes().row(a.item);
    }
  }
  return grad;
}

Matrix solve_gradient_linear(const ChoiceDag& dag, const ArcUtilities& utils,
                             const ItemUniverse& universe, const ValueTable& table) {
  const int n = dag.num_nodes();
  const auto K = universe.num_attributes();
  const Eigen::SparseMatrix<Scalar> mat = system_matrix(dag, utils);
  Eigen::SparseLU<Eigen::SparseMatrix<Scalar>> solver;
  solver.compute(mat);
  if (solver.info() != Eigen::Success)
    throw ModelError("sparse factorization of (I - M) failed");
  const Vector z = table.z_vector();
  Matrix dz(n, K);
  Vector rhs(n);
  for (Eigen::Index q = 0; q < K; ++q) {
    // (dM/dbeta_q)_{ka} = M_ka * x_{item(a),q} / mu on select/repeat arcs
    rhs.setZero();
    for (int k = 0; k < n; ++k)
      for (const Arc& a : dag.out(k))
        if (a.kind == ArcKind::Select || a.kind == ArcKind::Repeat)
          rhs[k] += std::exp(arc_utility(utils, a) / utils.mu) *
                    universe.attributes()(a.item, q) / utils.mu * z[a.to];
    dz.col(q) = solver.solve(rhs);
  }
  return dz;
}

DagsByBounds build_dags(DagVariant variant, int m, std::span<const Observation> observations) {
  DagsByBounds dags;
  for (const Observation& obs : observations)
    if (!dags.contains(obs.bounds)) dags.emplace(obs.bounds, build_dag(variant, m, obs.bounds));
  return dags;
}

namespace {

struct BoundsGroup {
  const ChoiceDag* dag;
  Vector item_counts;  // summed selection counts over the group's observations
  int n_obs = 0;
};

std::vector<BoundsGroup> collect_groups(const DagsByBounds& dags,
                                        std::span<const Observation> observations, int m) {
  std::map<Bounds, std::size_t> slot;
  std::vector<BoundsGroup> groups;
  for (const Observation& obs : observations) {
    auto it = slot.find(obs.bounds);
    if (it == slot.end()) {
      const auto dag_it = dags.find(obs.bounds);
      if (dag_it == dags.end())
        throw ModelError("no dag built for bounds [" + std::to_string(obs.bounds.lower) + "," +
                         std::to_string(obs.bounds.upper) + "]");
      it = slot.emplace(obs.bounds, groups.size()).first;
      groups.push_back({&dag_it->second, Vector::Zero(m), 0});
    }
    BoundsGroup& g = groups[it->second];
    g.n_obs += 1;
    for (const Selection& s : obs.selections) g.item_counts[s.item] += s.count;
  }
  return groups;
}

// Runs fn(group_index) over all groups, optionally on several threads. Results
// must be written into per-group slots; callers reduce in group order.
void for_each_group(std::size_t n_groups, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n_groups <= 1) {
    for (std::size_t g = 0; g < n_groups; ++g) fn(g);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> cursor{0};
  const int n_workers = std::min<std::size_t>(threads, n_groups);
  for (int w = 0; w < n_workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t g = cursor.fetch_add(1); g < n_groups; g = cursor.fetch_add(1)) fn(g);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace

Scalar log_likelihood(const DagsByBounds& dags, std::span<const Observation> observations,
                      const ItemUniverse& universe, const ParameterVector& params, int threads) {
  const ArcUtilities utils = make_arc_utilities(universe, params);
  const auto groups = collect_groups(dags, observations, universe.size());
  std::vector<Scalar> partial(groups.size(), 0.0);
  for_each_group(groups.size(), threads, [&](std::size_t g) {
    const ValueTable table = solve_value(*groups[g].dag, utils);
    partial[g] = (utils.item_utility.dot(groups[g].item_counts) -
                  groups[g].n_obs * table.value[groups[g].dag->origin()]) /
                 utils.mu;
  });
  Scalar ll = 0.0;
  for (Scalar p : partial) ll += p;
  return ll;
}

Vector log_likelihood_gradient(const DagsByBounds& dags,
                               std::span<const Observation> observations,
                               const ItemUniverse& universe, const ParameterVector& params,
                               int threads) {
  const ArcUtilities utils = make_arc_utilities(universe, params);
  const auto groups = collect_groups(dags, observations, universe.size());
  Matrix partial(groups.size(), universe.num_attributes());
  for_each_group(groups.size(), threads, [&](std::size_t g) {
    const ChoiceDag& dag = *groups[g].dag;
    const ValueTable table = solve_value(dag, utils);
    const GradientTable grad = solve_value_gradient(dag, utils, universe, table);
    partial.row(g) = (groups[g].item_counts.transpose() * universe.attributes() -
                      groups[g].n_obs * grad.dvalue.row(dag.origin())) /
                     utils.mu;
  });
  Vector total = Vector::Zero(universe.num_attributes());
  for (Eigen::Index g = 0; g < partial.rows(); ++g) total += partial.row(g).transpose();
  return total;
}

std::vector<Observation> sample_paths(const ChoiceDag& dag, const ValueTable& table,
                                      const ArcUtilities& utils, int n, std::uint64_t seed) {
  if (n < 0) throw ConfigError("cannot sample a negative number of paths");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  std::vector<Observation> out;
  out.reserve(n);
  std::vector<int> counts(dag.m);
  for (int i = 0; i < n; ++i) {
    std::fill(counts.begin(), counts.end(), 0);
    int node = dag.origin();
    while (node != dag.destination()) {
      const Scalar u = unif(rng);
      Scalar cum = 0.0;
      const Arc* chosen = nullptr;
      for (const Arc& a : dag.out(node)) {
        if (table.value[a.to] == kNegInf) continue;
        chosen = &a;
        cum += arc_probability(dag, table, utils, a);
        if (u < cum) break;
      }
      if (chosen == nullptr) throw ModelError("sampler reached a dead node");
      if (chosen->kind == ArcKind::Select || chosen->kind == ArcKind::Repeat)
        counts[chosen->item] += 1;
      node = chosen->to;
    }
    Observation obs;
    obs.id = "s" + std::to_string(i);
    obs.bounds = dag.bounds;
    for (int item = 0; item < dag.m; ++item)
      if (counts[item] > 0) obs.selections.push_back({item, counts[item]});
    out.push_back(std::move(obs));
  }
  return out;
}

}  // namespace dagchoice
