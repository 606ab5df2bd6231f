#include "dagchoice/nested_logit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <thread>

namespace dagchoice {

bool ScaleSpec::count_only() const {
  return std::all_of(selectors.begin(), selectors.end(), [](const ScaleSelector& s) {
    return s.kind != ScaleSelector::Kind::ItemAttr;
  });
}

ScaleSpec ScaleSpec::parse(const std::string& text, const ItemUniverse& universe) {
  ScaleSpec spec;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    if (token.empty()) continue;
    if (token == "const") {
      spec.selectors.push_back({ScaleSelector::Kind::Const, -1});
    } else if (token == "count") {
      spec.selectors.push_back({ScaleSelector::Kind::Count, -1});
    } else {
      const auto& names = universe.attribute_names();
      const auto it = std::find(names.begin(), names.end(), token);
      if (it == names.end())
        throw ConfigError("unknown scale attribute '" + token +
                          "': expected const, count, or an item attribute name");
      spec.selectors.push_back(
          {ScaleSelector::Kind::ItemAttr, static_cast<int>(it - names.begin())});
    }
  }
  if (spec.empty()) throw ConfigError("scale specification is empty");
  return spec;
}

std::vector<std::string> ScaleSpec::names(const ItemUniverse& universe) const {
  std::vector<std::string> out;
  for (const ScaleSelector& s : selectors) {
    switch (s.kind) {
      case ScaleSelector::Kind::Const: out.push_back("scale:const"); break;
      case ScaleSelector::Kind::Count: out.push_back("scale:count"); break;
      case ScaleSelector::Kind::ItemAttr:
        out.push_back("scale:" + universe.attribute_names()[s.attribute]);
        break;
    }
  }
  return out;
}

Vector scale_features(const ChoiceDag& dag, int node, const ScaleSpec& spec,
                      const ItemUniverse& universe) {
  Vector w(spec.size());
  const NodeRef& ref = dag.nodes[node];
  const int item = dag.tier_item(node);
  for (int q = 0; q < spec.size(); ++q) {
    switch (spec.selectors[q].kind) {
      case ScaleSelector::Kind::Const: w[q] = 1.0; break;
      case ScaleSelector::Kind::Count:
        w[q] = ref.kind == NodeKind::Destination ? 0.0 : ref.count;
        break;
      case ScaleSelector::Kind::ItemAttr:
        w[q] = item >= 0 ? universe.attributes()(item, spec.selectors[q].attribute) : 0.0;
        break;
    }
  }
  return w;
}

Vector node_scales(const ChoiceDag& dag, const ScaleSpec& spec, const ItemUniverse& universe,
                   const Vector& gamma) {
  if (gamma.size() != spec.size())
    throw ConfigError("gamma has " + std::to_string(gamma.size()) + " entries, scale spec has " +
                      std::to_string(spec.size()));
  Vector mu(dag.num_nodes());
  for (int k = 0; k < dag.num_nodes(); ++k)
    mu[k] = std::exp(gamma.dot(scale_features(dag, k, spec, universe)));
  return mu;
}

NestedValueTable solve_nested_value(const ChoiceDag& dag, const ArcUtilities& utils,
                                    const ItemUniverse& universe, const ScaleSpec& spec,
                                    const Vector& gamma) {
  NestedValueTable table;
  table.mu = node_scales(dag, spec, universe, gamma);
  table.value.setConstant(dag.num_nodes(), kNegInf);
  table.value[dag.destination()] = 0.0;
  for (int k = dag.num_nodes() - 2; k >= 0; --k) {
    Scalar best = kNegInf;
    for (const Arc& a : dag.out(k)) best = std::max(best, arc_utility(utils, a) + table.value[a.to]);
    if (best == kNegInf) continue;
    Scalar sum = 0.0;
    for (const Arc& a : dag.out(k)) {
      const Scalar t = arc_utility(utils, a) + table.value[a.to];
      if (t != kNegInf) sum += std::exp((t - best) / table.mu[k]);
    }
    table.value[k] = best + table.mu[k] * std::log(sum);
  }
  if (table.value[dag.origin()] == kNegInf)
    throw ModelError("no feasible path from the origin; check bounds");
  return table;
}

Vector nested_value_iterate(const ChoiceDag& dag, const ArcUtilities& utils, const Vector& mu,
                            Vector z0, int iterations) {
  const int n = dag.num_nodes();
  if (z0.size() != n || mu.size() != n)
    throw ConfigError("start/scale vector size does not match the dag");
  if ((z0.array() < 0).any()) throw ConfigError("nested value iteration needs z0 >= 0");
  Vector z = std::move(z0), next(n);
  for (int it = 0; it < iterations; ++it) {
    for (int k = 0; k < n; ++k) {
      Scalar acc = k == dag.destination() ? 1.0 : 0.0;
      for (const Arc& a : dag.out(k))
        acc += std::exp(arc_utility(utils, a) / mu[k]) * std::pow(z[a.to], mu[a.to] / mu[k]);
      next[k] = acc;
    }
    z.swap(next);
  }
  return z;
}

Scalar nested_arc_log_probability(const NestedValueTable& table, const ArcUtilities& utils,
                                  const Arc& arc) {
  if (table.value[arc.from] == kNegInf)
    throw ModelError("arc probability requested from a dead node");
  return (arc_utility(utils, arc) + table.value[arc.to] - table.value[arc.from]) /
         table.mu[arc.from];
}

Scalar nested_path_log_probability(const ChoiceDag& dag, const NestedValueTable& table,
                                   const ArcUtilities& utils, const PathInDag& path) {
  Scalar lp = 0.0;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const Arc* arc = dag.find_arc(path.nodes[i], path.nodes[i + 1]);
    if (arc == nullptr) throw MappingError("path is not arc-connected");
    lp += nested_arc_log_probability(table, utils, *arc);
  }
  return lp;
}

Scalar nested_subset_log_probability(const ChoiceDag& dag, const NestedValueTable& table,
                                     const ArcUtilities& utils, const Observation& obs) {
  return nested_path_log_probability(dag, table, utils, subset_to_path(dag, obs));
}

NestedGradientTable solve_nested_gradient(const ChoiceDag& dag, const ArcUtilities& utils,
                                          const ItemUniverse& universe, const ScaleSpec& spec,
                                          const NestedValueTable& table) {
  const int n = dag.num_nodes();
  const auto K = universe.num_attributes();
  const int G = spec.size();
  NestedGradientTable grad;
  grad.dvalue = Matrix::Zero(n, K + G);
  for (int k = n - 2; k >= 0; --k) {
    if (table.value[k] == kNegInf) continue;
    auto row = grad.dvalue.row(k);
    Scalar mean_value = 0.0;  // sum_a P(a|k) (v_a + V(a))
    for (const Arc& a : dag.out(k)) {
      if (table.value[a.to] == kNegInf) continue;
      const Scalar va = arc_utility(utils, a) + table.value[a.to];
      const Scalar p = std::exp((va - table.value[k]) / table.mu[k]);
      row += p * grad.dvalue.row(a.to);
      if (a.kind == ArcKind::Select || a.kind == ArcKind::Repeat)
        row.head(K) += p * universe.attributes().row(a.item);
      mean_value += p * va;
    }
    if (G > 0) {
      const Vector w = scale_features(dag, k, spec, universe);
      row.tail(G) += (table.value[k] - mean_value) * w.transpose();
    }
  }
  return grad;
}

namespace {

struct NestedGroup {
  const ChoiceDag* dag;
  std::vector<std::size_t> members;
};

std::vector<NestedGroup> collect_nested_groups(const DagsByBounds& dags,
                                               std::span<const Observation> observations) {
  std::map<Bounds, std::size_t> slot;
  std::vector<NestedGroup> groups;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Bounds& b = observations[i].bounds;
    auto it = slot.find(b);
    if (it == slot.end()) {
      const auto dag_it = dags.find(b);
      if (dag_it == dags.end())
        throw ModelError("no dag built for bounds [" + std::to_string(b.lower) + "," +
                         std::to_string(b.upper) + "]");
      it = slot.emplace(b, groups.size()).first;
      groups.push_back({&dag_it->second, {}});
    }
    groups[it->second].members.push_back(i);
  }
  return groups;
}

void run_groups(std::size_t n_groups, int threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n_groups <= 1) {
    for (std::size_t g = 0; g < n_groups; ++g) fn(g);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> cursor{0};
  const std::size_t n_workers = std::min(static_cast<std::size_t>(threads), n_groups);
  for (std::size_t w = 0; w < n_workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t g = cursor.fetch_add(1); g < n_groups; g = cursor.fetch_add(1)) fn(g);
    });
  for (std::thread& t : pool) t.join();
}

}  // namespace

Scalar nested_log_likelihood(const DagsByBounds& dags, std::span<const Observation> observations,
                             const ItemUniverse& universe, const ParameterVector& params,
                             const ScaleSpec& spec, int threads) {
  const ArcUtilities utils = make_arc_utilities(universe, params);
  const auto groups = collect_nested_groups(dags, observations);
  std::vector<Scalar> partial(groups.size(), 0.0);
  run_groups(groups.size(), threads, [&](std::size_t g) {
    const ChoiceDag& dag = *groups[g].dag;
    const NestedValueTable table = solve_nested_value(dag, utils, universe, spec, params.gamma);
    Scalar ll = 0.0;
    for (std::size_t i : groups[g].members)
      ll += nested_subset_log_probability(dag, table, utils, observations[i]);
    partial[g] = ll;
  });
  Scalar ll = 0.0;
  for (Scalar p : partial) ll += p;
  return ll;
}

Vector nested_log_likelihood_gradient(const DagsByBounds& dags,
                                      std::span<const Observation> observations,
                                      const ItemUniverse& universe, const ParameterVector& params,
                                      const ScaleSpec& spec, int threads) {
  const ArcUtilities utils = make_arc_utilities(universe, params);
  const auto K = universe.num_attributes();
  const int G = spec.size();
  const auto groups = collect_nested_groups(dags, observations);
  Matrix partial = Matrix::Zero(groups.size(), K + G);
  run_groups(groups.size(), threads, [&](std::size_t g) {
    const ChoiceDag& dag = *groups[g].dag;
    const NestedValueTable table = solve_nested_value(dag, utils, universe, spec, params.gamma);
    const NestedGradientTable grad =
        solve_nested_gradient(dag, utils, universe, spec, table);
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(K + G);
    for (std::size_t i : groups[g].members) {
      const PathInDag path = subset_to_path(dag, observations[i]);
      for (std::size_t s = 0; s + 1 < path.nodes.size(); ++s) {
        const Arc* arc = dag.find_arc(path.nodes[s], path.nodes[s + 1]);
        const int k = arc->from;
        const Scalar mu_k = table.mu[k];
        const Scalar log_p = nested_arc_log_probability(table, utils, *arc);
        acc += (grad.dvalue.row(arc->to) - grad.dvalue.row(k)) / mu_k;
        if (arc->kind == ArcKind::Select || arc->kind == ArcKind::Repeat)
          acc.head(K) += universe.attributes().row(arc->item) / mu_k;
        if (G > 0)
          acc.tail(G) -= log_p * scale_features(dag, k, spec, universe).transpose();
      }
    }
    partial.row(g) = acc;
  });
  Vector total = Vector::Zero(K + G);
  for (Eigen::Index g = 0; g < partial.rows(); ++g) total += partial.row(g).transpose();
  return total;
}

}  // namespace dagchoice
