#include "dagchoice/dag.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace dagchoice {

namespace {

int capped(int tier, int cap) { return tier < cap ? tier : cap; }

void require_plain_bounds(int m, const Bounds& b, const char* variant) {
  if (b.upper > m)
    throw ConfigError(std::string(variant) + " requires U <= m, got U=" +
                      std::to_string(b.upper) + " with m=" + std::to_string(m));
}

}  // namespace

// Lays out nodes tier-major and fills the CSR arc array. emit_arcs is called
// once per node in index order and must push that node's out-arcs.
struct DagBuilder {
  ChoiceDag dag;

  DagBuilder(DagVariant variant, int m, Bounds bounds) {
    if (m < 1) throw ConfigError("need at least one item, got m=" + std::to_string(m));
    validate_bounds(bounds);
    dag.variant = variant;
    dag.m = m;
    dag.bounds = bounds;
  }

  // count ranges for tiers 0..m; the destination tier is appended internally.
  void layout(const std::vector<std::pair<int, int>>& count_ranges) {
    const int m = dag.m;
    dag.tier_offsets_.assign(m + 3, 0);
    dag.tier_count_min_.assign(m + 2, 0);
    dag.tier_count_max_.assign(m + 2, -1);
    int next = 0;
    for (int tier = 0; tier <= m; ++tier) {
      const auto [lo, hi] = count_ranges[tier];
      dag.tier_offsets_[tier] = next;
      dag.tier_count_min_[tier] = lo;
      dag.tier_count_max_[tier] = hi;
      for (int c = lo; c <= hi; ++c) {
        dag.nodes.push_back({tier, c, tier == 0 ? NodeKind::Origin : NodeKind::Internal});
        ++next;
      }
    }
    dag.tier_offsets_[m + 1] = next;
    dag.tier_count_min_[m + 1] = 0;
    dag.tier_count_max_[m + 1] = 0;
    dag.nodes.push_back({m + 1, 0, NodeKind::Destination});
    dag.tier_offsets_[m + 2] = next + 1;
  }

  template <typename EmitArcs>
  ChoiceDag finish(EmitArcs&& emit_arcs) {
    const int n = dag.num_nodes();
    dag.arc_offsets.assign(n + 1, 0);
    for (int k = 0; k < n; ++k) {
      dag.arc_offsets[k] = static_cast<std::int32_t>(dag.arcs.size());
      emit_arcs(k);
      if (dag.arcs.size() == static_cast<std::size_t>(dag.arc_offsets[k]) &&
          k != dag.destination())
        dag.dead_ends.push_back(k);
    }
    dag.arc_offsets[n] = static_cast<std::int32_t>(dag.arcs.size());
    return std::move(dag);
  }

  void push(int from, int to, ArcKind kind, int item = -1) {
    dag.arcs.push_back({from, to, kind, item});
  }
};

int ChoiceDag::node_index(int tier, int count) const {
  if (tier < 0 || tier > m + 1) return -1;
  if (count < tier_count_min_[tier] || count > tier_count_max_[tier]) return -1;
  return tier_offsets_[tier] + (count - tier_count_min_[tier]);
}

const Arc* ChoiceDag::find_arc(int from, int to) const {
  for (const Arc& a : out(from))
    if (a.to == to) return &a;
  return nullptr;
}

ChoiceDag build_bic(int m, Bounds bounds) {
  require_plain_bounds(m, bounds, "BiC");
  DagBuilder b(DagVariant::BiC, m, bounds);
  const int U = bounds.upper, L = bounds.lower;
  std::vector<std::pair<int, int>> ranges(m + 1);
  for (int j = 0; j <= m; ++j) ranges[j] = {0, capped(j, U)};
  b.layout(ranges);
  const ChoiceDag& d = b.dag;
  return b.finish([&](int k) {
    const NodeRef ref = d.nodes[k];
    if (ref.kind == NodeKind::Destination) return;
    const int j = ref.tier, c = ref.count;
    if (j < m) {
      // Tier j decides item j+1 (0-based index j). Skip keeps the count; at
      // capacity (c == U) the node still runs forward on forced skip arcs.
      b.push(k, d.node_index(j + 1, c), ArcKind::Skip);
      if (c < U) b.push(k, d.node_index(j + 1, c + 1), ArcKind::Select, j);
    } else if (c >= L) {
      b.push(k, d.destination(), ArcKind::Terminate);
    }
    // Tier-m nodes with c < L get no arcs: dead ends with z = 0.
  });
}

ChoiceDag build_muc(int m, Bounds bounds) {
  require_plain_bounds(m, bounds, "MuC");
  DagBuilder b(DagVariant::MuC, m, bounds);
  const int U = bounds.upper, L = bounds.lower;
  std::vector<std::pair<int, int>> ranges(m + 1);
  ranges[0] = {0, 0};
  for (int j = 1; j <= m; ++j) ranges[j] = {1, capped(j, U)};
  b.layout(ranges);
  const ChoiceDag& d = b.dag;
  return b.finish([&](int k) {
    const NodeRef ref = d.nodes[k];
    if (ref.kind == NodeKind::Destination) return;
    const int j = ref.tier, c = ref.count;
    if (c < U)
      for (int jn = j + 1; jn <= m; ++jn)
        b.push(k, d.node_index(jn, c + 1), ArcKind::Select, jn - 1);
    if (c >= L) b.push(k, d.destination(), ArcKind::Terminate);
  });
}

ChoiceDag build_bic_count(int m, Bounds bounds) {
  DagBuilder b(DagVariant::BiCCount, m, bounds);
  const int U = bounds.upper, L = bounds.lower;
  std::vector<std::pair<int, int>> ranges(m + 1);
  ranges[0] = {0, 0};
  for (int i = 1; i <= m; ++i) ranges[i] = {0, U};
  b.layout(ranges);
  const ChoiceDag& d = b.dag;
  return b.finish([&](int k) {
    const NodeRef ref = d.nodes[k];
    if (ref.kind == NodeKind::Destination) return;
    const int i = ref.tier, c = ref.count;
    if (i == 0) {
      b.push(k, d.node_index(1, 0), ArcKind::Skip);
      return;
    }
    // One more unit of item i (0-based i-1), staying in the tier.
    if (c < U) b.push(k, d.node_index(i, c + 1), ArcKind::Repeat, i - 1);
    if (i < m)
      b.push(k, d.node_index(i + 1, c), ArcKind::Skip);
    else if (c >= L)
      b.push(k, d.destination(), ArcKind::Terminate);
  });
}

ChoiceDag build_muc_count(int m, Bounds bounds) {
  DagBuilder b(DagVariant::MuCCount, m, bounds);
  const int U = bounds.upper, L = bounds.lower;
  std::vector<std::pair<int, int>> ranges(m + 1);
  ranges[0] = {0, 0};
  for (int i = 1; i <= m; ++i) ranges[i] = {1, U};
  b.layout(ranges);
  const ChoiceDag& d = b.dag;
  return b.finish([&](int k) {
    const NodeRef ref = d.nodes[k];
    if (ref.kind == NodeKind::Destination) return;
    const int i = ref.tier, c = ref.count;
    if (c < U) {
      if (i >= 1) b.push(k, d.node_index(i, c + 1), ArcKind::Repeat, i - 1);
      for (int jn = i + 1; jn <= m; ++jn)
        b.push(k, d.node_index(jn, c + 1), ArcKind::Select, jn - 1);
    }
    if (c >= L) b.push(k, d.destination(), ArcKind::Terminate);
  });
}

ChoiceDag build_dag(DagVariant variant, int m, Bounds bounds) {
  switch (variant) {
    case DagVariant::BiC: return build_bic(m, bounds);
    case DagVariant::MuC: return build_muc(m, bounds);
    case DagVariant::BiCCount: return build_bic_count(m, bounds);
    case DagVariant::MuCCount: return build_muc_count(m, bounds);
  }
  throw ConfigError("unknown dag variant");
}

namespace {

void check_mappable(const ChoiceDag& dag, const Observation& obs) {
  const bool count_mode =
      dag.variant == DagVariant::BiCCount || dag.variant == DagVariant::MuCCount;
  int last = -1, total = 0;
  for (const Selection& s : obs.selections) {
    if (s.item < 0 || s.item >= dag.m)
      throw MappingError("item " + std::to_string(s.item) + " outside universe of size " +
                         std::to_string(dag.m));
    if (s.item <= last) throw MappingError("selections must be sorted with unique items");
    if (s.count < 1 || (!count_mode && s.count != 1))
      throw MappingError("invalid count " + std::to_string(s.count) + " for item " +
                         std::to_string(s.item));
    last = s.item;
    total += s.count;
  }
  if (total < dag.bounds.lower || total > dag.bounds.upper)
    throw MappingError("total count " + std::to_string(total) + " outside bounds [" +
                       std::to_string(dag.bounds.lower) + "," +
                       std::to_string(dag.bounds.upper) + "]");
}

}  // namespace

PathInDag subset_to_path(const ChoiceDag& dag, const Observation& obs) {
  check_mappable(dag, obs);
  PathInDag path;
  path.nodes.push_back(dag.origin());
  switch (dag.variant) {
    case DagVariant::BiC: {
      std::vector<bool> in(dag.m, false);
      for (const Selection& s : obs.selections) in[s.item] = true;
      int c = 0;
      for (int j = 1; j <= dag.m; ++j) {
        if (in[j - 1]) ++c;
        path.nodes.push_back(dag.node_index(j, c));
      }
      break;
    }
    case DagVariant::MuC: {
      int c = 0;
      for (const Selection& s : obs.selections)
        path.nodes.push_back(dag.node_index(s.item + 1, ++c));
      break;
    }
    case DagVariant::BiCCount: {
      std::vector<int> cnt(dag.m, 0);
      for (const Selection& s : obs.selections) cnt[s.item] = s.count;
      int c = 0;
      for (int i = 1; i <= dag.m; ++i) {
        path.nodes.push_back(dag.node_index(i, c));
        for (int r = 0; r < cnt[i - 1]; ++r) path.nodes.push_back(dag.node_index(i, ++c));
      }
      break;
    }
    case DagVariant::MuCCount: {
      int c = 0;
      for (const Selection& s : obs.selections)
        for (int r = 0; r < s.count; ++r) path.nodes.push_back(dag.node_index(s.item + 1, ++c));
      break;
    }
  }
  path.nodes.push_back(dag.destination());
  return path;
}

Observation path_to_subset(const ChoiceDag& dag, const PathInDag& path) {
  if (path.nodes.size() < 2 || path.nodes.front() != dag.origin() ||
      path.nodes.back() != dag.destination())
    throw MappingError("path must run from the origin to the destination");
  std::map<int, int> counts;
  for (std::size_t i = 0; i + 1 < path.nodes.size(); ++i) {
    const int from = path.nodes[i], to = path.nodes[i + 1];
    if (from < 0 || to < 0 || from >= dag.num_nodes() || to >= dag.num_nodes())
      throw MappingError("path contains an invalid node index");
    const Arc* arc = dag.find_arc(from, to);
    if (arc == nullptr)
      throw MappingError("no arc between consecutive path nodes " + std::to_string(from) +
                         " -> " + std::to_string(to));
    if (arc->kind == ArcKind::Select || arc->kind == ArcKind::Repeat) counts[arc->item] += 1;
  }
  Observation obs;
  obs.bounds = dag.bounds;
  for (const auto& [item, count] : counts) obs.selections.push_back({item, count});
  const int total = obs.total_count();
  if (total < dag.bounds.lower || total > dag.bounds.upper)
    throw MappingError("path selects " + std::to_string(total) + " items, outside bounds");
  return obs;
}

Scalar count_paths(const ChoiceDag& dag) {
  std::vector<Scalar> ways(dag.num_nodes(), 0.0);
  ways[dag.destination()] = 1.0;
  for (int k = dag.num_nodes() - 2; k >= 0; --k)
    for (const Arc& a : dag.out(k)) ways[k] += ways[a.to];
  return ways[dag.origin()];
}

Scalar composite_space_size(int m, Bounds bounds, bool count_mode) {
  validate_bounds(bounds);
  const int hi = count_mode ? bounds.upper : std::min(bounds.upper, m);
  Scalar total = 0.0;
  for (int t = bounds.lower; t <= hi; ++t) {
    // C(m,t) for subsets, C(m+t-1,t) for multisets, multiplicatively.
    Scalar c = 1.0;
    const int n = count_mode ? m + t - 1 : m;
    for (int i = 1; i <= t; ++i) c *= static_cast<Scalar>(n - t + i) / i;
    total += std::round(c);
  }
  return total;
}

std::int64_t expected_node_count(DagVariant variant, int m, Bounds bounds) {
  const std::int64_t U = bounds.upper, M = m;
  const std::int64_t ramp = U * (U + 1) / 2 + (M - U) * U;  // sum_j min(j, U), j = 0..m
  switch (variant) {
    case DagVariant::BiC: return M + 2 + ramp;
    case DagVariant::MuC: return 2 + ramp;
    case DagVariant::BiCCount: return M * (U + 1) + 2;
    case DagVariant::MuCCount: return M * U + 2;
  }
  throw ConfigError("unknown dag variant");
}

std::int64_t bic_arc_count_formula(int m, Bounds bounds) {
  const std::int64_t U = bounds.upper, L = bounds.lower, M = m;
  return 2 * M + 2 * M * U - U * U - L + 1;
}

std::int64_t muc_arc_count_formula(int m, Bounds bounds) {
  const Scalar U = bounds.upper, L = bounds.lower, M = m;
  Scalar a = M * M * U / 2 - M * U * U / 2 + M * U + 2 * M + U * U * U / 6 - U * U / 2 + U / 3;
  a += (bounds.lower == 0) ? 2.0 : (-M * L + L * L / 2 - 3 * L / 2 + 1);
  return static_cast<std::int64_t>(std::llround(a));
}

std::string to_dot(const ChoiceDag& dag) {
  std::ostringstream out;
  out << "digraph choice {\n  rankdir=LR;\n  node [shape=circle fontsize=10];\n";
  for (int k = 0; k < dag.num_nodes(); ++k) {
    const NodeRef& ref = dag.nodes[k];
    out << "  n" << k << " [label=\"";
    if (ref.kind == NodeKind::Destination)
      out << "d";
    else
      out << "p^" << ref.count << "_" << ref.tier;
    out << "\"];\n";
  }
  for (const Arc& a : dag.arcs) {
    out << "  n" << a.from << " -> n" << a.to;
    if (a.kind == ArcKind::Skip || a.kind == ArcKind::Terminate)
      out << " [style=dashed]";
    else
      out << " [label=\"v" << a.item + 1 << "\"]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string to_string(DagVariant variant) {
  switch (variant) {
    case DagVariant::BiC: return "bic";
    case DagVariant::MuC: return "muc";
    case DagVariant::BiCCount: return "bic-count";
    case DagVariant::MuCCount: return "muc-count";
  }
  return "?";
}

}  // namespace dagchoice
