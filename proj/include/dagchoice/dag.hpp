#pragma once

// DAG representations of bounded subset choice. Four variants:
//
//   BiC       binary-choice DAG: tier j decides select/skip for item j+1
//   MuC       multi-choice DAG: each arc jumps straight to the next chosen item
//   BiCCount  BiC adapted to multisets (within-tier repeat arcs)
//   MuCCount  MuC adapted to multisets
//
// Nodes are p^c_j (tier j, accumulated count c) plus an origin and a single
// destination d. Node indices are dense and tier-major: (tier asc, count asc),
// destination last. That ordering makes descending-index iteration a valid
// reverse-topological order for all four variants, because every arc goes to a
// higher tier or (repeat arcs only) to a higher count within the same tier.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dagchoice/types.hpp"

namespace dagchoice {

enum class DagVariant { BiC, MuC, BiCCount, MuCCount };

enum class ArcKind : std::uint8_t {
  Skip,       // move on without selecting; utility 0
  Select,     // select the item of the target tier; utility v_item
  Repeat,     // count variants: one more unit of the current tier's item
  Terminate,  // jump to the destination; utility 0
};

enum class NodeKind : std::uint8_t { Origin, Internal, Destination };

struct Arc {
  std::int32_t from = 0;
  std::int32_t to = 0;
  ArcKind kind = ArcKind::Skip;
  std::int32_t item = -1;  // 0-based item index for Select/Repeat, -1 otherwise
};

struct NodeRef {
  std::int32_t tier = 0;
  std::int32_t count = 0;
  NodeKind kind = NodeKind::Internal;
};

struct PathInDag {
  std::vector<std::int32_t> nodes;
};

class ChoiceDag {
 public:
  DagVariant variant = DagVariant::BiC;
  int m = 0;
  Bounds bounds;

  std::vector<NodeRef> nodes;
  std::vector<std::int32_t> arc_offsets;  // CSR: out-arcs of k are arcs[offsets[k]..offsets[k+1])
  std::vector<Arc> arcs;
  std::vector<std::int32_t> dead_ends;    // non-destination nodes with no outgoing arc

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_arcs() const { return static_cast<int>(arcs.size()); }
  int origin() const { return 0; }
  int destination() const { return num_nodes() - 1; }

  std::span<const Arc> out(int node) const {
    return {arcs.data() + arc_offsets[node],
            arcs.data() + arc_offsets[static_cast<std::size_t>(node) + 1]};
  }

  // Dense (tier, count) -> node index; -1 when no such node exists.
  int node_index(int tier, int count) const;

  // Pointer into arcs for the arc from->to, nullptr when absent.
  const Arc* find_arc(int from, int to) const;

  // The item an internal node's tier is associated with (-1 for origin/destination).
  int tier_item(int node) const {
    const NodeRef& ref = nodes[node];
    return ref.kind == NodeKind::Internal ? ref.tier - 1 : -1;
  }

 private:
  friend struct DagBuilder;
  std::vector<std::int32_t> tier_offsets_;  // first node index of each tier
  std::vector<std::int32_t> tier_count_min_, tier_count_max_;
};

ChoiceDag build_bic(int m, Bounds bounds);
ChoiceDag build_muc(int m, Bounds bounds);
ChoiceDag build_bic_count(int m, Bounds bounds);
ChoiceDag build_muc_count(int m, Bounds bounds);
ChoiceDag build_dag(DagVariant variant, int m, Bounds bounds);

// Composite -> unique origin-destination path. Throws MappingError when the
// observation is not feasible for (dag.m, dag.bounds, variant).
PathInDag subset_to_path(const ChoiceDag& dag, const Observation& obs);

// Path -> composite. Validates that consecutive nodes are joined by arcs and
// that the path runs origin -> destination. The result carries dag.bounds.
Observation path_to_subset(const ChoiceDag& dag, const PathInDag& path);

// Number of origin-destination paths (exact in double for every tested size).
Scalar count_paths(const ChoiceDag& dag);

// Number of feasible composites by direct combinatorics: sum_t C(m,t) for the
// plain variants, sum_t C(m+t-1,t) for the count variants, t in [L, min(U, ..)].
Scalar composite_space_size(int m, Bounds bounds, bool count_mode);

// Closed-form node counts (exact, all variants).
std::int64_t expected_node_count(DagVariant variant, int m, Bounds bounds);

// Analytic arc-count formulas for the plain variants. Known to disagree with
// the construction by one arc on some instances (see the structural tests,
// which pin the discrepancy on m=3, L=1, U=2: BiC 13 built vs 14, MuC 11 vs 12).
std::int64_t bic_arc_count_formula(int m, Bounds bounds);
std::int64_t muc_arc_count_formula(int m, Bounds bounds);

// Graphviz dump for debugging/documentation. Skip/terminate arcs are dashed.
std::string to_dot(const ChoiceDag& dag);

std::string to_string(DagVariant variant);

}  // namespace dagchoice
