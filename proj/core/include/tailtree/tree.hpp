#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tailtree/errors.hpp"

namespace tailtree {

using NodePair = std::pair<int, int>;

/// Set of 1-based node ids, kept sorted and unique.
class NodeSet {
 public:
  NodeSet() = default;
  NodeSet(std::initializer_list<int> ids);
  explicit NodeSet(std::vector<int> ids);

  bool contains(int v) const;
  bool empty() const { return ids_.empty(); }
  int size() const { return static_cast<int>(ids_.size()); }
  const std::vector<int>& ids() const { return ids_; }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }

  static NodeSet all(int d);
  /// Nodes of {1..d} not in this set.
  NodeSet complement(int d) const;

  friend bool operator==(const NodeSet&, const NodeSet&) = default;

 private:
  std::vector<int> ids_;
};

/// Undirected tree on nodes {1..d}. Edges keep their construction order and
/// are addressed by position. Immutable after construction.
class Tree {
 public:
  Tree(int node_count, std::span<const NodePair> edges);
  Tree(int node_count, std::initializer_list<NodePair> edges)
      : Tree(node_count, std::span<const NodePair>(edges.begin(), edges.size())) {}

  int node_count() const { return d_; }
  int edge_count() const { return d_ - 1; }
  const std::vector<NodePair>& edges() const { return edges_; }
  NodePair edge(int index) const { return edges_.at(static_cast<std::size_t>(index)); }

  /// Position of the edge joining a and b; throws if they are not adjacent.
  int edge_index(int a, int b) const;
  bool adjacent(int a, int b) const;

  const std::vector<int>& neighbors(int v) const;
  int degree(int v) const { return static_cast<int>(neighbors(v).size()); }

  /// The unique path from u to v as a sequence of oriented edges.
  std::vector<NodePair> path(int u, int v) const;
  /// Same path, as edge positions.
  std::vector<int> path_edge_indices(int u, int v) const;
  /// Number of edges on the path from u to v (0 if u == v).
  int distance(int u, int v) const;

  void require_node(int v) const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  int d_ = 0;
  std::vector<NodePair> edges_;
  std::vector<std::vector<int>> adj_;    // [1..d], sorted neighbor lists
  std::vector<int> parent_;              // rooted at node 1, for path queries
  std::vector<int> parent_edge_;
  std::vector<int> depth_;
};

inline Tree build_tree(int node_count, std::span<const NodePair> edges) {
  return Tree(node_count, edges);
}

/// 0/1 incidence of edges on the paths of the requested node pairs.
struct PathSumCoefficients {
  std::vector<NodePair> pairs;
  std::vector<std::vector<int>> matrix;  // one row per pair, one column per edge
};

PathSumCoefficients path_sum_matrix(const Tree& tree,
                                    std::span<const NodePair> pairs);

/// Rank of an integer matrix, computed exactly (Bareiss fraction-free
/// elimination).
int exact_integer_rank(std::vector<std::vector<long long>> m);

struct DegreeCheck {
  bool identifiable = false;
  std::vector<std::pair<int, int>> violations;  // (latent node, degree)
};

/// True iff every node outside `observed` has degree >= 3.
DegreeCheck check_identifiability_degree(const Tree& tree,
                                         const NodeSet& observed);

/// True iff the path-sum system over all observable pairs has full column
/// rank d-1 (exact integer rank).
bool check_identifiability_rank(const Tree& tree, const NodeSet& observed);

struct ExtractionTerm {
  NodePair pair;   // observable node pair, stored with pair.first < pair.second
  double coeff;    // in {+-1/2, +-1}
};

/// Per edge, a sparse linear combination of observable path sums whose value
/// equals that edge's squared parameter.
struct ExtractionPlan {
  std::vector<std::vector<ExtractionTerm>> per_edge;

  /// Evaluates the combination for edge position e, given a path-sum oracle.
  double evaluate_edge(int e,
                       const std::function<double(int, int)>& path_sum) const;
};

ExtractionPlan extraction_plan(const Tree& tree, const NodeSet& observed);

/// Text format: first line "d", then d-1 lines "a b", then an optional
/// comment line "# latent: ...".
struct TreeFile {
  Tree tree;
  NodeSet latent;
};

TreeFile read_tree_file(std::istream& in);
TreeFile read_tree_file(const std::string& path);
std::string format_tree_file(const Tree& tree, const NodeSet& latent);
void write_tree_file(const std::string& path, const Tree& tree,
                     const NodeSet& latent);

}  // namespace tailtree
