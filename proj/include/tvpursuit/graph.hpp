#pragma once

#include "tvpursuit/common.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tvp {

struct Edge {
  NodeId v = 0;
  NodeId w = 0;

  bool touches(NodeId u) const noexcept { return v == u || w == u; }
};

/// Rooted tree over nodes 1..n. Immutable once constructed; node 1 is the root.
/// Edges keep the ids they were given (1..n-1) and are oriented internally
/// from parent to child by a breadth-first traversal from the root.
class Graph {
 public:
  /// Validates that `edges` form a spanning tree on 1..n.
  static Graph from_edges(int n, std::vector<Edge> edges);

  int num_nodes() const noexcept { return n_; }
  int num_edges() const noexcept { return static_cast<int>(edges_.size()); }

  const Edge& edge(EdgeId e) const;
  NodeId parent(NodeId v) const;       // 0 for the root
  EdgeId parent_edge(NodeId v) const;  // 0 for the root
  NodeId child_of(EdgeId e) const;     // endpoint farther from the root
  NodeId parent_of(EdgeId e) const;    // endpoint closer to the root
  int depth(NodeId v) const;

  std::span<const NodeId> neighbors(NodeId v) const;
  std::span<const EdgeId> incident_edges(NodeId v) const;
  std::span<const NodeId> children(NodeId v) const;
  int degree(NodeId v) const { return static_cast<int>(neighbors(v).size()); }
  bool adjacent(NodeId a, NodeId b) const;

  /// Nodes in breadth-first order from the root (root first).
  const std::vector<NodeId>& bfs_order() const noexcept { return bfs_order_; }

  bool contains(NodeId v) const noexcept { return v >= 1 && v <= n_; }

 private:
  Graph() = default;
  void check_node(NodeId v) const;

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::vector<EdgeId>> incident_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> parent_;
  std::vector<EdgeId> parent_edge_;
  std::vector<int> depth_;
  std::vector<NodeId> bfs_order_;
};

struct RootPath {
  NodeId node = 0;
  /// Edge ids from `node` towards the root; empty for the root itself.
  std::vector<EdgeId> edges;
};

struct GraphMetrics {
  int diameter = 0;
  std::vector<int> degree;  // degree[v - 1]
  int max_nonroot_degree = 0;

  int degree_of(NodeId v) const { return degree.at(static_cast<std::size_t>(v - 1)); }
};

Graph make_path(int n);
/// Complete `branch`-ary tree of the given height, numbered breadth-first.
Graph make_balanced_tree(int branch, int height);
Graph make_star(int n);

RootPath path_to_root(const Graph& g, NodeId v);
GraphMetrics graph_metrics(const Graph& g);

/// Plain-text edge list: "n <count>" then one "v w" pair per line.
std::string to_edge_list(const Graph& g);
Graph parse_edge_list(std::string_view text);

}  // namespace tvp
