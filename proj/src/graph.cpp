#include "tvpursuit/graph.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <sstream>

namespace tvp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidSize: return "invalid-size";
    case ErrorKind::InvalidNode: return "invalid-node";
    case ErrorKind::NotATree: return "not-a-tree";
    case ErrorKind::DimensionExhausted: return "dimension-exhausted";
    case ErrorKind::ShapeMismatch: return "shape-mismatch";
    case ErrorKind::BudgetExceeded: return "budget-exceeded";
    case ErrorKind::Infeasible: return "infeasible";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

Graph Graph::from_edges(int n, std::vector<Edge> edges) {
  if (n < 1) throw Error(ErrorKind::InvalidSize, "graph needs at least one node");
  if (static_cast<int>(edges.size()) != n - 1)
    throw Error(ErrorKind::NotATree, "a tree on " + std::to_string(n) + " nodes has " +
                                         std::to_string(n - 1) + " edges, got " +
                                         std::to_string(edges.size()));
  Graph g;
  g.n_ = n;
  g.adjacency_.assign(n + 1, {});
  g.incident_.assign(n + 1, {});
  g.children_.assign(n + 1, {});
  g.parent_.assign(n + 1, 0);
  g.parent_edge_.assign(n + 1, 0);
  g.depth_.assign(n + 1, -1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const Edge& e = edges[i];
    if (e.v < 1 || e.v > n || e.w < 1 || e.w > n)
      throw Error(ErrorKind::InvalidNode, "edge endpoint out of range");
    if (e.v == e.w) throw Error(ErrorKind::NotATree, "self loop");
    const EdgeId id = static_cast<EdgeId>(i + 1);
    g.adjacency_[e.v].push_back(e.w);
    g.adjacency_[e.w].push_back(e.v);
    g.incident_[e.v].push_back(id);
    g.incident_[e.w].push_back(id);
  }
  g.edges_ = std::move(edges);

  std::queue<NodeId> frontier;
  frontier.push(1);
  g.depth_[1] = 0;
  while (!frontier.empty()) {
    const NodeId u = frontier.front();
    frontier.pop();
    g.bfs_order_.push_back(u);
    for (std::size_t k = 0; k < g.adjacency_[u].size(); ++k) {
      const NodeId w = g.adjacency_[u][k];
      if (g.depth_[w] >= 0) continue;
      g.depth_[w] = g.depth_[u] + 1;
      g.parent_[w] = u;
      g.parent_edge_[w] = g.incident_[u][k];
      g.children_[u].push_back(w);
      frontier.push(w);
    }
  }
  if (static_cast<int>(g.bfs_order_.size()) != n)
    throw Error(ErrorKind::NotATree, "graph is not connected (or contains a cycle)");
  return g;
}

void Graph::check_node(NodeId v) const {
  if (!contains(v)) throw Error(ErrorKind::InvalidNode, "unknown node " + std::to_string(v));
}

const Edge& Graph::edge(EdgeId e) const {
  if (e < 1 || e > num_edges()) throw Error(ErrorKind::InvalidNode, "unknown edge " + std::to_string(e));
  return edges_[static_cast<std::size_t>(e - 1)];
}

NodeId Graph::parent(NodeId v) const {
  check_node(v);
  return parent_[v];
}

EdgeId Graph::parent_edge(NodeId v) const {
  check_node(v);
  return parent_edge_[v];
}

NodeId Graph::child_of(EdgeId e) const {
  const Edge& ed = edge(e);
  return parent_edge_[ed.v] == e ? ed.v : ed.w;
}

NodeId Graph::parent_of(EdgeId e) const {
  const Edge& ed = edge(e);
  return child_of(e) == ed.v ? ed.w : ed.v;
}

int Graph::depth(NodeId v) const {
  check_node(v);
  return depth_[v];
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  check_node(v);
  return adjacency_[v];
}

std::span<const EdgeId> Graph::incident_edges(NodeId v) const {
  check_node(v);
  return incident_[v];
}

std::span<const NodeId> Graph::children(NodeId v) const {
  check_node(v);
  return children_[v];
}

bool Graph::adjacent(NodeId a, NodeId b) const {
  if (!contains(a) || !contains(b)) return false;
  const auto& adj = adjacency_[a];
  return std::find(adj.begin(), adj.end(), b) != adj.end();
}

Graph make_path(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidSize, "path needs n >= 1");
  std::vector<Edge> edges;
  for (NodeId v = 1; v < n; ++v) edges.push_back({v, v + 1});
  return Graph::from_edges(n, std::move(edges));
}

Graph make_balanced_tree(int branch, int height) {
  if (branch < 1) throw Error(ErrorKind::InvalidSize, "branch must be >= 1");
  if (height < 0) throw Error(ErrorKind::InvalidSize, "height must be >= 0");
  long long n = 1;
  long long level = 1;
  for (int h = 0; h < height; ++h) {
    level *= branch;
    n += level;
    if (n > 10'000'000) throw Error(ErrorKind::InvalidSize, "balanced tree too large");
  }
  std::vector<Edge> edges;
  // Breadth-first numbering: children of node v are branch*(v-1)+2 .. branch*v+1.
  for (NodeId child = 2; child <= n; ++child) edges.push_back({(child - 2) / branch + 1, child});
  return Graph::from_edges(static_cast<int>(n), std::move(edges));
}

Graph make_star(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidSize, "star needs n >= 1");
  std::vector<Edge> edges;
  for (NodeId v = 2; v <= n; ++v) edges.push_back({1, v});
  return Graph::from_edges(n, std::move(edges));
}

RootPath path_to_root(const Graph& g, NodeId v) {
  if (!g.contains(v)) throw Error(ErrorKind::InvalidNode, "unknown node " + std::to_string(v));
  RootPath path{v, {}};
  for (NodeId u = v; u != 1; u = g.parent(u)) path.edges.push_back(g.parent_edge(u));
  return path;
}

namespace {

std::vector<int> bfs_distances(const Graph& g, NodeId source) {
  std::vector<int> dist(g.num_nodes() + 1, -1);
  std::queue<NodeId> q;
  q.push(source);
  dist[source] = 0;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop();
    for (NodeId w : g.neighbors(u)) {
      if (dist[w] < 0) {
        dist[w] = dist[u] + 1;
        q.push(w);
      }
    }
  }
  return dist;
}

}  // namespace

GraphMetrics graph_metrics(const Graph& g) {
  GraphMetrics m;
  m.degree.resize(g.num_nodes());
  for (NodeId v = 1; v <= g.num_nodes(); ++v) {
    m.degree[v - 1] = g.degree(v);
    if (v != 1) m.max_nonroot_degree = std::max(m.max_nonroot_degree, g.degree(v));
  }
  // Tree diameter by double sweep.
  auto far = [&](NodeId src) {
    const auto dist = bfs_distances(g, src);
    NodeId best = src;
    for (NodeId v = 1; v <= g.num_nodes(); ++v)
      if (dist[v] > dist[best]) best = v;
    return std::pair{best, dist[best]};
  };
  const auto [a, unused] = far(1);
  (void)unused;
  m.diameter = far(a).second;
  return m;
}

std::string to_edge_list(const Graph& g) {
  std::ostringstream out;
  out << "n " << g.num_nodes() << '\n';
  for (EdgeId e = 1; e <= g.num_edges(); ++e) out << g.edge(e).v << ' ' << g.edge(e).w << '\n';
  return out.str();
}

Graph parse_edge_list(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = -1;
  std::vector<Edge> edges;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (n < 0) {
      std::string tag;
      if (!(ls >> tag >> n) || tag != "n")
        throw Error(ErrorKind::Parse, "edge list must start with 'n <count>'");
      continue;
    }
    Edge e;
    if (!(ls >> e.v >> e.w))
      throw Error(ErrorKind::Parse, "bad edge on line " + std::to_string(lineno));
    edges.push_back(e);
  }
  if (n < 0) throw Error(ErrorKind::Parse, "missing 'n <count>' header");
  return Graph::from_edges(n, std::move(edges));
}

}  // namespace tvp
