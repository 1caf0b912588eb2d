#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvpursuit/graph.hpp"

#include <algorithm>
#include <queue>
#include <set>

using namespace tvp;

namespace {

// Independent all-pairs BFS on an explicit adjacency list built from the edge set.
std::vector<std::vector<int>> all_pairs_hops(const Graph& g) {
  const int n = g.num_nodes();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n) + 1);
  for (EdgeId e = 1; e <= g.num_edges(); ++e) {
    adj[static_cast<std::size_t>(g.edge(e).v)].push_back(g.edge(e).w);
    adj[static_cast<std::size_t>(g.edge(e).w)].push_back(g.edge(e).v);
  }
  std::vector<std::vector<int>> dist(static_cast<std::size_t>(n) + 1, std::vector<int>(static_cast<std::size_t>(n) + 1, -1));
  for (int src = 1; src <= n; ++src) {
    auto& row = dist[static_cast<std::size_t>(src)];
    std::queue<int> q;
    q.push(src);
    row[static_cast<std::size_t>(src)] = 0;
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int w : adj[static_cast<std::size_t>(u)])
        if (row[static_cast<std::size_t>(w)] < 0) {
          row[static_cast<std::size_t>(w)] = row[static_cast<std::size_t>(u)] + 1;
          q.push(w);
        }
    }
  }
  return dist;
}

int oracle_diameter(const Graph& g) {
  const auto dist = all_pairs_hops(g);
  int best = 0;
  for (const auto& row : dist)
    for (int x : row) best = std::max(best, x);
  return best;
}

std::set<int> edge_endpoints(const Graph& g, EdgeId e) { return {g.edge(e).v, g.edge(e).w}; }

}  // namespace

TEST_CASE("make_path builds a chain rooted at an endpoint") {
  const Graph g = make_path(4);
  CHECK(g.num_edges() == 3);
  CHECK(edge_endpoints(g, 1) == std::set<int>{1, 2});
  CHECK(edge_endpoints(g, 2) == std::set<int>{2, 3});
  CHECK(edge_endpoints(g, 3) == std::set<int>{3, 4});
  CHECK(graph_metrics(g).diameter == 3);

  CHECK(make_path(1).num_edges() == 0);

  const Graph p16 = make_path(16);
  CHECK(p16.num_edges() == 15);
  CHECK(graph_metrics(p16).degree_of(1) == 1);
  CHECK(graph_metrics(make_path(8)).diameter == 7);

  CHECK_THROWS_AS(make_path(0), Error);
}

TEST_CASE("make_balanced_tree sizes and breadth-first numbering") {
  CHECK(make_balanced_tree(2, 2).num_nodes() == 7);
  CHECK(make_balanced_tree(2, 3).num_nodes() == 15);
  CHECK(make_balanced_tree(2, 4).num_nodes() == 31);
  CHECK(make_balanced_tree(5, 0).num_nodes() == 1);
  const Graph t = make_balanced_tree(2, 2);
  const auto& order = t.bfs_order();
  for (std::size_t i = 0; i < order.size(); ++i) CHECK(order[i] == static_cast<int>(i) + 1);
  const Graph t15 = make_balanced_tree(2, 3);
  CHECK(graph_metrics(t15).diameter == 6);
  CHECK(graph_metrics(t15).diameter == oracle_diameter(t15));
  CHECK_THROWS_AS(make_balanced_tree(0, 2), Error);
  CHECK_THROWS_AS(make_balanced_tree(1000, 10), Error);
}

TEST_CASE("make_star") {
  const Graph s5 = make_star(5);
  const auto m = graph_metrics(s5);
  CHECK(m.degree_of(1) == 4);
  CHECK(m.diameter == 2);
  const Graph s2 = make_star(2);
  CHECK(to_edge_list(s2) == to_edge_list(make_path(2)));
  const Graph s4 = make_star(4);
  for (NodeId v = 2; v <= 4; ++v) CHECK(path_to_root(s4, v).edges.size() == 1);
  CHECK(graph_metrics(make_star(6)).diameter == 2);
  CHECK(graph_metrics(make_star(6)).degree_of(1) == 5);
}

TEST_CASE("path_to_root") {
  const Graph p = make_path(4);
  const auto rp = path_to_root(p, 4);
  REQUIRE(rp.edges.size() == 3);
  CHECK(edge_endpoints(p, rp.edges[0]) == std::set<int>{3, 4});
  CHECK(edge_endpoints(p, rp.edges[1]) == std::set<int>{2, 3});
  CHECK(edge_endpoints(p, rp.edges[2]) == std::set<int>{1, 2});
  CHECK(path_to_root(p, 1).edges.empty());
  CHECK_THROWS_AS(path_to_root(p, 5), Error);

  const Graph t = make_balanced_tree(2, 2);
  const auto hops = all_pairs_hops(t);
  for (NodeId v = 1; v <= t.num_nodes(); ++v) {
    const auto path = path_to_root(t, v);
    CHECK(static_cast<int>(path.edges.size()) == hops[1][static_cast<std::size_t>(v)]);
    // Consecutive edges share exactly one endpoint; last edge touches the root.
    for (std::size_t i = 1; i < path.edges.size(); ++i) {
      std::set<int> a = edge_endpoints(t, path.edges[i - 1]);
      std::set<int> b = edge_endpoints(t, path.edges[i]);
      std::vector<int> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      CHECK(common.size() == 1);
    }
    if (!path.edges.empty()) CHECK(t.edge(path.edges.back()).touches(1));
    CHECK(path_to_root(t, v).edges == path.edges);
  }
  CHECK(path_to_root(t, 7).edges.size() == 2);
}

TEST_CASE("tree invariants across constructors") {
  std::vector<Graph> graphs{make_path(1), make_path(9), make_star(7), make_balanced_tree(3, 2),
                            make_balanced_tree(2, 4)};
  for (const Graph& g : graphs) {
    CHECK(g.num_edges() == g.num_nodes() - 1);
    CHECK(static_cast<int>(g.bfs_order().size()) == g.num_nodes());
    const auto m = graph_metrics(g);
    CHECK(m.diameter == oracle_diameter(g));
    int nonroot_max = 0;
    for (NodeId v = 1; v <= g.num_nodes(); ++v) {
      CHECK(m.degree_of(v) == g.degree(v));
      if (v != 1) nonroot_max = std::max(nonroot_max, g.degree(v));
    }
    CHECK(m.max_nonroot_degree == nonroot_max);
    std::vector<int> usage(static_cast<std::size_t>(g.num_edges()) + 1, 0);
    for (NodeId v = 1; v <= g.num_nodes(); ++v) {
      const auto path = path_to_root(g, v);
      CHECK(static_cast<int>(path.edges.size()) <= m.diameter);
      for (EdgeId e : path.edges) ++usage[static_cast<std::size_t>(e)];
    }
    for (std::size_t e = 1; e < usage.size(); ++e) CHECK(usage[e] <= m.max_nonroot_degree * m.diameter);
  }
}

TEST_CASE("edge-list round trip and rejection of non-trees") {
  const Graph t = make_balanced_tree(2, 3);
  const Graph back = parse_edge_list(to_edge_list(t));
  CHECK(to_edge_list(back) == to_edge_list(t));
  CHECK_THROWS_AS(parse_edge_list("n 3\n1 2\n2 3\n3 1\n"), Error);
  CHECK_THROWS_AS(parse_edge_list("n 4\n1 2\n3 4\n"), Error);
  CHECK_THROWS_AS(parse_edge_list("n 3\n1 2\n2 9\n"), Error);
  CHECK_THROWS_AS(parse_edge_list("nodes 3"), Error);
  const Graph g = parse_edge_list("# comment\nn 3\n2 1\n3 1\n");
  CHECK(g.num_edges() == 2);
  CHECK(g.parent(3) == 1);
}
