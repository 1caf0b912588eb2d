#include "tvpursuit/distributed.hpp"

#include "tvpursuit/io.hpp"
#include "tvpursuit/reformulation.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

namespace tvp {

namespace {

Link* find_link(NodeState& node, EdgeId e) {
  for (auto& l : node.links)
    if (l.edge == e) return &l;
  return nullptr;
}

const Link& owned_link(const NodeState& node, EdgeId e) {
  for (const auto& l : node.links)
    if (l.edge == e) return l;
  throw Error(ErrorKind::InvalidNode, "node " + std::to_string(node.id) + " has no link for edge " + std::to_string(e));
}

/// Applies queued messages to the node's link views. Returns the number of
/// messages whose sender is not a neighbor across the named edge.
long long consume_inbox(NodeState& node) {
  long long violations = 0;
  for (auto& m : node.inbox) {
    Link* l = find_link(node, m.edge);
    if (l == nullptr || l->neighbor != m.from || m.to != node.id) {
      ++violations;
      continue;
    }
    switch (m.kind) {
      case Payload::X: l->neighbor_x = std::move(m.value); break;
      case Payload::Delta: l->delta = std::move(m.value); break;
      case Payload::Gamma: l->gamma = std::move(m.value); break;
    }
  }
  node.inbox.clear();
  return violations;
}

/// Linear coefficient of the node's share of the augmented Lagrangian:
/// sum over incident edges of rho/2 ||x - target||^2 + sign <gamma, x>, where
/// the node is v (sign +, target x_w + Delta) or w (sign -, target x_v - Delta).
Vector linear_term(const NodeState& node, double rho) {
  Vector ell = Vector::Zero(node.x.size());
  for (const auto& l : node.links) {
    if (l.node_is_first)
      ell += l.gamma - rho * (l.neighbor_x + l.delta);
    else
      ell += -l.gamma - rho * (l.neighbor_x - l.delta);
  }
  return ell;
}

struct UpdateOutcome {
  int inner_iterations = 0;
  std::string failure;
};

UpdateOutcome update_node(NodeState& node, double rho, const BbConfig& root_cfg) {
  UpdateOutcome out;
  const int deg = static_cast<int>(node.links.size());
  try {
    if (node.id == 1) {
      if (deg == 0) {
        // No consensus terms: the x-minimization is basis pursuit itself.
        const auto bp = basis_pursuit(node.design, node.y, BpBackend::Lp);
        node.x = bp.x;
        out.inner_iterations = bp.info.iterations;
        return out;
      }
      BbConfig cfg = root_cfg;
      cfg.warm_start = node.lambda;
      cfg.spectral_norm_sq = node.spectral_norm_sq;
      const auto r = root_subproblem(node.design, node.y, linear_term(node, rho), 0.5 * deg * rho, cfg);
      node.x = r.x;
      node.lambda = r.lambda;
      out.inner_iterations = r.iterations;
    } else {
      // min ||x||^2 + <a, x> s.t. A x = y with a = 2 ell / (deg rho).
      const Vector a = (2.0 / (deg * rho)) * linear_term(node, rho);
      node.x = least_norm_affine(node.design, node.y, a, &node.design_pinv);
      out.inner_iterations = 1;
    }
  } catch (const std::exception& e) {
    out.failure = e.what();
  }
  return out;
}

}  // namespace

const char* to_string(XSchedule s) { return s == XSchedule::Jacobi ? "jacobi" : "colored"; }

XSchedule parse_schedule(const std::string& name) {
  if (name == "jacobi") return XSchedule::Jacobi;
  if (name == "colored") return XSchedule::Colored;
  throw Error(ErrorKind::Parse, "unknown x schedule '" + name + "' (expected jacobi or colored)");
}

Network init_network(const Graph& g, const DesignSet& designs, const MeasurementSet& meas, double rho) {
  if (!(rho > 0.0)) throw Error(ErrorKind::InvalidSize, "rho must be positive");
  if (g.num_nodes() != designs.num_nodes() || designs.num_nodes() != meas.num_nodes())
    throw Error(ErrorKind::ShapeMismatch, "graph, designs and measurements disagree on node count");
  const int d = designs.cols();
  Network net{g, {}, {}, rho, 0};
  for (NodeId v = 1; v <= g.num_nodes(); ++v) {
    if (meas.y(v).size() != designs.rows(v))
      throw Error(ErrorKind::ShapeMismatch, "response length != design rows at node " + std::to_string(v));
    NodeState node;
    node.id = v;
    node.x = Vector::Zero(d);
    node.design = designs.matrix(v);
    node.y = meas.y(v);
    if (v == 1) {
      node.lambda = Vector::Zero(node.design.rows());
      if (node.design.rows() > 0) {
        const Matrix gram = node.design * node.design.transpose();
        node.spectral_norm_sq = Eigen::SelfAdjointEigenSolver<Matrix>(gram, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
      }
    } else {
      node.design_pinv = pinv(node.design);
    }
    for (EdgeId e : g.incident_edges(v)) {
      Link l;
      l.edge = e;
      l.node_is_first = g.child_of(e) == v;
      l.neighbor = l.node_is_first ? g.parent_of(e) : g.child_of(e);
      l.neighbor_x = Vector::Zero(d);
      l.delta = Vector::Zero(d);
      l.gamma = Vector::Zero(d);
      node.links.push_back(std::move(l));
    }
    net.nodes.push_back(std::move(node));
  }
  for (EdgeId e = 1; e <= g.num_edges(); ++e)
    net.edges.push_back(EdgeState{e, g.child_of(e), g.parent_of(e), Vector::Zero(d), Vector::Zero(d)});
  return net;
}

void deliver(Network& net, Message msg) {
  if (msg.edge < 1 || msg.edge > net.graph.num_edges())
    throw Error(ErrorKind::InvalidNode, "message names unknown edge " + std::to_string(msg.edge));
  const Edge& e = net.graph.edge(msg.edge);
  if (msg.from == msg.to || !e.touches(msg.from) || !e.touches(msg.to))
    throw Error(ErrorKind::InvalidNode, "message " + std::to_string(msg.from) + "->" + std::to_string(msg.to) +
                                            " does not travel along edge " + std::to_string(msg.edge));
  net.nodes[static_cast<std::size_t>(msg.to - 1)].inbox.push_back(std::move(msg));
}

void set_state(Network& net, const Vector& stacked, const std::vector<Vector>& gamma, const Vector& root_lambda) {
  const auto n = static_cast<Eigen::Index>(net.nodes.size());
  const Eigen::Index d = net.nodes.front().x.size();
  if (stacked.size() != n * d || gamma.size() != net.edges.size() || root_lambda.size() != net.nodes[0].lambda.size())
    throw Error(ErrorKind::ShapeMismatch, "state does not match the network");
  const auto xs = expand_solution(net.graph, stacked);
  for (auto& node : net.nodes) node.x = xs[static_cast<std::size_t>(node.id - 1)];
  net.nodes[0].lambda = root_lambda;
  for (auto& e : net.edges) {
    if (gamma[static_cast<std::size_t>(e.id - 1)].size() != d) throw Error(ErrorKind::ShapeMismatch, "gamma length != d");
    e.delta = stacked.segment(static_cast<Eigen::Index>(e.id) * d, d);
    e.gamma = gamma[static_cast<std::size_t>(e.id - 1)];
  }
  for (auto& node : net.nodes)
    for (auto& l : node.links) {
      const EdgeState& e = net.edges[static_cast<std::size_t>(l.edge - 1)];
      l.neighbor_x = net.nodes[static_cast<std::size_t>(l.neighbor - 1)].x;
      l.delta = e.delta;
      l.gamma = e.gamma;
    }
}

double primal_residual(const Network& net) {
  double worst = 0.0;
  for (const auto& e : net.edges) {
    const Vector r = net.nodes[static_cast<std::size_t>(e.first - 1)].x -
                     net.nodes[static_cast<std::size_t>(e.second - 1)].x - e.delta;
    worst = std::max(worst, r.norm());
  }
  return worst;
}

std::vector<Vector> node_estimates(const Network& net) {
  std::vector<Vector> out;
  for (const auto& n : net.nodes) out.push_back(n.x);
  return out;
}

void admm_round(Network& net, const DistributedConfig& cfg, RoundTrace* trace) {
  const int n = static_cast<int>(net.nodes.size());
  const int m = static_cast<int>(net.edges.size());
  const double rho = net.rho;
  ++net.round;
  long long violations = 0;
  long long messages = 0;

  // Half-step 1: node x-minimizations from link views, then x exchange. The
  // colored schedule runs this twice, even depths then odd depths.
  std::vector<UpdateOutcome> outcomes(static_cast<std::size_t>(n));
  const int phases = cfg.schedule == XSchedule::Colored ? 2 : 1;
  for (int phase = 0; phase < phases; ++phase) {
    auto active = [&](const NodeState& node) {
      return phases == 1 || net.graph.depth(node.id) % 2 == phase;
    };
#pragma omp parallel for schedule(dynamic) if (cfg.parallel)
    for (int i = 0; i < n; ++i) {
      NodeState& node = net.nodes[static_cast<std::size_t>(i)];
      if (active(node)) outcomes[static_cast<std::size_t>(i)] = update_node(node, rho, cfg.root);
    }
    for (const auto& node : net.nodes) {
      if (!active(node)) continue;
      for (const auto& l : node.links) {
        deliver(net, Message{node.id, l.neighbor, l.edge, Payload::X, node.x});
        ++messages;
      }
    }
    for (auto& node : net.nodes) violations += consume_inbox(node);
  }

  // Half-step 2: each edge's child endpoint updates Delta and gamma.
#pragma omp parallel for schedule(static) if (cfg.parallel)
  for (int k = 0; k < m; ++k) {
    EdgeState& e = net.edges[static_cast<std::size_t>(k)];
    NodeState& owner = net.nodes[static_cast<std::size_t>(e.first - 1)];
    Link* l = find_link(owner, e.id);
    const Vector& x_first = owner.x;
    const Vector& x_second = l->neighbor_x;
    l->delta = shrink_delta(l->gamma, rho, x_first, x_second);
    l->gamma += rho * (x_first - x_second - l->delta);
    e.delta = l->delta;
    e.gamma = l->gamma;
  }
  for (const auto& e : net.edges) {
    const Link& l = owned_link(net.nodes[static_cast<std::size_t>(e.first - 1)], e.id);
    deliver(net, Message{e.first, e.second, e.id, Payload::Delta, l.delta});
    deliver(net, Message{e.first, e.second, e.id, Payload::Gamma, l.gamma});
    messages += 2;
  }
  for (auto& node : net.nodes) violations += consume_inbox(node);

  if (trace == nullptr) return;
  trace->round.push_back(net.round);
  trace->primal_residual.push_back(primal_residual(net));
  trace->messages.push_back(messages);
  trace->provenance_violations += violations;
  std::vector<int> inner(static_cast<std::size_t>(n));
  double feas = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    inner[static_cast<std::size_t>(i)] = o.inner_iterations;
    if (!o.failure.empty())
      trace->failures.push_back("round " + std::to_string(net.round) + " node " + std::to_string(i + 1) + ": " + o.failure);
    const auto& node = net.nodes[static_cast<std::size_t>(i)];
    feas = std::max(feas, (node.design * node.x - node.y).norm());
  }
  trace->root_inner_iters.push_back(inner[0]);
  trace->inner_iters.push_back(std::move(inner));
  trace->max_feasibility.push_back(feas);
}

AdmmRun run_admm(const Graph& g, const DesignSet& designs, const MeasurementSet& meas, const DistributedConfig& cfg,
                 const std::optional<Vector>& reference) {
  if (cfg.rounds < 1) throw Error(ErrorKind::InvalidSize, "rounds must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  Network net = init_network(g, designs, meas, cfg.rho);
  std::vector<Vector> ref_nodes;
  if (reference) ref_nodes = expand_solution(g, *reference);

  auto sq_error = [&]() {
    if (ref_nodes.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (std::size_t v = 0; v < ref_nodes.size(); ++v) s += (net.nodes[v].x - ref_nodes[v]).squaredNorm();
    return s;
  };

  AdmmRun run;
  RoundTrace& t = run.trace;
  t.round.push_back(0);
  t.sq_error_to_reference.push_back(sq_error());
  t.primal_residual.push_back(primal_residual(net));
  t.messages.push_back(0);
  t.root_inner_iters.push_back(0);
  t.inner_iters.emplace_back(static_cast<std::size_t>(g.num_nodes()), 0);
  double feas0 = 0.0;
  for (const auto& node : net.nodes) feas0 = std::max(feas0, (node.design * node.x - node.y).norm());
  t.max_feasibility.push_back(feas0);

  for (int r = 0; r < cfg.rounds; ++r) {
    admm_round(net, cfg, &t);
    t.sq_error_to_reference.push_back(sq_error());
  }

  SolveResult& res = run.result;
  res.method = "distributed_admm";
  res.nodes = node_estimates(net);
  const int d = designs.cols();
  res.stacked = Vector::Zero(static_cast<Eigen::Index>(g.num_nodes()) * d);
  res.stacked.head(d) = net.nodes[0].x;
  for (const auto& e : net.edges) res.stacked.segment(static_cast<Eigen::Index>(e.id) * d, d) = e.delta;
  res.objective = res.stacked.lpNorm<1>();
  double sq = 0.0;
  for (const auto& node : net.nodes) sq += (node.design * node.x - node.y).squaredNorm();
  res.residual = std::sqrt(sq);
  res.iterations = cfg.rounds;
  res.node_ok.assign(static_cast<std::size_t>(g.num_nodes()), true);
  res.info.iterations = cfg.rounds;
  res.info.primal_residual = t.primal_residual.back();
  res.info.converged = t.failures.empty();
  res.info.status = t.failures.empty() ? "completed" : "inner-failures";
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

void write_trace_csv(std::ostream& os, const RoundTrace& trace, const std::string& meta_comment) {
  std::vector<std::string> comments;
  if (!meta_comment.empty()) comments.push_back(meta_comment);
  CsvWriter w(os, "trace", {"round", "sq_error_to_reference", "primal_residual", "messages", "root_inner_iters"},
              comments);
  for (std::size_t i = 0; i < trace.size(); ++i)
    w.row({std::to_string(trace.round[i]), format_double(trace.sq_error_to_reference[i]),
           format_double(trace.primal_residual[i]), std::to_string(trace.messages[i]),
           std::to_string(trace.root_inner_iters[i])});
}

}  // namespace tvp
