#pragma once

#include "tvpursuit/common.hpp"
#include "tvpursuit/graph.hpp"
#include "tvpursuit/optim.hpp"
#include "tvpursuit/problem_gen.hpp"
#include "tvpursuit/solvers.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tvp {

/// One d-length payload sent across a graph link.
enum class Payload { X, Delta, Gamma };

struct Message {
  NodeId from = 0;
  NodeId to = 0;
  EdgeId edge = 0;
  Payload kind = Payload::X;
  Vector value;
};

/// A node's local view of one incident edge, filled only from messages (or
/// from its own state when it owns the edge).
struct Link {
  EdgeId edge = 0;
  NodeId neighbor = 0;
  bool node_is_first = false;  // node plays v in x_v - x_w = Delta_e
  Vector neighbor_x;
  Vector delta;
  Vector gamma;
};

struct NodeState {
  NodeId id = 0;
  Vector x;
  Matrix design;
  Vector y;
  Matrix design_pinv;        // non-root only
  Vector lambda;             // root only: warm-start dual
  double spectral_norm_sq = 0.0;  // root only: cached ||A_1||^2
  std::vector<Link> links;
  std::vector<Message> inbox;
  int last_inner_iterations = 0;
};

/// Edge e joins first = child and second = parent, constraint x_first - x_second = delta.
struct EdgeState {
  EdgeId id = 0;
  NodeId first = 0;
  NodeId second = 0;
  Vector delta;
  Vector gamma;
};

struct Network {
  Graph graph;
  std::vector<NodeState> nodes;  // nodes[v - 1]
  std::vector<EdgeState> edges;  // edges[e - 1]
  double rho = 10.0;
  int round = 0;
};

/// Order of the per-node x-minimizations inside a round.
enum class XSchedule {
  /// Every node updates from the previous round's neighbor values.
  Jacobi,
  /// Even-depth nodes update first, then odd-depth nodes from the fresh even
  /// values. Same-color nodes are never adjacent, so each half is an exact
  /// block minimization of the augmented Lagrangian.
  Colored,
};

const char* to_string(XSchedule s);
XSchedule parse_schedule(const std::string& name);

struct DistributedConfig {
  double rho = 10.0;
  XSchedule schedule = XSchedule::Colored;
  int rounds = 500;
  BbConfig root;  // 200 iterations, gradient tolerance 1e-10, warm-started each round
  bool parallel = true;
};

/// Per-round record. Row 0 is the initial state.
struct RoundTrace {
  std::vector<int> round;
  std::vector<double> sq_error_to_reference;  // sum_v ||x_v^t - x_v^ref||^2, NaN without a reference
  std::vector<double> primal_residual;        // max_e ||x_first - x_second - delta_e||
  std::vector<long long> messages;            // d-length vectors sent this round
  std::vector<int> root_inner_iters;
  std::vector<std::vector<int>> inner_iters;  // per node; closed-form updates count 1
  std::vector<double> max_feasibility;        // max_v ||A_v x_v - y_v||
  std::vector<std::string> failures;          // "round r node v: message"
  long long provenance_violations = 0;

  std::size_t size() const { return round.size(); }
};

/// Vectors crossing each edge per round, both directions combined: the two x
/// exchanges plus the owner's delta and gamma.
inline constexpr int kVectorsPerEdgePerRound = 4;

/// Zero-initialized network; non-root nodes cache A_v^+.
Network init_network(const Graph& g, const DesignSet& designs, const MeasurementSet& meas, double rho);

/// Overwrites every iterate from a stacked augmented vector (x_1, Delta_1,
/// ...), per-edge duals gamma[e - 1] and the root's warm-start multiplier, and
/// refreshes all link views as if the matching messages had been exchanged.
void set_state(Network& net, const Vector& stacked, const std::vector<Vector>& gamma, const Vector& root_lambda);

/// Delivers a message into the receiver's inbox. Throws InvalidNode when the
/// sender and receiver are not the two endpoints of `edge`.
void deliver(Network& net, Message msg);

/// One synchronous round: node x-updates, x exchange, edge delta updates, dual
/// ascent, then delta/gamma to the edge's parent endpoint. Inner failures are
/// appended to `trace` (if given) and the node keeps its previous iterate.
void admm_round(Network& net, const DistributedConfig& cfg, RoundTrace* trace = nullptr);

double primal_residual(const Network& net);
std::vector<Vector> node_estimates(const Network& net);

struct AdmmRun {
  RoundTrace trace;
  SolveResult result;
};

/// `reference` is a stacked augmented solution (x_1, Delta_1, ...) over g.
AdmmRun run_admm(const Graph& g, const DesignSet& designs, const MeasurementSet& meas, const DistributedConfig& cfg,
                 const std::optional<Vector>& reference = std::nullopt);

/// Columns: round, sq_error_to_reference, primal_residual, messages, root_inner_iters.
void write_trace_csv(std::ostream& os, const RoundTrace& trace, const std::string& meta_comment = {});

}  // namespace tvp
