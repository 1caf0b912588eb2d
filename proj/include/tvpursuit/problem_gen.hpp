#pragma once

#include "tvpursuit/common.hpp"
#include "tvpursuit/graph.hpp"

#include <cstdint>
#include <vector>

namespace tvp {

enum class SignalScheme {
  /// Root and edge differences take values in {+1,-1}; every support set is
  /// disjoint from every other.
  DisjointPm1,
  /// Root values in {+1,-1}; each difference has s' standard normal entries at
  /// uniformly random locations (supports may overlap).
  GaussianDiffs,
};

/// (G, s, s')-sparse collection: a root signal plus one sparse difference per edge.
struct SignalEnsemble {
  int d = 0;
  int s = 0;
  int s_prime = 0;
  Vector root_signal;
  std::vector<Vector> diffs;  // diffs[e - 1] = x_child(e) - x_parent(e)
  std::vector<int> root_support;
  std::vector<std::vector<int>> diff_supports;
  std::uint64_t seed = 0;

  const Vector& diff(EdgeId e) const { return diffs.at(static_cast<std::size_t>(e - 1)); }
  Vector node_signal(const Graph& g, NodeId v) const;
  std::vector<Vector> node_signals(const Graph& g) const;
};

/// Per-node design matrices A_v (N_v x d). Nodes sharing a matrix reference the
/// same entry of `unique` through `index`.
struct DesignSet {
  std::vector<Matrix> unique;
  std::vector<int> index;  // index[v - 1] -> unique
  bool scaled = true;      // A_v = A~_v / sqrt(N_v)
  bool shared_nonroot = false;
  std::uint64_t seed = 0;

  int num_nodes() const noexcept { return static_cast<int>(index.size()); }
  const Matrix& matrix(NodeId v) const { return unique.at(static_cast<std::size_t>(index.at(v - 1))); }
  int rows(NodeId v) const { return static_cast<int>(matrix(v).rows()); }
  int cols() const { return unique.empty() ? 0 : static_cast<int>(unique.front().cols()); }
  int total_rows() const;

  /// One matrix per node, no sharing.
  static DesignSet from_matrices(std::vector<Matrix> per_node);
};

struct MeasurementSet {
  std::vector<Vector> responses;  // y_v, responses[v - 1]
  std::vector<Vector> noise;      // eps_v
  double noise_budget = 0.0;      // eta
  std::uint64_t seed = 0;

  const Vector& y(NodeId v) const { return responses.at(static_cast<std::size_t>(v - 1)); }
  int num_nodes() const noexcept { return static_cast<int>(responses.size()); }
};

/// i.i.d. standard normal entries scaled by 1/sqrt(rows).
Matrix gen_design(int rows, int d, std::uint64_t seed);

/// Root gets `root_rows`, every other node `nonroot_rows`. With `shared_nonroot`
/// all non-root nodes use one matrix; with `shared_all` every node does.
DesignSet gen_designs(int n, int d, int root_rows, int nonroot_rows, bool shared_nonroot,
                      std::uint64_t seed, bool shared_all = false);

SignalEnsemble gen_signals(const Graph& g, int d, int s, int s_prime, SignalScheme scheme,
                           std::uint64_t seed);

/// y_v = A_v x*_v + eps_v with eps_v ~ N(0, noise_sd^2). The budget eta is set to
/// sqrt(sum_v N_v) * noise_sd unless `eta_override` is non-negative.
MeasurementSet measure(const Graph& g, const DesignSet& designs, const SignalEnsemble& ens,
                       double noise_sd, std::uint64_t seed, double eta_override = -1.0);

/// floor(2 s ln(e d / s)).
int root_sample_size(int s, int d);

}  // namespace tvp
