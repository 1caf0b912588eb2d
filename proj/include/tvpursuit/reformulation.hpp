#pragma once

#include "tvpursuit/common.hpp"
#include "tvpursuit/graph.hpp"
#include "tvpursuit/kernels.hpp"
#include "tvpursuit/linear_operator.hpp"
#include "tvpursuit/problem_gen.hpp"

#include <vector>

namespace tvp {

/// The joint problem written as one basis-pursuit system over the stacked
/// unknown z = (x_1, Delta_1, ..., Delta_{n-1}):
///
///   A_v (x_1 + sum_{e in path(v)} Delta_e) = y_v   for every node v.
///
/// Column block 0 is x_1; column block e (1-based edge id) is Delta_e, with
/// Delta_e = x_child(e) - x_parent(e). The operator is applied block-wise; the
/// dense matrix is only materialized on request.
class AugmentedSystem final : public LinearOperator {
 public:
  AugmentedSystem(const Graph& g, const DesignSet& designs, const MeasurementSet& meas);
  AugmentedSystem(const Graph& g, const DesignSet& designs);

  Eigen::Index rows() const override { return row_offset_.back(); }
  Eigen::Index cols() const override { return static_cast<Eigen::Index>(n_) * d_; }
  Vector apply(const Eigen::Ref<const Vector>& z) const override;
  Vector adjoint(const Eigen::Ref<const Vector>& r) const override;
  Matrix gram() const override;
  Matrix dense() const override;

  int num_nodes() const noexcept { return n_; }
  int dim() const noexcept { return d_; }
  const Vector& y() const noexcept { return y_; }
  Eigen::Index row_offset(NodeId v) const { return row_offset_.at(static_cast<std::size_t>(v - 1)); }
  Eigen::Index row_count(NodeId v) const { return row_offset(v + 1) - row_offset(v); }
  const Matrix& design(NodeId v) const;

  /// True when H_{v,e} = A_v, i.e. edge e lies on the root path of v.
  bool block_nonzero(NodeId v, EdgeId e) const;
  /// Column-block index of an edge (fixed to the edge id).
  int edge_block(EdgeId e) const;

  kernels::BlockLayout layout() const;

 private:
  int n_ = 0;
  int d_ = 0;
  std::vector<Matrix> unique_;
  std::vector<int> design_index_;
  std::vector<Eigen::Index> row_offset_;
  std::vector<unsigned char> on_path_;
  Vector y_;
};

struct AugmentedSupport {
  std::vector<int> indices;  // 0-based positions in the stacked vector, ascending
};

/// Stack (x*_1, Delta*_1, ...) into one vector of length n*d.
Vector stack_ensemble(const SignalEnsemble& ens);
AugmentedSupport augmented_support(const SignalEnsemble& ens);
/// x_v = block_0 + sum of the path blocks of v.
std::vector<Vector> expand_solution(const Graph& g, const Eigen::Ref<const Vector>& stacked);
/// Inverse of expand_solution: Delta_e = x_child - x_parent.
Vector stack_node_signals(const Graph& g, const std::vector<Vector>& nodes);

}  // namespace tvp
