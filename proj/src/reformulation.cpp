#include "tvpursuit/reformulation.hpp"

#include <map>
#include <utility>

namespace tvp {

AugmentedSystem::AugmentedSystem(const Graph& g, const DesignSet& designs) {
  n_ = g.num_nodes();
  if (designs.num_nodes() != n_) throw Error(ErrorKind::ShapeMismatch, "design count != node count");
  d_ = designs.cols();
  unique_ = designs.unique;
  design_index_ = designs.index;
  row_offset_.assign(static_cast<std::size_t>(n_) + 1, 0);
  for (NodeId v = 1; v <= n_; ++v)
    row_offset_[static_cast<std::size_t>(v)] = row_offset_[static_cast<std::size_t>(v - 1)] + designs.rows(v);
  on_path_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(std::max(n_ - 1, 0)), 0);
  for (NodeId v = 1; v <= n_; ++v)
    for (EdgeId e : path_to_root(g, v).edges)
      on_path_[static_cast<std::size_t>(v - 1) * static_cast<std::size_t>(n_ - 1) + static_cast<std::size_t>(e - 1)] = 1;
  y_ = Vector::Zero(rows());
}

AugmentedSystem::AugmentedSystem(const Graph& g, const DesignSet& designs, const MeasurementSet& meas)
    : AugmentedSystem(g, designs) {
  if (meas.num_nodes() != n_) throw Error(ErrorKind::ShapeMismatch, "measurement count != node count");
  for (NodeId v = 1; v <= n_; ++v) {
    if (meas.y(v).size() != row_count(v))
      throw Error(ErrorKind::ShapeMismatch, "response length != design rows at node " + std::to_string(v));
    y_.segment(row_offset(v), row_count(v)) = meas.y(v);
  }
}

const Matrix& AugmentedSystem::design(NodeId v) const {
  if (v < 1 || v > n_) throw Error(ErrorKind::InvalidNode, "unknown node " + std::to_string(v));
  return unique_[static_cast<std::size_t>(design_index_[static_cast<std::size_t>(v - 1)])];
}

bool AugmentedSystem::block_nonzero(NodeId v, EdgeId e) const {
  if (v < 1 || v > n_ || e < 1 || e >= n_) throw Error(ErrorKind::InvalidNode, "block index out of range");
  return on_path_[static_cast<std::size_t>(v - 1) * static_cast<std::size_t>(n_ - 1) + static_cast<std::size_t>(e - 1)] != 0;
}

int AugmentedSystem::edge_block(EdgeId e) const {
  if (e < 1 || e >= n_) throw Error(ErrorKind::InvalidNode, "unknown edge " + std::to_string(e));
  return e;
}

kernels::BlockLayout AugmentedSystem::layout() const {
  return kernels::BlockLayout{d_, n_, unique_, design_index_, row_offset_, on_path_};
}

Vector AugmentedSystem::apply(const Eigen::Ref<const Vector>& z) const {
  if (z.size() != cols()) throw Error(ErrorKind::ShapeMismatch, "stacked vector has wrong length");
  Vector out(rows());
  kernels::parallel::augmented_apply(layout(), z, out);
  return out;
}

Vector AugmentedSystem::adjoint(const Eigen::Ref<const Vector>& r) const {
  if (r.size() != rows()) throw Error(ErrorKind::ShapeMismatch, "residual has wrong length");
  Vector out(cols());
  kernels::parallel::augmented_adjoint(layout(), r, out);
  return out;
}

Matrix AugmentedSystem::gram() const {
  // Row blocks v, w share the root block plus every common path edge, so
  // (M M^T)_{vw} = (1 + |path(v) & path(w)|) A_v A_w^T.
  Matrix g(rows(), rows());
  std::map<std::pair<int, int>, Matrix> products;
  for (NodeId v = 1; v <= n_; ++v) {
    for (NodeId w = 1; w <= v; ++w) {
      int shared = 1;
      for (EdgeId e = 1; e < n_; ++e) shared += (block_nonzero(v, e) && block_nonzero(w, e)) ? 1 : 0;
      const std::pair key{design_index_[static_cast<std::size_t>(v - 1)], design_index_[static_cast<std::size_t>(w - 1)]};
      auto it = products.find(key);
      if (it == products.end())
        it = products.emplace(key, design(v) * design(w).transpose()).first;
      g.block(row_offset(v), row_offset(w), row_count(v), row_count(w)) = static_cast<double>(shared) * it->second;
      if (v != w)
        g.block(row_offset(w), row_offset(v), row_count(w), row_count(v)) =
            static_cast<double>(shared) * it->second.transpose();
    }
  }
  return g;
}

Matrix AugmentedSystem::dense() const {
  Matrix a = Matrix::Zero(rows(), cols());
  for (NodeId v = 1; v <= n_; ++v) {
    const Matrix& av = design(v);
    a.block(row_offset(v), 0, row_count(v), d_) = av;
    for (EdgeId e = 1; e < n_; ++e)
      if (block_nonzero(v, e)) a.block(row_offset(v), static_cast<Eigen::Index>(e) * d_, row_count(v), d_) = av;
  }
  return a;
}

Vector stack_ensemble(const SignalEnsemble& ens) {
  const auto d = static_cast<Eigen::Index>(ens.d);
  Vector z(d * static_cast<Eigen::Index>(ens.diffs.size() + 1));
  z.head(d) = ens.root_signal;
  for (std::size_t e = 0; e < ens.diffs.size(); ++e) z.segment(static_cast<Eigen::Index>(e + 1) * d, d) = ens.diffs[e];
  return z;
}

AugmentedSupport augmented_support(const SignalEnsemble& ens) {
  AugmentedSupport s;
  s.indices = ens.root_support;
  for (std::size_t e = 0; e < ens.diff_supports.size(); ++e)
    for (int j : ens.diff_supports[e]) s.indices.push_back(static_cast<int>(e + 1) * ens.d + j);
  return s;
}

std::vector<Vector> expand_solution(const Graph& g, const Eigen::Ref<const Vector>& stacked) {
  const int n = g.num_nodes();
  if (stacked.size() % n != 0) throw Error(ErrorKind::ShapeMismatch, "stacked length not divisible by n");
  const Eigen::Index d = stacked.size() / n;
  std::vector<Vector> out(static_cast<std::size_t>(n));
  out[0] = stacked.head(d);
  for (NodeId v : g.bfs_order()) {
    if (v == 1) continue;
    out[static_cast<std::size_t>(v - 1)] =
        out[static_cast<std::size_t>(g.parent(v) - 1)] + stacked.segment(static_cast<Eigen::Index>(g.parent_edge(v)) * d, d);
  }
  return out;
}

Vector stack_node_signals(const Graph& g, const std::vector<Vector>& nodes) {
  const int n = g.num_nodes();
  if (static_cast<int>(nodes.size()) != n) throw Error(ErrorKind::ShapeMismatch, "need one vector per node");
  const Eigen::Index d = nodes.front().size();
  Vector z(d * n);
  z.head(d) = nodes.front();
  for (EdgeId e = 1; e < n; ++e)
    z.segment(static_cast<Eigen::Index>(e) * d, d) =
        nodes[static_cast<std::size_t>(g.child_of(e) - 1)] - nodes[static_cast<std::size_t>(g.parent_of(e) - 1)];
  return z;
}

}  // namespace tvp
