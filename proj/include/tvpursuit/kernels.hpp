#pragma once

// Hot loops shared by the solvers. Each kernel has a serial reference
// implementation and an OpenMP implementation; both produce bitwise-identical
// results (no reductions are split across threads).

#include "tvpursuit/common.hpp"

#include <cstdint>
#include <span>

namespace tvp::kernels {

/// Non-owning view of the augmented block pattern: row block v is
/// A_v [I | H_v1 ... H_v,n-1] with H_ve = I exactly when edge e lies on the
/// root path of node v.
struct BlockLayout {
  int d = 0;
  int num_nodes = 0;
  std::span<const Matrix> unique;
  std::span<const int> design_index;       // node v-1 -> unique
  std::span<const Eigen::Index> row_offset;  // size num_nodes + 1
  std::span<const unsigned char> on_path;  // (v-1)*(n-1) + (e-1)

  const Matrix& design(int node0) const { return unique[static_cast<std::size_t>(design_index[static_cast<std::size_t>(node0)])]; }
  bool edge_on_path(int node0, int edge0) const {
    return on_path[static_cast<std::size_t>(node0) * static_cast<std::size_t>(num_nodes - 1) +
                   static_cast<std::size_t>(edge0)] != 0;
  }
};

struct RipScan {
  double delta = 0.0;
  std::uint64_t worst_rank = 0;  // lexicographic rank of the worst support
};

/// Lexicographic unranking of k-subsets of {0..d-1}.
void unrank_combination(std::uint64_t rank, int d, int k, std::span<int> out);
std::uint64_t binomial(int d, int k);  // saturates at UINT64_MAX

namespace serial {
void augmented_apply(const BlockLayout& layout, const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out);
void augmented_adjoint(const BlockLayout& layout, const Eigen::Ref<const Vector>& r, Eigen::Ref<Vector> out);
void tableau_pivot(RowMatrix& tableau, Eigen::Index row, Eigen::Index col);
RipScan rip_scan(const Matrix& a, int k);
}  // namespace serial

namespace parallel {
void augmented_apply(const BlockLayout& layout, const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out);
void augmented_adjoint(const BlockLayout& layout, const Eigen::Ref<const Vector>& r, Eigen::Ref<Vector> out);
void tableau_pivot(RowMatrix& tableau, Eigen::Index row, Eigen::Index col);
RipScan rip_scan(const Matrix& a, int k);
}  // namespace parallel

}  // namespace tvp::kernels
