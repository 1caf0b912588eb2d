#include "kernels_detail.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tvp::kernels::parallel {

void augmented_apply(const BlockLayout& layout, const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) {
  const int d = layout.d;
  const int n = layout.num_nodes;
#pragma omp parallel
  {
    Vector node(d);
#pragma omp for schedule(static)
    for (int v = 0; v < n; ++v) {
      node = z.head(d);
      for (int e = 0; e + 1 < n; ++e)
        if (layout.edge_on_path(v, e)) node += z.segment(static_cast<Eigen::Index>(e + 1) * d, d);
      const Matrix& a = layout.design(v);
      out.segment(layout.row_offset[static_cast<std::size_t>(v)], a.rows()).noalias() = a * node;
    }
  }
}

void augmented_adjoint(const BlockLayout& layout, const Eigen::Ref<const Vector>& r, Eigen::Ref<Vector> out) {
  const int d = layout.d;
  const int n = layout.num_nodes;
  std::vector<Vector> per_node(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int v = 0; v < n; ++v) {
    const Matrix& a = layout.design(v);
    per_node[static_cast<std::size_t>(v)].noalias() =
        a.transpose() * r.segment(layout.row_offset[static_cast<std::size_t>(v)], a.rows());
  }
  // Column blocks are independent; each sums its nodes in ascending order.
#pragma omp parallel for schedule(static)
  for (int block = 0; block < n; ++block) {
    auto out_block = out.segment(static_cast<Eigen::Index>(block) * d, d);
    out_block.setZero();
    for (int v = 0; v < n; ++v)
      if (block == 0 || layout.edge_on_path(v, block - 1)) out_block += per_node[static_cast<std::size_t>(v)];
  }
}

void tableau_pivot(RowMatrix& t, Eigen::Index row, Eigen::Index col) {
  t.row(row) /= t(row, col);
  const Eigen::Index rows = t.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (i == row) continue;
    const double f = t(i, col);
    if (f == 0.0) continue;
    t.row(i) -= f * t.row(row);
  }
}

RipScan rip_scan(const Matrix& a, int k) {
  const int d = static_cast<int>(a.cols());
  const std::uint64_t total = binomial(d, k);
  const std::uint64_t chunks = std::min<std::uint64_t>(total, 1024);
  std::vector<RipScan> partial(static_cast<std::size_t>(chunks),
                               RipScan{-std::numeric_limits<double>::infinity(), 0});
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
    const auto uc = static_cast<std::uint64_t>(c);
    detail::scan_range(a, k, total * uc / chunks, total * (uc + 1) / chunks, partial[uc]);
  }
  RipScan best{-std::numeric_limits<double>::infinity(), 0};
  for (const auto& p : partial)
    if (p.delta > best.delta) best = p;
  return best;
}

}  // namespace tvp::kernels::parallel
