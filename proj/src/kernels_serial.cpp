#include "tvpursuit/kernels.hpp"

#include "kernels_detail.hpp"

#include <Eigen/Eigenvalues>

#include <limits>
#include <vector>

namespace tvp::kernels {

std::uint64_t binomial(int d, int k) {
  if (k < 0 || k > d) return 0;
  k = std::min(k, d - k);
  unsigned __int128 acc = 1;
  for (int i = 1; i <= k; ++i) {
    acc = acc * static_cast<unsigned>(d - k + i) / static_cast<unsigned>(i);
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

void unrank_combination(std::uint64_t rank, int d, int k, std::span<int> out) {
  int next = 0;
  for (int slot = 0; slot < k; ++slot) {
    for (int c = next;; ++c) {
      const std::uint64_t below = binomial(d - c - 1, k - slot - 1);
      if (rank < below) {
        out[static_cast<std::size_t>(slot)] = c;
        next = c + 1;
        break;
      }
      rank -= below;
    }
  }
}

namespace detail {

bool next_combination(std::span<int> comb, int d) {
  const int k = static_cast<int>(comb.size());
  int i = k - 1;
  while (i >= 0 && comb[static_cast<std::size_t>(i)] == d - k + i) --i;
  if (i < 0) return false;
  ++comb[static_cast<std::size_t>(i)];
  for (int j = i + 1; j < k; ++j) comb[static_cast<std::size_t>(j)] = comb[static_cast<std::size_t>(j - 1)] + 1;
  return true;
}

double support_delta(const Matrix& a, std::span<const int> support, Matrix& gram_buf) {
  const auto k = static_cast<Eigen::Index>(support.size());
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double g = a.col(support[static_cast<std::size_t>(i)]).dot(a.col(support[static_cast<std::size_t>(j)]));
      gram_buf(i, j) = g;
      gram_buf(j, i) = g;
    }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_buf.topLeftCorner(k, k), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  return std::max(ev[k - 1] - 1.0, 1.0 - ev[0]);
}

void scan_range(const Matrix& a, int k, std::uint64_t first, std::uint64_t last, RipScan& best) {
  if (first >= last) return;
  const int d = static_cast<int>(a.cols());
  std::vector<int> comb(static_cast<std::size_t>(k));
  unrank_combination(first, d, k, comb);
  Matrix gram(k, k);
  for (std::uint64_t rank = first; rank < last; ++rank) {
    const double delta = support_delta(a, comb, gram);
    if (delta > best.delta) best = {delta, rank};
    next_combination(comb, d);
  }
}

}  // namespace detail

namespace serial {

void augmented_apply(const BlockLayout& layout, const Eigen::Ref<const Vector>& z, Eigen::Ref<Vector> out) {
  const int d = layout.d;
  Vector node(d);
  for (int v = 0; v < layout.num_nodes; ++v) {
    node = z.head(d);
    for (int e = 0; e + 1 < layout.num_nodes; ++e)
      if (layout.edge_on_path(v, e)) node += z.segment(static_cast<Eigen::Index>(e + 1) * d, d);
    const Matrix& a = layout.design(v);
    out.segment(layout.row_offset[static_cast<std::size_t>(v)], a.rows()).noalias() = a * node;
  }
}

void augmented_adjoint(const BlockLayout& layout, const Eigen::Ref<const Vector>& r, Eigen::Ref<Vector> out) {
  const int d = layout.d;
  const int n = layout.num_nodes;
  std::vector<Vector> per_node(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    const Matrix& a = layout.design(v);
    per_node[static_cast<std::size_t>(v)].noalias() =
        a.transpose() * r.segment(layout.row_offset[static_cast<std::size_t>(v)], a.rows());
  }
  out.setZero();
  for (int v = 0; v < n; ++v) out.head(d) += per_node[static_cast<std::size_t>(v)];
  for (int e = 0; e + 1 < n; ++e) {
    auto block = out.segment(static_cast<Eigen::Index>(e + 1) * d, d);
    for (int v = 0; v < n; ++v)
      if (layout.edge_on_path(v, e)) block += per_node[static_cast<std::size_t>(v)];
  }
}

void tableau_pivot(RowMatrix& t, Eigen::Index row, Eigen::Index col) {
  t.row(row) /= t(row, col);
  const auto pivot_row = t.row(row);
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    if (i == row) continue;
    const double f = t(i, col);
    if (f == 0.0) continue;
    t.row(i) -= f * pivot_row;
  }
}

RipScan rip_scan(const Matrix& a, int k) {
  RipScan best{-std::numeric_limits<double>::infinity(), 0};
  detail::scan_range(a, k, 0, binomial(static_cast<int>(a.cols()), k), best);
  return best;
}

}  // namespace serial

}  // namespace tvp::kernels
