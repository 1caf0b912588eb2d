#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvpursuit/kernels.hpp"
#include "tvpursuit/reformulation.hpp"
#include "tvpursuit/rng.hpp"

#include <vector>

using namespace tvp;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

}  // namespace

TEST_CASE("serial and parallel augmented matvecs are bitwise identical") {
  const Graph t = make_balanced_tree(2, 3);
  const auto designs = gen_designs(t.num_nodes(), 30, 15, 9, false, 3);
  const AugmentedSystem aug(t, designs);
  const auto layout = aug.layout();
  const Vector z = random_matrix(aug.cols(), 1, 1);
  const Vector r = random_matrix(aug.rows(), 1, 2);
  Vector a1(aug.rows()), a2(aug.rows()), b1(aug.cols()), b2(aug.cols());
  kernels::serial::augmented_apply(layout, z, a1);
  kernels::parallel::augmented_apply(layout, z, a2);
  kernels::serial::augmented_adjoint(layout, r, b1);
  kernels::parallel::augmented_adjoint(layout, r, b2);
  CHECK((a1.array() == a2.array()).all());
  CHECK((b1.array() == b2.array()).all());
}

TEST_CASE("tableau pivot") {
  RowMatrix t = random_matrix(6, 9, 4);
  RowMatrix u = t;
  kernels::serial::tableau_pivot(t, 2, 3);
  kernels::parallel::tableau_pivot(u, 2, 3);
  CHECK((t.array() == u.array()).all());
  CHECK(t(2, 3) == doctest::Approx(1.0));
  for (Eigen::Index i = 0; i < 6; ++i)
    if (i != 2) CHECK(std::abs(t(i, 3)) <= 1e-12);
}

TEST_CASE("combination ranking") {
  CHECK(kernels::binomial(10, 3) == 120);
  CHECK(kernels::binomial(5, 7) == 0);
  CHECK(kernels::binomial(200, 100) == std::numeric_limits<std::uint64_t>::max());
  std::vector<int> c(3);
  kernels::unrank_combination(0, 6, 3, c);
  CHECK(c == std::vector<int>{0, 1, 2});
  kernels::unrank_combination(19, 6, 3, c);
  CHECK(c == std::vector<int>{3, 4, 5});
  kernels::unrank_combination(1, 6, 3, c);
  CHECK(c == std::vector<int>{0, 1, 3});
}

TEST_CASE("rip scans agree") {
  const Matrix a = random_matrix(12, 10, 5) / std::sqrt(12.0);
  for (int k = 1; k <= 4; ++k) {
    const auto s = kernels::serial::rip_scan(a, k);
    const auto p = kernels::parallel::rip_scan(a, k);
    CHECK(s.delta == p.delta);
    CHECK(s.worst_rank == p.worst_rank);
  }
}
