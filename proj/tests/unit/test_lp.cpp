#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvpursuit/kernels.hpp"
#include "tvpursuit/lp.hpp"
#include "tvpursuit/rng.hpp"

#include <Eigen/LU>

#include <limits>
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

// Minimum over all basic feasible solutions, by enumerating every column subset
// of size m. Valid when the LP is bounded and A has full row rank.
double vertex_enumeration_min(const Matrix& a, const Vector& b, const Vector& c) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> cols(static_cast<std::size_t>(m));
  for (std::uint64_t rank = 0; rank < kernels::binomial(n, m); ++rank) {
    kernels::unrank_combination(rank, n, m, cols);
    Matrix basis(m, m);
    for (int j = 0; j < m; ++j) basis.col(j) = a.col(cols[static_cast<std::size_t>(j)]);
    Eigen::FullPivLU<Matrix> lu(basis);
    if (lu.rank() < m) continue;
    const Vector xb = lu.solve(b);
    if (xb.minCoeff() < -1e-10) continue;
    double obj = 0.0;
    for (int j = 0; j < m; ++j) obj += c[cols[static_cast<std::size_t>(j)]] * xb[j];
    best = std::min(best, obj);
  }
  return best;
}

void check_certificate(const LpProblem& p, const LpResult& r) {
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK((p.a_eq * r.x - p.b).norm() <= 1e-9 * (1.0 + p.b.norm()));
  const Vector reduced = p.c - p.a_eq.transpose() * r.dual;
  for (Eigen::Index j = 0; j < p.c.size(); ++j) {
    const bool is_free = !p.free.empty() && p.free[static_cast<std::size_t>(j)];
    if (is_free) {
      CHECK(std::abs(reduced[j]) <= 1e-8);
    } else {
      CHECK(r.x[j] >= -1e-12);
      CHECK(reduced[j] >= -1e-8);
      CHECK(std::abs(reduced[j] * r.x[j]) <= 1e-8);  // complementary slackness
    }
  }
  CHECK(r.dual.dot(p.b) == doctest::Approx(r.objective).epsilon(1e-9));
}

}  // namespace

TEST_CASE("trivial programs") {
  LpProblem p{Vector::Ones(1), Matrix::Constant(1, 1, 1.0), Vector::Constant(1, 3.0), {}};
  const auto r = solve_lp(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.x[0] == doctest::Approx(3.0));

  LpProblem infeasible{Vector::Ones(1), Matrix::Ones(2, 1), Vector(2), {}};
  infeasible.b << 1.0, 2.0;
  CHECK(solve_lp(infeasible).status == LpStatus::Infeasible);

  // min -x s.t. x - y = 0 is unbounded.
  LpProblem unbounded{Vector(2), Matrix(1, 2), Vector::Zero(1), {}};
  unbounded.c << -1.0, 0.0;
  unbounded.a_eq << 1.0, -1.0;
  CHECK(solve_lp(unbounded).status == LpStatus::Unbounded);
}

TEST_CASE("basis pursuit as LP on the identity") {
  // min 1^T (p + q) s.t. [I, -I](p; q) = (0, 2, 0).
  LpProblem p;
  p.a_eq.resize(3, 6);
  p.a_eq << Matrix::Identity(3, 3), -Matrix::Identity(3, 3);
  p.b = Vector::Zero(3);
  p.b[1] = 2.0;
  p.c = Vector::Ones(6);
  const auto r = solve_lp(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK(r.objective == doctest::Approx(2.0));
  check_certificate(p, r);

  // Negative right-hand side exercises row flipping.
  p.b[1] = -2.0;
  const auto neg = solve_lp(p);
  CHECK(neg.objective == doctest::Approx(2.0));
  check_certificate(p, neg);
}

TEST_CASE("free variables") {
  // min x0 + 2 x1 s.t. x0 - x2 = -1, x1 + x2 = 3, x0 free.
  LpProblem p;
  p.a_eq.resize(2, 3);
  p.a_eq << 1, 0, -1, 0, 1, 1;
  p.b.resize(2);
  p.b << -1, 3;
  p.c.resize(3);
  p.c << 1, 2, 0;
  p.free = {true, false, false};
  const auto r = solve_lp(p);
  REQUIRE(r.status == LpStatus::Optimal);
  // x2 = 3 - x1, x0 = x2 - 1 = 2 - x1, cost 2 + x1 -> x1 = 0.
  CHECK(r.objective == doctest::Approx(2.0));
  check_certificate(p, r);
}

TEST_CASE("random bounded programs match vertex enumeration") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const int m = 3 + static_cast<int>(seed % 3);
    const int n = 9;
    LpProblem p;
    p.a_eq = random_matrix(m, n, seed);
    // Feasible by construction; positive costs keep it bounded.
    const Vector x0 = random_matrix(n, 1, seed + 100).cwiseAbs();
    p.b = p.a_eq * x0;
    p.c = random_matrix(n, 1, seed + 200).cwiseAbs();
    for (bool parallel : {true, false}) {
      LpOptions opts;
      opts.parallel = parallel;
      const auto r = solve_lp(p, opts);
      check_certificate(p, r);
      CHECK(r.objective == doctest::Approx(vertex_enumeration_min(p.a_eq, p.b, p.c)).epsilon(1e-8));
    }
  }
}

TEST_CASE("redundant rows and degenerate programs") {
  LpProblem p;
  Matrix base = random_matrix(3, 8, 42);
  p.a_eq.resize(4, 8);
  p.a_eq << base, base.row(0) + base.row(1);
  const Vector x0 = (Vector(8) << 1, 0, 0, 2, 0, 0, 0, 0).finished();
  p.b = p.a_eq * x0;
  p.c = Vector::Ones(8);
  const auto r = solve_lp(p);
  REQUIRE(r.status == LpStatus::Optimal);
  CHECK((p.a_eq * r.x - p.b).norm() <= 1e-9);
  CHECK(r.objective == doctest::Approx(vertex_enumeration_min(base, base * x0, p.c)).epsilon(1e-8));

  // Highly degenerate: many zero right-hand sides with a forced Bland phase.
  LpProblem d;
  d.a_eq = random_matrix(6, 14, 7);
  d.b = Vector::Zero(6);
  d.b[0] = 1.0;
  d.a_eq.row(0) = d.a_eq.row(0).cwiseAbs();
  d.c = random_matrix(14, 1, 8).cwiseAbs();
  LpOptions opts;
  opts.degenerate_switch = 1;
  const auto rd = solve_lp(d, opts);
  if (rd.status == LpStatus::Optimal) {
    check_certificate(d, rd);
    CHECK(rd.objective == doctest::Approx(vertex_enumeration_min(d.a_eq, d.b, d.c)).epsilon(1e-8));
  } else {
    CHECK(rd.status == LpStatus::Infeasible);
    CHECK(vertex_enumeration_min(d.a_eq, d.b, d.c) == std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("shape errors") {
  LpProblem p{Vector::Ones(2), Matrix::Ones(1, 3), Vector::Ones(1), {}};
  CHECK_THROWS_AS(solve_lp(p), Error);
}
