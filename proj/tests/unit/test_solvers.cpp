#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tvpursuit/reformulation.hpp"
#include "tvpursuit/rng.hpp"
#include "tvpursuit/solvers.hpp"

#include <cmath>

using namespace tvp;

namespace {

struct Instance {
  Graph g;
  DesignSet designs;
  SignalEnsemble ens;
  MeasurementSet meas;
  std::vector<Vector> truth;
};

Instance make_instance(const Graph& g, int d, int s, int sp, int n1, int nv, std::uint64_t seed,
                       double noise = 0.0, bool shared = false, SignalScheme scheme = SignalScheme::DisjointPm1) {
  Instance in{g, gen_designs(g.num_nodes(), d, n1, nv, shared, Rng::derive(seed, 1)),
              gen_signals(g, d, s, sp, scheme, Rng::derive(seed, 2)), {}, {}};
  in.meas = measure(g, in.designs, in.ens, noise, Rng::derive(seed, 3));
  in.truth = in.ens.node_signals(g);
  return in;
}

}  // namespace

TEST_CASE("tvbp on a single node is basis pursuit") {
  const auto in = make_instance(make_path(1), 40, 4, 0, 20, 20, 1);
  const auto r = tvbp(in.g, in.designs, in.meas);
  const auto bp = basis_pursuit(in.designs.matrix(1), in.meas.y(1), BpBackend::Lp);
  CHECK((r.nodes[0] - bp.x).norm() <= 1e-10);
}

TEST_CASE("tvbp with zero differences recovers far below independent needs") {
  // s' = 0: every node shares x*, so the TV terms vanish at the truth.
  const auto in = make_instance(make_path(4), 64, 8, 0, 40, 6, 2);
  auto r = tvbp(in.g, in.designs, in.meas);
  evaluate_recovery(r, in.truth);
  CHECK(r.all_recovered());
  for (EdgeId e = 1; e <= 3; ++e) CHECK(r.stacked.segment(e * 64, 64).norm() <= 1e-8);
}

TEST_CASE("tvbp objective ordering and expand invariant") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto in = make_instance(make_balanced_tree(2, 1), 40, 4, 2, 28, 14, 10 + seed);
    auto r = tvbp(in.g, in.designs, in.meas);
    evaluate_recovery(r, in.truth);
    const double truth_objective = stack_ensemble(in.ens).lpNorm<1>();
    CHECK(r.objective <= truth_objective + 1e-9);
    if (r.all_recovered()) CHECK(r.objective == doctest::Approx(truth_objective).epsilon(1e-7));
    const auto expanded = expand_solution(in.g, r.stacked);
    for (std::size_t v = 0; v < expanded.size(); ++v) CHECK((expanded[v] - r.nodes[v]).norm() <= 1e-12);
    CHECK(r.residual <= 1e-8 * (1.0 + AugmentedSystem(in.g, in.designs, in.meas).y().norm()));
  }
}

TEST_CASE("tvbp recovers the path n=4 instance at N_v = 60") {
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = make_instance(make_path(4), 128, 12, 4, 80, 60, 100 + seed);
    auto r = tvbp(in.g, in.designs, in.meas);
    evaluate_recovery(r, in.truth);
    recovered += r.all_recovered() ? 1 : 0;
  }
  CHECK(recovered >= 18);
}

TEST_CASE("tvbp over a star still recovers a path-generated ensemble") {
  const Graph path = make_path(3);
  const auto in = make_instance(path, 64, 4, 2, 40, 30, 7);
  auto r = tvbp(make_star(3), in.designs, in.meas);
  evaluate_recovery(r, in.truth);
  CHECK(r.all_recovered());
}

TEST_CASE("independent_bp") {
  // Full-rank square designs: unique solution.
  const auto full = make_instance(make_path(3), 20, 3, 2, 20, 20, 3);
  auto r = independent_bp(full.designs, full.meas);
  evaluate_recovery(r, full.truth);
  CHECK(r.all_recovered());

  auto zero = full;
  for (auto& y : zero.meas.responses) y.setZero();
  for (const auto& x : independent_bp(zero.designs, zero.meas).nodes) CHECK(x.norm() <= 1e-12);

  // Farthest node of the path n=4 instance with 40 samples: 24 nonzeros is far
  // beyond what 40 Gaussian measurements certify.
  int far_recovered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto in = make_instance(make_path(4), 128, 12, 4, 80, 40, 200 + seed);
    auto res = independent_bp(in.designs, in.meas);
    evaluate_recovery(res, in.truth);
    far_recovered += res.recovered[3] ? 1 : 0;
  }
  CHECK(far_recovered <= 4);
}

TEST_CASE("stepwise_bp") {
  const auto flat = make_instance(make_path(3), 64, 4, 0, 40, 20, 4);
  auto r0 = stepwise_bp(flat.g, flat.designs, flat.meas);
  for (const auto& x : r0.nodes) CHECK((x - r0.nodes[0]).norm() <= 1e-9);
  for (EdgeId e = 1; e <= 2; ++e) CHECK(r0.stacked.segment(e * 64, 64).norm() <= 1e-9);

  // Root at 2 s log(e d / s), each edge at 2 s' log(e d / s').
  const int d = 128;
  const int nv = static_cast<int>(std::lround(2.0 * 4 * std::log(std::exp(1.0) * d / 4.0)));
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto in = make_instance(make_path(3), d, 12, 4, 80, nv, 300 + seed);
    auto r = stepwise_bp(in.g, in.designs, in.meas);
    evaluate_recovery(r, in.truth);
    if (r.all_recovered()) {
      ++ok;
      CHECK(r.residual <= 1e-8);
    }
  }
  CHECK(ok >= 8);

  // A corrupted root estimate propagates into flagged children.
  const auto in = make_instance(make_path(3), d, 12, 4, 80, nv, 400);
  Vector corrupted = in.truth[0];
  Rng rng(5);
  for (Eigen::Index i = 0; i < d; ++i) corrupted[i] += 0.5 * rng.normal();
  const auto bad = stepwise_from_root(in.g, in.designs, in.meas, corrupted);
  CHECK_FALSE(bad.node_ok[0]);
  CHECK_FALSE(bad.node_ok[1]);
  CHECK_FALSE(bad.node_ok[2]);
  CHECK_FALSE(bad.info.converged);
}

TEST_CASE("tvbpd") {
  const auto in = make_instance(make_path(3), 64, 4, 2, 30, 20, 5, 0.01);
  const auto huge = tvbpd(in.g, in.designs, in.meas, 1e6);
  for (const auto& x : huge.nodes) CHECK(x.isZero(0.0));

  const auto clean = make_instance(make_path(3), 64, 4, 2, 30, 20, 6);
  const auto a = tvbpd(clean.g, clean.designs, clean.meas, 0.0);
  const auto b = tvbp(clean.g, clean.designs, clean.meas);
  for (std::size_t v = 0; v < 3; ++v) CHECK((a.nodes[v] - b.nodes[v]).lpNorm<Eigen::Infinity>() <= 1e-4);

  const double eta = in.meas.noise_budget;
  const auto noisy = tvbpd(in.g, in.designs, in.meas, eta);
  CHECK(noisy.residual <= eta * (1.0 + 1e-6));
}

TEST_CASE("group_lasso") {
  // lambda = 0 with full-rank square designs: per-node least squares.
  const auto in = make_instance(make_path(2), 12, 3, 1, 16, 16, 7, 0.05);
  GroupLassoOptions opts;
  opts.max_iters = 20000;
  opts.tol = 1e-15;
  const auto ls = group_lasso(in.designs, in.meas, 0.0, opts);
  for (NodeId v = 1; v <= 2; ++v) {
    const Vector ref = in.designs.matrix(v).colPivHouseholderQr().solve(in.meas.y(v));
    CHECK((ls.nodes[static_cast<std::size_t>(v - 1)] - ref).norm() <= 1e-6);
  }

  // Above the critical lambda every group is zero.
  const auto wide = make_instance(make_path(3), 40, 4, 2, 20, 20, 8, 0.01);
  double critical = 0.0;
  for (Eigen::Index j = 0; j < 40; ++j) {
    double sq = 0.0;
    for (NodeId v = 1; v <= 3; ++v) {
      const double g = 2.0 * wide.designs.matrix(v).col(j).dot(wide.meas.y(v));
      sq += g * g;
    }
    critical = std::max(critical, std::sqrt(sq));
  }
  const auto zero = group_lasso(wide.designs, wide.meas, 2.0 * critical);
  for (const auto& x : zero.nodes) CHECK(x.isZero(0.0));

  // Best-iterate objective never exceeds the starting objective.
  const double lam = 0.05;
  const auto r = group_lasso(wide.designs, wide.meas, lam);
  Matrix start = Matrix::Zero(3, 40);
  CHECK(r.objective <= group_lasso_objective(wide.designs, wide.meas, start, lam));
  Matrix x(3, 40);
  for (int v = 0; v < 3; ++v) x.row(v) = r.nodes[static_cast<std::size_t>(v)].transpose();
  CHECK(group_lasso_objective(wide.designs, wide.meas, x, lam) == doctest::Approx(r.objective));

  const auto grid = log_grid(1e-6, 1e-2, 9);
  CHECK(grid.size() == 9);
  CHECK(grid.front() == doctest::Approx(1e-6));
  CHECK(grid[4] == doctest::Approx(1e-4));
  const auto sweep = group_lasso_best(wide.designs, wide.meas, wide.truth, grid);
  for (double e : sweep.l1_errors) CHECK(l1_error(sweep.best, wide.truth) <= e + 1e-12);
}

TEST_CASE("tiled_tvbpd") {
  const int bands = 30;
  const int d = 60;
  const Matrix lib = gen_design(bands, d, 9);

  // Constant image: every tile recovers the same coefficients, TV terms vanish.
  Vector x = Vector::Zero(d);
  x[3] = 0.7;
  x[17] = 1.2;
  x[40] = 0.4;
  PixelGrid grid{4, 4, std::vector<Vector>(16, lib * x)};
  const auto flat = tiled_tvbpd(grid, lib, 1e-6);
  CHECK(flat.tiles == 4);
  CHECK(flat.tile_errors.empty());
  for (const auto& c : flat.coefficients) CHECK((c - flat.coefficients[0]).lpNorm<1>() <= 1e-5);

  // 2x2 grid is a single tvbpd call over the TL-rooted star.
  PixelGrid small{2, 2, {}};
  Rng rng(3);
  std::vector<Vector> truth;
  for (int p = 0; p < 4; ++p) {
    Vector xp = x;
    if (p > 0) xp[static_cast<Eigen::Index>(20 + p)] = 0.5;
    truth.push_back(xp);
    Vector noise(bands);
    for (Eigen::Index i = 0; i < bands; ++i) noise[i] = 0.01 * rng.normal();
    small.y.push_back(lib * xp + noise);
  }
  const double eta = std::sqrt(4.0 * bands) * 0.01;
  const auto tiled = tiled_tvbpd(small, lib, eta);
  DesignSet ds;
  ds.unique = {lib};
  ds.index = {0, 0, 0, 0};
  MeasurementSet meas;
  meas.responses = small.y;
  const auto direct = tvbpd(make_star(4), ds, meas, eta);
  for (std::size_t p = 0; p < 4; ++p) CHECK((tiled.coefficients[p] - direct.nodes[p]).norm() == 0.0);

  // Odd grid dimensions are padded by duplication.
  PixelGrid odd{3, 3, std::vector<Vector>(9, lib * x)};
  const auto padded = tiled_tvbpd(odd, lib, 1e-6);
  CHECK(padded.tiles == 4);
  CHECK(padded.coefficients.size() == 9);
  for (const auto& c : padded.coefficients) CHECK((c - x).lpNorm<1>() <= 1e-3);
}
