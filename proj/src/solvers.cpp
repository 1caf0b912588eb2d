#include "tvpursuit/solvers.hpp"

#include "tvpursuit/reformulation.hpp"
#include "tvpursuit/rng.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

namespace tvp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int count_nonzeros(const Vector& x) {
  const double cut = 1e-9 * std::max(1.0, x.lpNorm<Eigen::Infinity>());
  int c = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) c += std::abs(x[i]) > cut ? 1 : 0;
  return c;
}

void check_shapes(const DesignSet& designs, const MeasurementSet& meas) {
  if (designs.num_nodes() != meas.num_nodes())
    throw Error(ErrorKind::ShapeMismatch, "designs and measurements disagree on node count");
  for (NodeId v = 1; v <= designs.num_nodes(); ++v)
    if (meas.y(v).size() != designs.rows(v))
      throw Error(ErrorKind::ShapeMismatch, "response length != design rows at node " + std::to_string(v));
}

SolveResult from_stacked(std::string method, const Graph& g, const AugmentedSystem& aug, L1Result l1) {
  SolveResult r;
  r.method = std::move(method);
  r.nodes = expand_solution(g, l1.x);
  r.objective = l1.x.lpNorm<1>();
  r.residual = (aug.apply(l1.x) - aug.y()).norm();
  r.iterations = l1.info.iterations;
  r.info = l1.info;
  r.certified = l1.certified;
  r.stacked = std::move(l1.x);
  r.node_ok.assign(static_cast<std::size_t>(g.num_nodes()), true);
  return r;
}

}  // namespace

bool SolveResult::all_recovered() const {
  return !recovered.empty() && std::all_of(recovered.begin(), recovered.end(), [](bool b) { return b; });
}

double relative_error(const Vector& estimate, const Vector& truth) {
  const double denom = truth.norm();
  const double err = (estimate - truth).norm();
  return denom > 0.0 ? err / denom : err;
}

void evaluate_recovery(SolveResult& r, const std::vector<Vector>& truth, double threshold) {
  if (truth.size() != r.nodes.size()) throw Error(ErrorKind::ShapeMismatch, "truth has wrong node count");
  r.recovered.resize(truth.size());
  for (std::size_t v = 0; v < truth.size(); ++v) r.recovered[v] = relative_error(r.nodes[v], truth[v]) <= threshold;
}

double l1_error(const SolveResult& r, const std::vector<Vector>& truth) {
  if (truth.size() != r.nodes.size()) throw Error(ErrorKind::ShapeMismatch, "truth has wrong node count");
  double total = 0.0;
  for (std::size_t v = 0; v < truth.size(); ++v) total += (r.nodes[v] - truth[v]).lpNorm<1>();
  return total;
}

SolveResult tvbp(const Graph& g_tilde, const DesignSet& designs, const MeasurementSet& meas, BpBackend backend,
                 const AdmmConfig& cfg) {
  check_shapes(designs, meas);
  const auto start = Clock::now();
  const AugmentedSystem aug(g_tilde, designs, meas);
  auto l1 = basis_pursuit(aug, aug.y(), backend, 1e-8, cfg);
  SolveResult r = from_stacked("tvbp", g_tilde, aug, std::move(l1));
  r.seconds = seconds_since(start);
  return r;
}

SolveResult tvbpd(const Graph& g_tilde, const DesignSet& designs, const MeasurementSet& meas, double eta,
                  const AdmmConfig& cfg) {
  check_shapes(designs, meas);
  const auto start = Clock::now();
  const AugmentedSystem aug(g_tilde, designs, meas);
  auto l1 = bpdn(aug, aug.y(), eta, cfg);
  SolveResult r = from_stacked("tvbpd", g_tilde, aug, std::move(l1));
  r.seconds = seconds_since(start);
  return r;
}

SolveResult independent_bp(const DesignSet& designs, const MeasurementSet& meas, BpBackend backend) {
  check_shapes(designs, meas);
  const auto start = Clock::now();
  SolveResult r;
  r.method = "independent_bp";
  r.node_ok.assign(static_cast<std::size_t>(designs.num_nodes()), true);
  double sq_residual = 0.0;
  for (NodeId v = 1; v <= designs.num_nodes(); ++v) {
    const auto sol = basis_pursuit(designs.matrix(v), meas.y(v), backend);
    r.objective += sol.objective;
    sq_residual += sol.residual * sol.residual;
    r.iterations += sol.info.iterations;
    r.nodes.push_back(sol.x);
  }
  r.residual = std::sqrt(sq_residual);
  r.info.converged = true;
  r.info.status = "optimal";
  r.seconds = seconds_since(start);
  return r;
}

SolveResult independent_bpdn(const DesignSet& designs, const MeasurementSet& meas, double eta_per_node,
                             const AdmmConfig& cfg) {
  check_shapes(designs, meas);
  const auto start = Clock::now();
  SolveResult r;
  r.method = "independent_bpdn";
  r.node_ok.assign(static_cast<std::size_t>(designs.num_nodes()), true);
  double sq_residual = 0.0;
  bool converged = true;
  for (NodeId v = 1; v <= designs.num_nodes(); ++v) {
    const auto sol = bpdn(designs.matrix(v), meas.y(v), eta_per_node, cfg);
    r.objective += sol.objective;
    sq_residual += sol.residual * sol.residual;
    r.iterations += sol.info.iterations;
    converged = converged && sol.info.converged;
    r.nodes.push_back(sol.x);
  }
  r.residual = std::sqrt(sq_residual);
  r.info.converged = converged;
  r.info.status = converged ? "converged" : "max-iters";
  r.seconds = seconds_since(start);
  return r;
}

SolveResult stepwise_from_root(const Graph& g, const DesignSet& designs, const MeasurementSet& meas,
                               const Vector& root_estimate, BpBackend backend) {
  check_shapes(designs, meas);
  if (g.num_nodes() != designs.num_nodes()) throw Error(ErrorKind::ShapeMismatch, "graph and designs disagree on n");
  const auto start = Clock::now();
  const int n = g.num_nodes();
  SolveResult r;
  r.method = "stepwise_bp";
  r.nodes.assign(static_cast<std::size_t>(n), Vector::Zero(designs.cols()));
  r.node_ok.assign(static_cast<std::size_t>(n), true);
  r.stacked = Vector::Zero(static_cast<Eigen::Index>(n) * designs.cols());
  r.nodes[0] = root_estimate;
  r.stacked.head(designs.cols()) = root_estimate;
  r.node_ok[0] = 2 * count_nonzeros(root_estimate) <= designs.rows(1);
  double sq_residual = (designs.matrix(1) * root_estimate - meas.y(1)).squaredNorm();
  for (NodeId v : g.bfs_order()) {
    if (v == 1) continue;
    const NodeId parent = g.parent(v);
    const auto vi = static_cast<std::size_t>(v - 1);
    const Vector& x_parent = r.nodes[static_cast<std::size_t>(parent - 1)];
    const Matrix& a = designs.matrix(v);
    Vector delta = Vector::Zero(designs.cols());
    bool ok = r.node_ok[static_cast<std::size_t>(parent - 1)];
    try {
      const auto sol = basis_pursuit(a, meas.y(v) - a * x_parent, backend);
      delta = sol.x;
      r.iterations += sol.info.iterations;
      if (2 * count_nonzeros(delta) > a.rows()) ok = false;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Infeasible && e.kind() != ErrorKind::Numerical) throw;
      ok = false;
    }
    r.node_ok[vi] = ok;
    r.nodes[vi] = x_parent + delta;
    r.stacked.segment(static_cast<Eigen::Index>(g.parent_edge(v)) * designs.cols(), designs.cols()) = delta;
    sq_residual += (a * r.nodes[vi] - meas.y(v)).squaredNorm();
  }
  r.objective = r.stacked.lpNorm<1>();
  r.residual = std::sqrt(sq_residual);
  r.info.converged = std::all_of(r.node_ok.begin(), r.node_ok.end(), [](bool b) { return b; });
  r.info.status = r.info.converged ? "optimal" : "flagged";
  r.seconds = seconds_since(start);
  return r;
}

SolveResult stepwise_bp(const Graph& g, const DesignSet& designs, const MeasurementSet& meas, BpBackend backend) {
  check_shapes(designs, meas);
  const auto start = Clock::now();
  const auto root = basis_pursuit(designs.matrix(1), meas.y(1), backend);
  SolveResult r = stepwise_from_root(g, designs, meas, root.x, backend);
  r.iterations += root.info.iterations;
  r.seconds = seconds_since(start);
  return r;
}

// --- group lasso --------------------------------------------------------------

double group_lasso_objective(const DesignSet& designs, const MeasurementSet& meas, const Matrix& x, double lambda) {
  double value = 0.0;
  for (NodeId v = 1; v <= designs.num_nodes(); ++v)
    value += (designs.matrix(v) * x.row(v - 1).transpose() - meas.y(v)).squaredNorm();
  return value + lambda * x.colwise().norm().sum();
}

SolveResult group_lasso(const DesignSet& designs, const MeasurementSet& meas, double lambda,
                        const GroupLassoOptions& opts, const Matrix* warm_start) {
  check_shapes(designs, meas);
  if (lambda < 0.0) throw Error(ErrorKind::InvalidSize, "lambda must be non-negative");
  const auto start = Clock::now();
  const int n = designs.num_nodes();
  const int d = designs.cols();

  // L = 2 max_v lambda_max(A_v^T A_v); power iteration per distinct matrix.
  double lmax = 0.0;
  for (std::size_t u = 0; u < designs.unique.size(); ++u) {
    const Matrix& a = designs.unique[u];
    Rng rng(Rng::derive(0x91, u));
    Vector w(d);
    for (Eigen::Index i = 0; i < d; ++i) w[i] = rng.normal();
    w.normalize();
    double est = 0.0;
    for (int it = 0; it < opts.power_iters; ++it) {
      const Vector next = a.transpose() * (a * w);
      est = next.norm();
      if (est == 0.0) break;
      w = next / est;
    }
    lmax = std::max(lmax, est);
  }
  // Power iteration approaches from below; a small margin keeps 1/L a valid step.
  const double lip = std::max(2.0 * lmax * 1.01, 1e-12);

  auto gradient = [&](const Matrix& x) {
    Matrix g(n, d);
    for (NodeId v = 1; v <= n; ++v) {
      const Matrix& a = designs.matrix(v);
      g.row(v - 1) = (2.0 * (a.transpose() * (a * x.row(v - 1).transpose() - meas.y(v)))).transpose();
    }
    return g;
  };

  Matrix x = warm_start != nullptr ? *warm_start : Matrix::Zero(n, d);
  if (x.rows() != n || x.cols() != d) throw Error(ErrorKind::ShapeMismatch, "warm start has wrong shape");
  Matrix yk = x;
  double t = 1.0;
  double f = group_lasso_objective(designs, meas, x, lambda);
  Matrix best = x;
  double f_best = f;
  int it = 0;
  int restarts = 0;
  for (; it < opts.max_iters; ++it) {
    const Matrix xn = group_soft_threshold(yk - gradient(yk) / lip, lambda / lip);
    const double fn = group_lasso_objective(designs, meas, xn, lambda);
    if (fn > f && t > 1.0) {
      // Momentum overshoot: restart from the current iterate.
      yk = x;
      t = 1.0;
      ++restarts;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    yk = xn + ((t - 1.0) / tn) * (xn - x);
    x = xn;
    t = tn;
    const bool done = std::abs(f - fn) <= opts.tol * std::max(1.0, std::abs(f));
    f = fn;
    if (f < f_best) {
      f_best = f;
      best = x;
    }
    if (done) break;
  }

  SolveResult r;
  r.method = "group_lasso";
  r.objective = f_best;
  r.iterations = it;
  r.node_ok.assign(static_cast<std::size_t>(n), true);
  double sq_residual = 0.0;
  for (NodeId v = 1; v <= n; ++v) {
    r.nodes.push_back(best.row(v - 1).transpose());
    sq_residual += (designs.matrix(v) * r.nodes.back() - meas.y(v)).squaredNorm();
  }
  r.residual = std::sqrt(sq_residual);
  r.info.converged = it < opts.max_iters;
  r.info.iterations = it;
  r.info.status = "restarts=" + std::to_string(restarts);
  r.seconds = seconds_since(start);
  return r;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw Error(ErrorKind::InvalidSize, "bad log grid");
  std::vector<double> out;
  if (points == 1) return {lo};
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < points; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
  return out;
}

GroupLassoSweep group_lasso_best(const DesignSet& designs, const MeasurementSet& meas,
                                 const std::vector<Vector>& truth, const std::vector<double>& lambdas,
                                 const GroupLassoOptions& opts) {
  if (lambdas.empty()) throw Error(ErrorKind::InvalidSize, "lambda grid is empty");
  std::vector<std::size_t> order(lambdas.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return lambdas[i] > lambdas[j]; });
  GroupLassoSweep sweep;
  sweep.lambdas = lambdas;
  sweep.l1_errors.assign(lambdas.size(), 0.0);
  Matrix warm;
  bool have_best = false;
  for (std::size_t idx : order) {
    SolveResult r = group_lasso(designs, meas, lambdas[idx], opts, warm.size() > 0 ? &warm : nullptr);
    warm.resize(designs.num_nodes(), designs.cols());
    for (NodeId v = 1; v <= designs.num_nodes(); ++v) warm.row(v - 1) = r.nodes[static_cast<std::size_t>(v - 1)].transpose();
    const double err = l1_error(r, truth);
    sweep.l1_errors[idx] = err;
    if (!have_best || err < l1_error(sweep.best, truth)) {
      sweep.best = std::move(r);
      sweep.best_lambda = lambdas[idx];
      have_best = true;
    }
  }
  return sweep;
}

// --- tiled TVBPD ----------------------------------------------------------------

TiledResult tiled_tvbpd(const PixelGrid& grid, const Matrix& design, double eta_per_tile, const AdmmConfig& cfg) {
  if (grid.rows < 1 || grid.cols < 1 || static_cast<int>(grid.y.size()) != grid.rows * grid.cols)
    throw Error(ErrorKind::ShapeMismatch, "pixel grid is inconsistent");
  for (const auto& y : grid.y)
    if (y.size() != design.rows()) throw Error(ErrorKind::ShapeMismatch, "pixel spectrum length != design rows");
  const int tile_rows = (grid.rows + 1) / 2;
  const int tile_cols = (grid.cols + 1) / 2;
  const int tiles = tile_rows * tile_cols;
  const Graph star = make_star(4);
  DesignSet ds;
  ds.unique = {design};
  ds.index = {0, 0, 0, 0};
  ds.shared_nonroot = true;

  TiledResult out;
  out.tiles = tiles;
  out.coefficients.assign(grid.y.size(), Vector::Zero(design.cols()));
  out.pixel_ok.assign(grid.y.size(), true);
  std::vector<std::string> errors(static_cast<std::size_t>(tiles));

#pragma omp parallel for schedule(dynamic)
  for (int tile = 0; tile < tiles; ++tile) {
    const int tr = tile / tile_cols;
    const int tc = tile % tile_cols;
    // TL, TR, BL, BR with duplication padding at odd edges.
    const int r0 = 2 * tr;
    const int c0 = 2 * tc;
    const int r1 = std::min(r0 + 1, grid.rows - 1);
    const int c1 = std::min(c0 + 1, grid.cols - 1);
    const std::array<std::pair<int, int>, 4> pix{{{r0, c0}, {r0, c1}, {r1, c0}, {r1, c1}}};
    MeasurementSet meas;
    for (const auto& [r, c] : pix) meas.responses.push_back(grid.at(r, c));
    try {
      const SolveResult res = tvbpd(star, ds, meas, eta_per_tile, cfg);
      for (std::size_t k = 0; k < 4; ++k) {
        const auto [r, c] = pix[k];
        // Padded duplicates map onto a pixel owned by an earlier slot.
        const bool owner = (k == 0) || (k == 1 && c != c0) || (k == 2 && r != r0) || (k == 3 && r != r0 && c != c0);
        if (owner) out.coefficients[static_cast<std::size_t>(r * grid.cols + c)] = res.nodes[k];
      }
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(tile)] = e.what();
      for (const auto& [r, c] : pix) out.pixel_ok[static_cast<std::size_t>(r * grid.cols + c)] = false;
    }
  }
  for (int tile = 0; tile < tiles; ++tile)
    if (!errors[static_cast<std::size_t>(tile)].empty())
      out.tile_errors.push_back("tile (" + std::to_string(tile / tile_cols) + "," + std::to_string(tile % tile_cols) +
                                "): " + errors[static_cast<std::size_t>(tile)]);
  return out;
}

}  // namespace tvp
