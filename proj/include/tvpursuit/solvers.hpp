#pragma once

#include "tvpursuit/common.hpp"
#include "tvpursuit/graph.hpp"
#include "tvpursuit/optim.hpp"
#include "tvpursuit/problem_gen.hpp"

#include <string>
#include <vector>

namespace tvp {

/// A node counts as recovered when ||x_hat - x*|| / ||x*|| <= this.
inline constexpr double kRecoveryThreshold = 1e-3;

struct SolveResult {
  std::string method;
  std::vector<Vector> nodes;  // x_hat_v, nodes[v - 1]
  Vector stacked;             // (x_hat_1, Delta_hat_1, ...) over the solver's graph; empty if not applicable
  double objective = 0.0;
  double residual = 0.0;      // ||stacked A x_hat - y||_2
  int iterations = 0;
  double seconds = 0.0;
  SolveInfo info;
  /// ADMM-backed solves: a dual certificate proved optimality.
  bool certified = false;
  /// Solver-side health flags per node (false when a subproblem failed or an
  /// ancestor's failure propagated).
  std::vector<bool> node_ok;
  /// Filled by evaluate_recovery.
  std::vector<bool> recovered;

  bool all_recovered() const;
};

double relative_error(const Vector& estimate, const Vector& truth);
void evaluate_recovery(SolveResult& r, const std::vector<Vector>& truth, double threshold = kRecoveryThreshold);
/// sum_v ||x_hat_v - x*_v||_1
double l1_error(const SolveResult& r, const std::vector<Vector>& truth);

/// min ||x_1||_1 + sum_e ||Delta_e||_1 over the augmented system built on g_tilde.
SolveResult tvbp(const Graph& g_tilde, const DesignSet& designs, const MeasurementSet& meas,
                 BpBackend backend = BpBackend::Lp, const AdmmConfig& cfg = {});

/// Same objective with sum_v ||A_v x_v - y_v||^2 <= eta^2.
SolveResult tvbpd(const Graph& g_tilde, const DesignSet& designs, const MeasurementSet& meas, double eta,
                  const AdmmConfig& cfg = {});

SolveResult independent_bp(const DesignSet& designs, const MeasurementSet& meas, BpBackend backend = BpBackend::Lp);
SolveResult independent_bpdn(const DesignSet& designs, const MeasurementSet& meas, double eta_per_node,
                             const AdmmConfig& cfg = {});

/// Root by basis pursuit, then each edge difference given the reconstructed
/// parent, depth-first from the root.
SolveResult stepwise_bp(const Graph& g, const DesignSet& designs, const MeasurementSet& meas,
                        BpBackend backend = BpBackend::Lp);
/// The recursion below a supplied root estimate. A child is flagged when its
/// difference problem is infeasible or its solution has more than N_v / 2
/// nonzeros (beyond the spark bound, so not identifiable as the sparsest one);
/// flags propagate to descendants.
SolveResult stepwise_from_root(const Graph& g, const DesignSet& designs, const MeasurementSet& meas,
                               const Vector& root_estimate, BpBackend backend = BpBackend::Lp);

struct GroupLassoOptions {
  int max_iters = 1000;
  double tol = 1e-10;  // relative objective change for early exit
  int power_iters = 50;
};

/// min sum_v ||y_v - A_v x_v||^2 + lambda sum_j ||(x_1j, ..., x_nj)||_2 by FISTA
/// with restart on objective increase; returns the best iterate.
SolveResult group_lasso(const DesignSet& designs, const MeasurementSet& meas, double lambda,
                        const GroupLassoOptions& opts = {}, const Matrix* warm_start = nullptr);
double group_lasso_objective(const DesignSet& designs, const MeasurementSet& meas, const Matrix& x, double lambda);

struct GroupLassoSweep {
  SolveResult best;
  double best_lambda = 0.0;
  std::vector<double> lambdas;
  std::vector<double> l1_errors;
};

/// Log-spaced grid, warm-started from large to small lambda; keeps the lambda
/// with the smallest l1 error against the truth.
std::vector<double> log_grid(double lo, double hi, int points);
GroupLassoSweep group_lasso_best(const DesignSet& designs, const MeasurementSet& meas,
                                 const std::vector<Vector>& truth, const std::vector<double>& lambdas,
                                 const GroupLassoOptions& opts = {});

/// Measurements on a rows x cols pixel grid, row-major.
struct PixelGrid {
  int rows = 0;
  int cols = 0;
  std::vector<Vector> y;

  const Vector& at(int r, int c) const { return y.at(static_cast<std::size_t>(r * cols + c)); }
};

struct TiledResult {
  std::vector<Vector> coefficients;  // row-major per pixel
  int tiles = 0;
  std::vector<std::string> tile_errors;  // "tile (r,c): message"
  std::vector<bool> pixel_ok;
};

/// Split into 2x2 tiles (odd edges padded by duplicating the last row/column),
/// solve each tile as TVBPD over a star rooted at its top-left pixel with node
/// order TL, TR, BL, BR. Tiles are independent; failures are isolated.
TiledResult tiled_tvbpd(const PixelGrid& grid, const Matrix& design, double eta_per_tile, const AdmmConfig& cfg = {});

}  // namespace tvp
