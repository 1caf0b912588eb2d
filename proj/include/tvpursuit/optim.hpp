#pragma once

#include "tvpursuit/common.hpp"
#include "tvpursuit/linear_operator.hpp"
#include "tvpursuit/lp.hpp"

#include <string>
#include <vector>

namespace tvp {

struct AdmmConfig {
  double rho = 10.0;
  int max_iters = 20000;
  double tol_abs = 1e-10;
  double tol_rel = 1e-8;
  double over_relaxation = 1.0;
  /// Residual balancing: rescale rho when primal and dual residuals drift apart
  /// by more than a factor 10. Only used by the centralized l1 engine.
  bool adaptive_rho = true;
};

struct BbConfig {
  int max_iters = 200;
  double grad_tol = 1e-10;
  /// Initial step; 0 selects 1/L with L = ||A||^2 / (2c).
  double initial_step = 0.0;
  /// Enforce monotone ascent of the dual by halving rejected steps.
  bool backtracking = false;
  /// Cached ||A||_2^2; 0 estimates it by power iteration.
  double spectral_norm_sq = 0.0;
  Vector warm_start;  // dual lambda, empty for a cold start
  /// Semismooth Newton refinements after the BB loop when it stops short of
  /// the tolerance; 0 gives plain BB.
  int newton_steps = 20;
};

struct SolveInfo {
  bool converged = false;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::string status;
};

enum class BpBackend { Lp, Admm };

const char* to_string(BpBackend b);
BpBackend parse_backend(const std::string& name);

struct L1Result {
  Vector x;
  double objective = 0.0;  // ||x||_1
  double residual = 0.0;   // ||A x - y||_2
  bool polished = false;
  /// Optimality proven: an optimal LP basis, or a dual certificate
  /// ||M^T lambda||_inf <= 1 for the ADMM backend.
  bool certified = false;
  SolveInfo info;
};

/// min ||x||_1 s.t. A x = y. The LP backend solves the split program
/// min 1^T (p + q) s.t. [A, -A](p; q) = y exactly; the ADMM backend is the
/// eta = 0 case of bpdn.
L1Result basis_pursuit(const Matrix& a, const Vector& y, BpBackend backend, double tol = 1e-8,
                       const AdmmConfig& cfg = {});
L1Result basis_pursuit(const LinearOperator& op, const Vector& y, BpBackend backend,
                       double tol = 1e-8, const AdmmConfig& cfg = {});

/// min ||x||_1 s.t. ||A x - y||_2 <= eta, by ADMM on the splitting
/// x = z (l1 term), A x - y = w (Euclidean ball of radius eta). The operator is
/// normalized to unit spectral norm first. A final support polish solves the
/// problem restricted to the recovered sign pattern in closed form.
L1Result bpdn(const LinearOperator& op, const Vector& y, double eta, const AdmmConfig& cfg = {});
L1Result bpdn(const Matrix& a, const Vector& y, double eta, const AdmmConfig& cfg = {});

Vector soft_threshold(const Vector& t, double k);

/// argmin_D ||D||_1 + (rho/2)||D||^2 - <D, t> with t = gamma + rho (zi - zj).
Vector shrink_delta(const Vector& gamma, double rho, const Vector& zi, const Vector& zj);

/// Primal minimizer of |x| + u x + c x^2, coordinate-wise.
Vector root_primal(const Vector& u, double c);

struct RootSubproblemResult {
  Vector x;
  Vector lambda;
  int iterations = 0;
  double grad_norm = 0.0;
  double dual_objective = 0.0;
  bool converged = false;
  int newton_steps = 0;
  /// Dual objective at each accepted iterate (for monotonicity audits).
  std::vector<double> dual_trace;
};

/// min ||x||_1 + nu^T x + c ||x||^2 s.t. A x = b, by Barzilai-Borwein ascent on
/// the dual  max_lambda lambda^T b + sum_i inf_x (|x_i| + u_i x_i + c x_i^2),
/// u = nu - A^T lambda.
RootSubproblemResult root_subproblem(const Matrix& a, const Vector& b, const Vector& nu, double c,
                                     const BbConfig& cfg = {});
double root_dual_objective(const Matrix& a, const Vector& b, const Vector& nu, double c, const Vector& lambda);

/// min ||x||^2 + <a_vec, x> s.t. A x = b, i.e. x = A^+ (b + A a/2) - a/2.
/// `a_pinv` may carry a cached pseudoinverse of A.
Vector least_norm_affine(const Matrix& a, const Vector& b, const Vector& a_vec, const Matrix* a_pinv = nullptr);

/// Moore-Penrose pseudoinverse by SVD, cutoff max(rows, cols) * eps * sigma_max.
Matrix pinv(const Matrix& a);

/// Column j scaled by max(0, 1 - t / ||col_j||).
Matrix group_soft_threshold(const Matrix& rows, double t);

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power iteration.
double power_iteration(const Matrix& sym, int iters, std::uint64_t seed = 1);

}  // namespace tvp
