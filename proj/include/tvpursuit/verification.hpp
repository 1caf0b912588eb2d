#pragma once

// Exact oracles for small instances: restricted isometry constants, the
// restricted null space property, the kernel condition of the augmented
// system, and order-level sample-size thresholds.

#include "tvpursuit/common.hpp"
#include "tvpursuit/graph.hpp"
#include "tvpursuit/reformulation.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tvp {

/// Largest number of size-k supports rip_constant will enumerate.
inline constexpr std::uint64_t kRipSupportBudget = 1'000'000;
/// Largest |S| rnsp_check accepts (2^(|S|-1) linear programs).
inline constexpr int kRnspMaxSupport = 16;
/// RNSP holds only when max_ratio < 1/2 - kRnspMargin; ratios within the
/// margin of 1/2 are reported as boundary cases.
inline constexpr double kRnspMargin = 1e-9;
/// Largest dense augmented matrix (rows * cols) kernel_condition_check forms.
inline constexpr std::int64_t kDenseEntryBudget = 4'000'000;

struct RipReport {
  int k = 0;
  double delta_k = 0.0;
  std::vector<int> worst_support;  // 0-based column indices, ascending
  std::uint64_t supports = 0;      // C(d, k) supports examined
};

/// delta_k = max over |T| = k of max(lambda_max(A_T^T A_T) - 1, 1 - lambda_min(A_T^T A_T)),
/// by enumerating every support. Throws BudgetExceeded when C(d, k) exceeds
/// kRipSupportBudget.
RipReport rip_constant(const Matrix& a, int k, bool parallel = true);

struct RnspReport {
  std::vector<int> support;  // 0-based
  /// max ||x_S||_1 over kernel vectors with ||x||_1 = 1; 0 for a trivial kernel.
  double max_ratio = 0.0;
  bool holds = false;     // max_ratio < 1/2 - kRnspMargin
  bool boundary = false;  // |max_ratio - 1/2| <= kRnspMargin
  std::vector<int> worst_signs;  // sign pattern on S attaining max_ratio
  Vector witness;                // kernel vector attaining it, ||witness||_1 <= 1
  int linear_programs = 0;
};

/// Exact restricted null space check: for each sign pattern sigma on S (up to
/// a global flip) solve max sigma^T x_S s.t. A x = 0, ||x||_1 <= 1. The convex
/// objective ||x_S||_1 is maximized at one of these patterns, so the
/// enumeration is exact. Throws BudgetExceeded for |S| > kRnspMaxSupport and
/// Numerical if a program fails.
RnspReport rnsp_check(const Matrix& a, const std::vector<int>& support, bool parallel = true);

struct RecoveryAudit {
  bool bp_recovers = false;  // LP basis pursuit returns x* to 1e-7 relative
  bool rnsp_holds = false;   // strict rule, S = supp(x*)
  bool rnsp_boundary = false;
  double max_ratio = 0.0;
  double bp_error = 0.0;  // ||x_bp - x*||_inf
};

/// Basis pursuit (exact LP) and the RNSP check on supp(x*), computed
/// independently of each other.
RecoveryAudit recovery_iff_rnsp(const Matrix& a, const Vector& x_star);

struct KernelConditionReport {
  int basis_size = 0;       // dimension of the augmented kernel
  int checked_edges = 0;    // edges with neither endpoint at the root
  double tolerance = 0.0;   // 1e-8 * ||A||_2
  double max_root_residual = 0.0;  // max over basis vectors of ||A_1 x_1||
  double max_edge_residual = 0.0;  // max over basis vectors and edges of ||A~ Delta_e||
  int violating_vectors = 0;
  /// The condition is only guaranteed when all non-root nodes share A~.
  bool shared_nonroot = false;
  bool passed = false;
};

/// Computes an orthonormal kernel basis of the dense augmented matrix by SVD
/// and checks, for every basis vector, A_1 x_1 = 0 and A~ Delta_e = 0 for every
/// edge not touching the root, where A~ is the design of the edge's child.
/// Throws BudgetExceeded when the dense matrix would exceed kDenseEntryBudget.
KernelConditionReport kernel_condition_check(const AugmentedSystem& aug, const Graph& g, bool shared_nonroot);

/// Orthonormal basis of ker(A) (columns), rank cutoff max(rows, cols) * eps * sigma_max.
Matrix null_space(const Matrix& a);

struct ShellingCheck {
  double lhs = 0.0;  // ||x_U||_2 with U the k largest-magnitude entries
  double rhs = 0.0;  // delta_2k / (1 - delta_k) * ||x||_1 / sqrt(k)
  bool holds = false;
};

/// Shelling bound for a kernel vector x of a matrix with RIP constants
/// delta_k < 1 and delta_2k. Taking U as the k largest entries makes the
/// check cover every U with |U| = k.
ShellingCheck shelling_check(const Vector& x, int k, double delta_k, double delta_2k);

/// One order-level sample-size expression with constants set to 1.
struct ThresholdRow {
  std::string source;      // "Theorem 1", "Table 1", ...
  std::string quantity;    // "N_root", "N_nonroot", "N_total"
  std::string method;      // row label within tables
  std::string expression;  // symbolic form
  double value = 0.0;
};

/// Order-only sample sizes of the recovery theorems (with a log d factor,
/// failure probability dropped) and the total-sample tables (no log factor),
/// evaluated on the metrics of the signal graph g.
std::vector<ThresholdRow> theorem_thresholds(const Graph& g, int d, int s, int s_prime);

void write_thresholds_csv(std::ostream& os, const std::vector<ThresholdRow>& rows, const std::string& meta_comment = {});
std::string summarize(const RipReport& r);
std::string summarize(const RnspReport& r);
std::string summarize(const KernelConditionReport& r);

}  // namespace tvp
