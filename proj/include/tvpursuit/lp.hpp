#pragma once

#include "tvpursuit/common.hpp"

#include <vector>

namespace tvp {

/// min c^T x  s.t.  A_eq x = b,  x_j >= 0 unless free[j].
struct LpProblem {
  Vector c;
  Matrix a_eq;
  Vector b;
  std::vector<bool> free;  // empty means every variable is non-negative
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

struct LpOptions {
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-9;
  double feasibility_tol = 1e-9;
  long max_pivots = 200'000;
  /// Consecutive degenerate pivots after which entering-variable selection
  /// switches from steepest reduced cost to Bland's rule.
  int degenerate_switch = 50;
  bool parallel = true;
};

struct LpResult {
  LpStatus status = LpStatus::IterationLimit;
  Vector x;
  /// Equality-row multipliers y with c - A^T y >= 0 on the non-negative variables.
  Vector dual;
  double objective = 0.0;
  long pivots = 0;
  long bland_pivots = 0;
  int refactorizations = 0;
};

/// Dense two-phase primal simplex. The final basis is re-factorized from the
/// original data before x and the duals are reported.
LpResult solve_lp(const LpProblem& p, const LpOptions& opts = {});

}  // namespace tvp
