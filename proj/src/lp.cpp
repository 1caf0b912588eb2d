#include "tvpursuit/lp.hpp"

#include "tvpursuit/kernels.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvp {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::IterationLimit: return "iteration-limit";
  }
  return "unknown";
}

namespace {

enum class PhaseOutcome { Optimal, Unbounded, IterationLimit };

/// Dense tableau over the standard-form problem min c^T x, A x = b >= 0, x >= 0.
/// Row m holds reduced costs, column N holds the right-hand side; artificial
/// columns are never stored because an artificial never re-enters the basis.
class Simplex {
 public:
  Simplex(Matrix a, Vector b, Vector c, const LpOptions& opts)
      : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), opts_(opts),
        m_(a_.rows()), n_(a_.cols()) {
    active_.assign(static_cast<std::size_t>(m_), true);
    basis_.resize(static_cast<std::size_t>(m_));
    for (Eigen::Index i = 0; i < m_; ++i) basis_[static_cast<std::size_t>(i)] = n_ + i;
    is_basic_.assign(static_cast<std::size_t>(n_), false);
  }

  LpResult run() {
    LpResult res;
    init_phase1();
    if (iterate(res) != PhaseOutcome::Optimal) {
      res.status = LpStatus::IterationLimit;
      return res;
    }
    const double infeas = -t_(m_, n_);
    if (infeas > opts_.feasibility_tol * std::max(1.0, b_.lpNorm<1>())) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    drive_out_artificials(res);
    init_phase2();
    for (int round = 0; round < 4; ++round) {
      const PhaseOutcome out = iterate(res);
      if (out == PhaseOutcome::Unbounded) {
        res.status = LpStatus::Unbounded;
        return res;
      }
      if (out == PhaseOutcome::IterationLimit) {
        res.status = LpStatus::IterationLimit;
        return res;
      }
      ++res.refactorizations;
      if (refactor(res)) {
        res.status = LpStatus::Optimal;
        return res;
      }
    }
    res.status = LpStatus::Optimal;  // best effort after repeated refactorization
    return res;
  }

  const std::vector<bool>& active_rows() const { return active_; }

 private:
  void pivot(Eigen::Index row, Eigen::Index col) {
    if (opts_.parallel)
      kernels::parallel::tableau_pivot(t_, row, col);
    else
      kernels::serial::tableau_pivot(t_, row, col);
    const Eigen::Index leaving = basis_[static_cast<std::size_t>(row)];
    if (leaving < n_) is_basic_[static_cast<std::size_t>(leaving)] = false;
    basis_[static_cast<std::size_t>(row)] = col;
    is_basic_[static_cast<std::size_t>(col)] = true;
  }

  void init_phase1() {
    t_.resize(m_ + 1, n_ + 1);
    t_.topLeftCorner(m_, n_) = a_;
    t_.block(0, n_, m_, 1) = b_;
    for (Eigen::Index j = 0; j < n_; ++j) t_(m_, j) = -a_.col(j).sum();
    t_(m_, n_) = -b_.sum();
  }

  void init_phase2() {
    for (Eigen::Index j = 0; j <= n_; ++j) t_(m_, j) = j < n_ ? c_[j] : 0.0;
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (!active_[static_cast<std::size_t>(i)]) continue;
      const double cb = c_[basis_[static_cast<std::size_t>(i)]];
      if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
    }
  }

  void drive_out_artificials(LpResult& res) {
    for (Eigen::Index i = 0; i < m_; ++i) {
      if (basis_[static_cast<std::size_t>(i)] < n_) continue;
      Eigen::Index best = -1;
      double best_abs = opts_.pivot_tol;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        const double v = std::abs(t_(i, j));
        if (v > best_abs) {
          best_abs = v;
          best = j;
        }
      }
      if (best >= 0) {
        pivot(i, best);
        ++res.pivots;
      } else {
        // Redundant equality row.
        active_[static_cast<std::size_t>(i)] = false;
        t_.row(i).setZero();
        basis_[static_cast<std::size_t>(i)] = -1;
      }
    }
  }

  PhaseOutcome iterate(LpResult& res) {
    bool bland = false;
    int degenerate_streak = 0;
    while (true) {
      if (res.pivots >= opts_.max_pivots) return PhaseOutcome::IterationLimit;
      Eigen::Index enter = -1;
      double best = -opts_.optimality_tol;
      for (Eigen::Index j = 0; j < n_; ++j) {
        if (is_basic_[static_cast<std::size_t>(j)]) continue;
        const double r = t_(m_, j);
        if (r < best) {
          enter = j;
          if (bland) break;
          best = r;
        }
      }
      if (enter < 0) return PhaseOutcome::Optimal;

      Eigen::Index leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      double best_pivot = 0.0;
      for (Eigen::Index i = 0; i < m_; ++i) {
        if (!active_[static_cast<std::size_t>(i)]) continue;
        const double a = t_(i, enter);
        if (a <= opts_.pivot_tol) continue;
        const double ratio = std::max(t_(i, n_), 0.0) / a;
        const double slack = 1e-12 * (1.0 + std::abs(best_ratio));
        if (ratio < best_ratio - slack) {
          leave = i;
          best_ratio = ratio;
          best_pivot = a;
        } else if (ratio <= best_ratio + slack) {
          const bool take = bland ? basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)]
                                  : a > best_pivot;
          if (take) {
            leave = i;
            best_ratio = std::min(best_ratio, ratio);
            best_pivot = a;
          }
        }
      }
      if (leave < 0) return PhaseOutcome::Unbounded;

      if (best_ratio <= 1e-12) {
        if (++degenerate_streak >= opts_.degenerate_switch) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }
      pivot(leave, enter);
      ++res.pivots;
      if (bland) ++res.bland_pivots;
      for (Eigen::Index i = 0; i < m_; ++i)
        if (t_(i, n_) < 0.0) t_(i, n_) = 0.0;
    }
  }

  /// Recompute the basic solution and reduced costs from the original data.
  /// Returns true when the basis is optimal; otherwise rebuilds the tableau.
  bool refactor(LpResult& res) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < m_; ++i)
      if (active_[static_cast<std::size_t>(i)]) rows.push_back(i);
    const auto k = static_cast<Eigen::Index>(rows.size());
    Matrix basis_mat(k, k);
    Vector b_act(k);
    Vector c_b(k);
    for (Eigen::Index r = 0; r < k; ++r) {
      b_act[r] = b_[rows[static_cast<std::size_t>(r)]];
      const Eigen::Index col = basis_[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])];
      c_b[r] = c_[col];
      for (Eigen::Index q = 0; q < k; ++q) basis_mat(q, r) = a_(rows[static_cast<std::size_t>(q)], col);
    }
    Eigen::PartialPivLU<Matrix> lu(basis_mat);
    Vector x_b = lu.solve(b_act);
    Vector y_act = lu.transpose().solve(c_b);
    Matrix a_act(k, n_);
    for (Eigen::Index r = 0; r < k; ++r) a_act.row(r) = a_.row(rows[static_cast<std::size_t>(r)]);
    Vector reduced = c_ - a_act.transpose() * y_act;

    x_ = Vector::Zero(n_);
    for (Eigen::Index r = 0; r < k; ++r)
      x_[basis_[static_cast<std::size_t>(rows[static_cast<std::size_t>(r)])]] = std::max(x_b[r], 0.0);
    y_ = Vector::Zero(m_);
    for (Eigen::Index r = 0; r < k; ++r) y_[rows[static_cast<std::size_t>(r)]] = y_act[r];
    res.x = x_;
    res.dual = y_;

    bool optimal = true;
    for (Eigen::Index j = 0; j < n_; ++j)
      if (!is_basic_[static_cast<std::size_t>(j)] && reduced[j] < -opts_.optimality_tol) optimal = false;
    if (x_b.minCoeff() < -std::sqrt(opts_.feasibility_tol)) optimal = false;
    if (optimal) return true;

    // Drift detected: restart from a clean tableau for this basis.
    const Matrix body = lu.solve(a_act);
    for (Eigen::Index r = 0; r < k; ++r) {
      const Eigen::Index i = rows[static_cast<std::size_t>(r)];
      t_.row(i).head(n_) = body.row(r);
      t_(i, n_) = std::max(x_b[r], 0.0);
    }
    t_.row(m_).head(n_) = reduced.transpose();
    t_(m_, n_) = -c_b.dot(x_b);
    return false;
  }

 public:
  Vector x_;
  Vector y_;

 private:
  Matrix a_;
  Vector b_;
  Vector c_;
  LpOptions opts_;
  Eigen::Index m_;
  Eigen::Index n_;
  RowMatrix t_;
  std::vector<Eigen::Index> basis_;
  std::vector<bool> is_basic_;
  std::vector<bool> active_;
};

}  // namespace

LpResult solve_lp(const LpProblem& p, const LpOptions& opts) {
  const Eigen::Index m = p.a_eq.rows();
  const Eigen::Index n = p.a_eq.cols();
  if (p.c.size() != n || p.b.size() != m || (!p.free.empty() && static_cast<Eigen::Index>(p.free.size()) != n))
    throw Error(ErrorKind::ShapeMismatch, "LP dimensions are inconsistent");
  if (!p.b.allFinite() || !p.c.allFinite() || !p.a_eq.allFinite())
    throw Error(ErrorKind::Numerical, "LP data must be finite");

  std::vector<Eigen::Index> negative_part(static_cast<std::size_t>(n), -1);
  Eigen::Index extra = 0;
  for (Eigen::Index j = 0; j < n; ++j)
    if (!p.free.empty() && p.free[static_cast<std::size_t>(j)]) negative_part[static_cast<std::size_t>(j)] = n + extra++;

  Matrix a(m, n + extra);
  Vector c(n + extra);
  a.leftCols(n) = p.a_eq;
  c.head(n) = p.c;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index neg = negative_part[static_cast<std::size_t>(j)];
    if (neg < 0) continue;
    a.col(neg) = -p.a_eq.col(j);
    c[neg] = -p.c[j];
  }
  Vector b = p.b;
  Vector row_sign = Vector::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b[i] < 0.0) {
      b[i] = -b[i];
      a.row(i) *= -1.0;
      row_sign[i] = -1.0;
    }
  }

  Simplex simplex(std::move(a), std::move(b), std::move(c), opts);
  LpResult res = simplex.run();
  if (res.status != LpStatus::Optimal) {
    res.x.resize(0);
    res.dual.resize(0);
    return res;
  }
  Vector x(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index neg = negative_part[static_cast<std::size_t>(j)];
    x[j] = res.x[j] - (neg >= 0 ? res.x[neg] : 0.0);
  }
  res.x = std::move(x);
  res.dual = res.dual.cwiseProduct(row_sign);
  res.objective = p.c.dot(res.x);
  return res;
}

}  // namespace tvp
