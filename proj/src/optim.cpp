#include "tvpursuit/optim.hpp"

#include "tvpursuit/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tvp {

const char* to_string(BpBackend b) { return b == BpBackend::Lp ? "lp" : "admm"; }

BpBackend parse_backend(const std::string& name) {
  if (name == "lp") return BpBackend::Lp;
  if (name == "admm") return BpBackend::Admm;
  throw Error(ErrorKind::Parse, "unknown backend '" + name + "' (expected lp or admm)");
}

double power_iteration(const Matrix& sym, int iters, std::uint64_t seed) {
  if (sym.rows() == 0) return 0.0;
  Rng rng(seed);
  Vector v(sym.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iters; ++it) {
    Vector w = sym * v;
    lambda = v.dot(w);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    v = w / norm;
  }
  return std::max(lambda, v.dot(sym * v));
}

Vector soft_threshold(const Vector& t, double k) {
  return t.unaryExpr([k](double v) { return v > k ? v - k : (v < -k ? v + k : 0.0); });
}

Vector shrink_delta(const Vector& gamma, double rho, const Vector& zi, const Vector& zj) {
  if (rho <= 0.0) throw Error(ErrorKind::InvalidSize, "rho must be positive");
  const Vector t = gamma + rho * (zi - zj);
  return soft_threshold(t, 1.0) / rho;
}

Vector root_primal(const Vector& u, double c) {
  return u.unaryExpr([c](double v) {
    if (v < -1.0) return -(v + 1.0) / (2.0 * c);
    if (v > 1.0) return -(v - 1.0) / (2.0 * c);
    return 0.0;
  });
}

namespace {

// inf_x |x| + u x + c x^2 summed over coordinates.
double conjugate_sum(const Vector& u, double c) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double excess = std::abs(u[i]) - 1.0;
    if (excess > 0.0) total -= excess * excess / (4.0 * c);
  }
  return total;
}

double estimate_spectral_norm_sq(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Rng rng(17);
  Vector v(a.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.normal();
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = a.transpose() * (a * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    lambda = norm;
    v = w / norm;
  }
  return lambda;
}

}  // namespace

double root_dual_objective(const Matrix& a, const Vector& b, const Vector& nu, double c, const Vector& lambda) {
  return lambda.dot(b) + conjugate_sum(nu - a.transpose() * lambda, c);
}

RootSubproblemResult root_subproblem(const Matrix& a, const Vector& b, const Vector& nu, double c,
                                     const BbConfig& cfg) {
  if (b.size() != a.rows() || nu.size() != a.cols())
    throw Error(ErrorKind::ShapeMismatch, "root subproblem dimensions are inconsistent");
  if (!(c > 0.0)) throw Error(ErrorKind::InvalidSize, "root subproblem needs c > 0");
  if (cfg.warm_start.size() != 0 && cfg.warm_start.size() != a.rows())
    throw Error(ErrorKind::ShapeMismatch, "warm-start dual has wrong length");

  RootSubproblemResult res;
  const double norm_sq = cfg.spectral_norm_sq > 0.0 ? cfg.spectral_norm_sq : estimate_spectral_norm_sq(a);
  const double lipschitz = std::max(norm_sq / (2.0 * c), 1e-300);
  const double safe_step = 1.0 / lipschitz;
  const double tol = cfg.grad_tol * std::max(1.0, b.norm());

  struct Point {
    Vector lambda, x, g;
    double dual = 0.0;
    double gnorm = 0.0;
  };
  auto evaluate = [&](Vector lambda) {
    Point p;
    const Vector u = nu - a.transpose() * lambda;
    p.x = root_primal(u, c);
    p.g = b - a * p.x;
    p.dual = lambda.dot(b) + conjugate_sum(u, c);
    p.gnorm = p.g.norm();
    p.lambda = std::move(lambda);
    return p;
  };

  Point cur = evaluate(cfg.warm_start.size() == a.rows() ? cfg.warm_start : Vector::Zero(a.rows()));
  Point best = cur;
  res.dual_trace.push_back(cur.dual);
  double step = cfg.initial_step > 0.0 ? cfg.initial_step : safe_step;
  int it = 0;
  for (; it < cfg.max_iters && cur.gnorm > tol; ++it) {
    Point next = evaluate(cur.lambda + step * cur.g);
    if (cfg.backtracking) {
      while (next.dual < cur.dual && step > safe_step) {
        step = std::max(0.5 * step, safe_step);
        next = evaluate(cur.lambda + step * cur.g);
      }
    }
    if (next.gnorm > 10.0 * best.gnorm) {
      // Non-monotone safeguard: restart from the best point with a safe step.
      cur = best;
      step = safe_step;
      continue;
    }
    const Vector s = next.lambda - cur.lambda;
    const Vector t = next.g - cur.g;
    const double curvature = -s.dot(t);
    if (curvature > 0.0) {
      step = (it % 2 == 0) ? s.squaredNorm() / curvature : curvature / t.squaredNorm();
    } else {
      step = safe_step;
    }
    cur = std::move(next);
    res.dual_trace.push_back(cur.dual);
    if (cur.gnorm < best.gnorm) best = cur;
  }
  if (cur.gnorm > best.gnorm) cur = best;

  // Semismooth Newton on the dual: on the active set S = {|u_i| > 1} the dual
  // is the quadratic lambda^T b - ||A_S^T lambda - w_S||^2 / (4c), whose
  // Hessian is A_S A_S^T / (2c). The step solves it on range(A_S).
  int newton = 0;
  for (; newton < cfg.newton_steps && cur.gnorm > tol; ++newton) {
    const Vector u = nu - a.transpose() * cur.lambda;
    std::vector<Eigen::Index> active;
    for (Eigen::Index i = 0; i < u.size(); ++i)
      if (std::abs(u[i]) > 1.0) active.push_back(i);
    if (active.empty()) break;
    Matrix as(a.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k) as.col(static_cast<Eigen::Index>(k)) = a.col(active[k]);
    Vector direction;
    if (as.cols() >= as.rows()) {
      const Eigen::LDLT<Matrix> hess(as * as.transpose());
      if (hess.info() != Eigen::Success) break;
      direction = 2.0 * c * hess.solve(cur.g);
    } else {
      const Eigen::LDLT<Matrix> gram(as.transpose() * as);
      if (gram.info() != Eigen::Success) break;
      const Vector z = gram.solve(as.transpose() * cur.g);
      direction = 2.0 * c * (as * gram.solve(z));
    }
    if (!direction.allFinite()) break;
    bool accepted = false;
    for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
      Point next = evaluate(cur.lambda + alpha * direction);
      if (next.dual >= cur.dual && next.gnorm < cur.gnorm) {
        cur = std::move(next);
        res.dual_trace.push_back(cur.dual);
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  const Point& out = cur;
  res.newton_steps = newton;
  res.x = out.x;
  res.lambda = out.lambda;
  res.grad_norm = out.gnorm;
  res.dual_objective = out.dual;
  res.iterations = it;
  res.converged = out.gnorm <= tol;
  return res;
}

Matrix pinv(const Matrix& a) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  if (!a.allFinite()) throw Error(ErrorKind::Numerical, "pinv of a non-finite matrix");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) *
                        std::numeric_limits<double>::epsilon() * (sv.size() > 0 ? sv[0] : 0.0);
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Vector least_norm_affine(const Matrix& a, const Vector& b, const Vector& a_vec, const Matrix* a_pinv) {
  if (b.size() != a.rows() || a_vec.size() != a.cols())
    throw Error(ErrorKind::ShapeMismatch, "least_norm_affine dimensions are inconsistent");
  Matrix local;
  if (a_pinv == nullptr) {
    local = pinv(a);
    a_pinv = &local;
  }
  const Vector x = (*a_pinv) * (b + 0.5 * (a * a_vec)) - 0.5 * a_vec;
  const double scale = b.norm() + a.norm() * x.norm();
  if ((a * x - b).norm() > 1e-8 * std::max(1.0, scale))
    throw Error(ErrorKind::Infeasible, "b + A a/2 is not in the range of A");
  return x;
}

Matrix group_soft_threshold(const Matrix& rows, double t) {
  if (t < 0.0) throw Error(ErrorKind::InvalidSize, "threshold must be non-negative");
  Matrix out = rows;
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double norm = rows.col(j).norm();
    out.col(j) *= norm <= t ? 0.0 : 1.0 - t / norm;
  }
  return out;
}

// --- basis pursuit / BPDN -------------------------------------------------

namespace {

Vector project_ball(const Vector& v, double radius) {
  const double norm = v.norm();
  if (norm <= radius) return v;
  return v * (radius / norm);
}

class ScaledOperator {
 public:
  ScaledOperator(const LinearOperator& op, double scale) : op_(op), scale_(scale) {}
  Vector apply(const Vector& x) const { return scale_ * op_.apply(x); }
  Vector adjoint(const Vector& r) const { return scale_ * op_.adjoint(r); }
  Eigen::Index rows() const { return op_.rows(); }
  Eigen::Index cols() const { return op_.cols(); }

 private:
  const LinearOperator& op_;
  double scale_;
};

struct Polish {
  Vector x;           // empty when the sign pattern is not self-consistent
  bool certified = false;
};

// Solve the problem restricted to the sign pattern of z in closed form:
//   min sigma^T x_S  s.t. ||M_S x_S - y|| <= eta,
// then look for a dual certificate lambda with M_S^T lambda = sigma and
// ||M^T lambda||_inf <= 1, which proves global optimality. For eta > 0 the
// multiplier is fixed by the residual; for eta = 0 the guess is projected
// onto {M_S^T lambda = sigma}.
Polish support_polish(const ScaledOperator& m, const Vector& y, double eta, const Vector& z, const Vector& lambda_guess) {
  Polish out;
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = 0; i < z.size(); ++i)
    if (z[i] != 0.0) support.push_back(i);
  const auto k = static_cast<Eigen::Index>(support.size());
  if (k == 0 || k > m.rows()) return out;
  Matrix ms(m.rows(), k);
  Vector unit = Vector::Zero(m.cols());
  for (Eigen::Index j = 0; j < k; ++j) {
    unit[support[static_cast<std::size_t>(j)]] = 1.0;
    ms.col(j) = m.apply(unit);
    unit[support[static_cast<std::size_t>(j)]] = 0.0;
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(ms);
  if (qr.rank() < k) return out;
  const Vector x_ls = qr.solve(y);
  const double r_ls = (ms * x_ls - y).norm();
  Vector sigma(k);
  for (Eigen::Index j = 0; j < k; ++j) sigma[j] = z[support[static_cast<std::size_t>(j)]] > 0.0 ? 1.0 : -1.0;
  const Eigen::LDLT<Matrix> gram(ms.transpose() * ms);
  Vector xs;
  double mu = 0.0;
  if (eta == 0.0) {
    // A certificate only proves optimality for a feasible point.
    if (r_ls > 1e-10 * std::max(1.0, y.norm())) return out;
    xs = x_ls;
  } else {
    if (r_ls >= eta) return out;
    const Vector gi_sigma = gram.solve(sigma);
    const double t = sigma.dot(gi_sigma);
    if (!(t > 0.0)) return out;
    const double inv_mu = std::sqrt((eta * eta - r_ls * r_ls) / t);
    xs = x_ls - inv_mu * gi_sigma;
    mu = 1.0 / inv_mu;
  }
  for (Eigen::Index j = 0; j < k; ++j)
    if (xs[j] * sigma[j] <= 0.0) return out;
  out.x = Vector::Zero(m.cols());
  for (Eigen::Index j = 0; j < k; ++j) out.x[support[static_cast<std::size_t>(j)]] = xs[j];

  Vector lambda;
  if (eta == 0.0) {
    if (lambda_guess.size() != m.rows()) return out;
    lambda = lambda_guess + ms * gram.solve(sigma - ms.transpose() * lambda_guess);
  } else {
    lambda = mu * (y - ms * xs);
  }
  out.certified = m.adjoint(lambda).lpNorm<Eigen::Infinity>() <= 1.0 + 1e-7;
  return out;
}

L1Result l1_admm(const LinearOperator& op, const Vector& y, double eta, const AdmmConfig& cfg) {
  if (y.size() != op.rows()) throw Error(ErrorKind::ShapeMismatch, "response length != operator rows");
  if (eta < 0.0) throw Error(ErrorKind::InvalidSize, "eta must be non-negative");
  if (!(cfg.rho > 0.0) || cfg.tol_abs <= 0.0 || cfg.tol_rel <= 0.0)
    throw Error(ErrorKind::InvalidSize, "ADMM needs rho > 0 and positive tolerances");
  const Eigen::Index m = op.rows();
  const Eigen::Index n = op.cols();
  L1Result res;
  if (y.norm() <= eta) {
    res.x = Vector::Zero(n);
    res.residual = y.norm();
    res.info = {true, 0, 0.0, 0.0, "trivial"};
    return res;
  }

  // Normalize to unit spectral norm; the x-update uses (I + M^T M)^{-1} through
  // the Woodbury identity with a Cholesky factor of I + M M^T, which does not
  // depend on rho, so residual balancing is free.
  const Matrix gram = op.gram();
  const double lmax = power_iteration(gram, 100);
  if (!(lmax > 0.0)) throw Error(ErrorKind::Numerical, "operator is identically zero");
  const double scale = 1.0 / std::sqrt(lmax);
  const ScaledOperator mop(op, scale);
  Matrix k = (scale * scale) * gram;
  k.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> chol(k);
  if (chol.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "Cholesky of I + M M^T failed");
  const Vector yn = scale * y;
  const double etan = scale * eta;
  const double alpha = cfg.over_relaxation;

  Vector x = Vector::Zero(n), z = Vector::Zero(n), u = Vector::Zero(n);
  Vector w = Vector::Zero(m), v = Vector::Zero(m);
  Vector mx(m);
  double rho = cfg.rho;
  int it = 0;
  double r_pri = 0.0, s_dual = 0.0;
  bool converged = false;
  Polish polish;
  // Sign pattern of z at the last check and how many checks it has persisted.
  Vector last_signs;
  int stable_checks = 0;
  bool pattern_tried = false;
  for (it = 1; it <= cfg.max_iters; ++it) {
    const Vector r = z - u + mop.adjoint(yn + w - v);
    const Vector q = chol.solve(mop.apply(r));
    x = r - mop.adjoint(q);
    mx = q;  // M x = q by the Woodbury identity
    const Vector xh = alpha * x + (1.0 - alpha) * z;
    const Vector mxh = alpha * mx + (1.0 - alpha) * (w + yn);
    const Vector z_old = z;
    const Vector w_old = w;
    z = soft_threshold(xh + u, 1.0 / rho);
    w = project_ball(mxh - yn + v, etan);
    u += xh - z;
    v += mxh - yn - w;

    if (it % 10 == 0 || it == cfg.max_iters) {
      r_pri = std::sqrt((x - z).squaredNorm() + (mx - yn - w).squaredNorm());
      s_dual = rho * ((z - z_old) + mop.adjoint(w - w_old)).norm();
      const double eps_pri =
          std::sqrt(static_cast<double>(n + m)) * cfg.tol_abs +
          cfg.tol_rel * std::max({std::sqrt(x.squaredNorm() + mx.squaredNorm()),
                                  std::sqrt(z.squaredNorm() + (w + yn).squaredNorm())});
      const double eps_dual = std::sqrt(static_cast<double>(n)) * cfg.tol_abs +
                              cfg.tol_rel * rho * (u + mop.adjoint(v)).norm();
      if (r_pri <= eps_pri && s_dual <= eps_dual) {
        converged = true;
        break;
      }
      // A stable sign pattern is worth one closed-form polish; a certified
      // polish is optimal, so iterating further cannot improve it.
      const Vector signs = z.unaryExpr([](double t) { return static_cast<double>((t > 0.0) - (t < 0.0)); });
      if (last_signs.size() == signs.size() && signs == last_signs) {
        ++stable_checks;
      } else {
        stable_checks = 0;
        pattern_tried = false;
        last_signs = signs;
      }
      if (stable_checks >= 5 && !pattern_tried) {
        pattern_tried = true;
        Polish trial = support_polish(mop, yn, etan, z, -rho * v);
        if (trial.certified) {
          polish = std::move(trial);
          break;
        }
      }
      if (cfg.adaptive_rho) {
        if (r_pri > 10.0 * s_dual) {
          rho *= 2.0;
          u /= 2.0;
          v /= 2.0;
        } else if (s_dual > 10.0 * r_pri) {
          rho /= 2.0;
          u *= 2.0;
          v *= 2.0;
        }
      }
    }
  }
  res.info.converged = converged;
  res.info.iterations = std::min(it, cfg.max_iters);
  res.info.primal_residual = r_pri;
  res.info.dual_residual = s_dual;

  const double feas_slack = eta == 0.0 ? 1e-10 * std::max(1.0, yn.norm()) : etan * 1e-9 + 1e-14;
  if (!polish.certified) polish = support_polish(mop, yn, etan, z, -rho * v);
  if (polish.x.size() == n) {
    const double pres = (mop.apply(polish.x) - yn).norm();
    const bool no_worse = polish.certified || polish.x.lpNorm<1>() <= z.lpNorm<1>() * (1.0 + 1e-6) + 1e-12;
    if (pres <= etan + feas_slack && no_worse) {
      res.x = std::move(polish.x);
      res.polished = true;
      res.certified = polish.certified;
    }
  }
  if (!res.polished) {
    // Minimal move towards feasibility: z + theta M^+ (y - M z).
    const Vector rz = yn - mop.apply(z);
    if (rz.norm() <= etan) {
      res.x = z;
    } else {
      const Matrix mmt = (scale * scale) * gram;
      const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(mmt);
      const Vector correction = mop.adjoint(cod.solve(rz));
      const double theta = etan == 0.0 ? 1.0 : 1.0 - etan / rz.norm();
      res.x = z + theta * correction;
    }
  }
  res.info.status = res.certified ? "certified" : (converged ? "converged" : "max-iters");
  res.objective = res.x.lpNorm<1>();
  res.residual = (op.apply(res.x) - y).norm();
  return res;
}

}  // namespace

L1Result bpdn(const LinearOperator& op, const Vector& y, double eta, const AdmmConfig& cfg) {
  return l1_admm(op, y, eta, cfg);
}

L1Result bpdn(const Matrix& a, const Vector& y, double eta, const AdmmConfig& cfg) {
  return l1_admm(DenseOperator(a), y, eta, cfg);
}

L1Result basis_pursuit(const LinearOperator& op, const Vector& y, BpBackend backend, double tol,
                       const AdmmConfig& cfg) {
  if (y.size() != op.rows()) throw Error(ErrorKind::ShapeMismatch, "response length != operator rows");
  if (backend == BpBackend::Admm) {
    AdmmConfig c = cfg;
    c.tol_rel = std::min(c.tol_rel, tol);
    L1Result r = l1_admm(op, y, 0.0, c);
    if (r.residual > tol * std::max(y.norm(), 1e-300) && y.norm() > 0.0)
      throw Error(ErrorKind::Infeasible, "basis pursuit: y is not in the range of A");
    return r;
  }
  const Matrix a = op.dense();
  const Eigen::Index d = a.cols();
  LpProblem lp;
  lp.c = Vector::Ones(2 * d);
  lp.a_eq.resize(a.rows(), 2 * d);
  lp.a_eq << a, -a;
  lp.b = y;
  const LpResult sol = solve_lp(lp);
  L1Result r;
  r.info.iterations = static_cast<int>(sol.pivots);
  r.info.status = to_string(sol.status);
  if (sol.status == LpStatus::Infeasible)
    throw Error(ErrorKind::Infeasible, "basis pursuit: y is not in the range of A");
  if (sol.status != LpStatus::Optimal)
    throw Error(ErrorKind::Numerical, std::string("basis pursuit LP ended with status ") + to_string(sol.status));
  r.x = sol.x.head(d) - sol.x.tail(d);
  r.objective = r.x.lpNorm<1>();
  r.residual = (a * r.x - y).norm();
  r.info.converged = true;
  r.certified = true;  // optimal basis with a dual-feasible certificate
  r.info.primal_residual = r.residual;
  return r;
}

L1Result basis_pursuit(const Matrix& a, const Vector& y, BpBackend backend, double tol, const AdmmConfig& cfg) {
  return basis_pursuit(DenseOperator(a), y, backend, tol, cfg);
}

}  // namespace tvp
