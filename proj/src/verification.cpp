#include "tvpursuit/verification.hpp"

#include "tvpursuit/io.hpp"
#include "tvpursuit/kernels.hpp"
#include "tvpursuit/lp.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace tvp {

namespace {

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + std::to_string(v[i]);
  return out;
}

struct SignProgram {
  double value = -std::numeric_limits<double>::infinity();
  Vector x;
  bool ok = false;
};

// max sigma^T x_S  s.t.  A x = 0,  ||x||_1 <= 1, over (p, q, t) >= 0 with x = p - q.
SignProgram solve_sign_program(const Matrix& a, const std::vector<int>& support, const std::vector<int>& signs) {
  const Eigen::Index m = a.rows();
  const Eigen::Index d = a.cols();
  LpProblem lp;
  lp.c = Vector::Zero(2 * d + 1);
  for (std::size_t i = 0; i < support.size(); ++i) {
    lp.c(support[i]) = -signs[i];
    lp.c(d + support[i]) = signs[i];
  }
  lp.a_eq = Matrix::Zero(m + 1, 2 * d + 1);
  lp.a_eq.topLeftCorner(m, d) = a;
  lp.a_eq.block(0, d, m, d) = -a;
  lp.a_eq.row(m).setOnes();
  lp.b = Vector::Zero(m + 1);
  lp.b(m) = 1.0;
  LpOptions opts;
  opts.parallel = false;
  const auto sol = solve_lp(lp, opts);
  SignProgram out;
  if (sol.status != LpStatus::Optimal) return out;
  out.ok = true;
  out.value = -sol.objective;
  out.x = sol.x.head(d) - sol.x.segment(d, d);
  return out;
}

}  // namespace

RipReport rip_constant(const Matrix& a, int k, bool parallel) {
  const int d = static_cast<int>(a.cols());
  if (k < 1 || k > d) throw Error(ErrorKind::InvalidSize, "rip_constant needs 1 <= k <= d");
  const std::uint64_t total = kernels::binomial(d, k);
  if (total > kRipSupportBudget)
    throw Error(ErrorKind::BudgetExceeded, "C(" + std::to_string(d) + "," + std::to_string(k) +
                                               ") supports exceed the brute-force budget");
  const auto scan = parallel ? kernels::parallel::rip_scan(a, k) : kernels::serial::rip_scan(a, k);
  RipReport r;
  r.k = k;
  r.delta_k = std::max(0.0, scan.delta);
  r.supports = total;
  r.worst_support.resize(static_cast<std::size_t>(k));
  kernels::unrank_combination(scan.worst_rank, d, k, r.worst_support);
  return r;
}

RnspReport rnsp_check(const Matrix& a, const std::vector<int>& support, bool parallel) {
  const int k = static_cast<int>(support.size());
  if (k > kRnspMaxSupport)
    throw Error(ErrorKind::BudgetExceeded, "|S| = " + std::to_string(k) + " exceeds the sign-enumeration budget");
  for (int j : support)
    if (j < 0 || j >= a.cols()) throw Error(ErrorKind::InvalidSize, "support index out of range");
  RnspReport r;
  r.support = support;
  r.witness = Vector::Zero(a.cols());
  if (k == 0) {
    r.holds = true;
    return r;
  }
  // sigma and -sigma give the same value (x -> -x), so fix the first sign.
  const std::int64_t patterns = std::int64_t{1} << (k - 1);
  std::vector<SignProgram> results(static_cast<std::size_t>(patterns));
  auto signs_of = [k](std::int64_t p) {
    std::vector<int> s(static_cast<std::size_t>(k), 1);
    for (int i = 1; i < k; ++i) s[static_cast<std::size_t>(i)] = ((p >> (i - 1)) & 1) ? -1 : 1;
    return s;
  };
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t p = 0; p < patterns; ++p)
    results[static_cast<std::size_t>(p)] = solve_sign_program(a, support, signs_of(p));

  std::int64_t best = -1;
  for (std::int64_t p = 0; p < patterns; ++p) {
    const auto& res = results[static_cast<std::size_t>(p)];
    if (!res.ok) throw Error(ErrorKind::Numerical, "sign program " + std::to_string(p) + " failed");
    if (best < 0 || res.value > results[static_cast<std::size_t>(best)].value) best = p;
  }
  const auto& top = results[static_cast<std::size_t>(best)];
  r.max_ratio = std::clamp(top.value, 0.0, 1.0);
  r.worst_signs = signs_of(best);
  r.witness = top.x;
  r.linear_programs = static_cast<int>(patterns);
  r.boundary = std::abs(r.max_ratio - 0.5) <= kRnspMargin;
  r.holds = r.max_ratio < 0.5 - kRnspMargin;
  return r;
}

RecoveryAudit recovery_iff_rnsp(const Matrix& a, const Vector& x_star) {
  if (x_star.size() != a.cols()) throw Error(ErrorKind::ShapeMismatch, "x* length != columns of A");
  const Eigen::Index d = a.cols();
  LpProblem lp;
  lp.c = Vector::Ones(2 * d);
  lp.a_eq.resize(a.rows(), 2 * d);
  lp.a_eq << a, -a;
  lp.b = a * x_star;
  const auto sol = solve_lp(lp);
  if (sol.status != LpStatus::Optimal)
    throw Error(ErrorKind::Numerical, std::string("basis pursuit LP ended ") + to_string(sol.status));
  const Vector x_bp = sol.x.head(d) - sol.x.tail(d);

  RecoveryAudit out;
  out.bp_error = (x_bp - x_star).lpNorm<Eigen::Infinity>();
  out.bp_recovers = out.bp_error <= 1e-7 * (1.0 + x_star.lpNorm<Eigen::Infinity>());
  std::vector<int> support;
  for (Eigen::Index j = 0; j < d; ++j)
    if (x_star(j) != 0.0) support.push_back(static_cast<int>(j));
  const auto rnsp = rnsp_check(a, support);
  out.rnsp_holds = rnsp.holds;
  out.rnsp_boundary = rnsp.boundary;
  out.max_ratio = rnsp.max_ratio;
  return out;
}

Matrix null_space(const Matrix& a) {
  if (a.rows() == 0) return Matrix::Identity(a.cols(), a.cols());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) * std::numeric_limits<double>::epsilon() *
                        (sv.size() ? sv(0) : 0.0);
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) > cutoff) ++rank;
  return svd.matrixV().rightCols(a.cols() - rank);
}

KernelConditionReport kernel_condition_check(const AugmentedSystem& aug, const Graph& g, bool shared_nonroot) {
  if (g.num_nodes() != aug.num_nodes()) throw Error(ErrorKind::ShapeMismatch, "graph and augmented system differ");
  if (aug.rows() * aug.cols() > kDenseEntryBudget)
    throw Error(ErrorKind::BudgetExceeded, "dense augmented matrix too large for the kernel check");
  const Matrix dense = aug.dense();
  const Matrix basis = null_space(dense);
  const int d = aug.dim();

  KernelConditionReport r;
  r.shared_nonroot = shared_nonroot;
  r.basis_size = static_cast<int>(basis.cols());
  r.tolerance = 1e-8 * (dense.size() ? Eigen::JacobiSVD<Matrix>(dense).singularValues()(0) : 0.0);
  std::vector<EdgeId> inner;
  for (EdgeId e = 1; e <= g.num_edges(); ++e)
    if (!g.edge(e).touches(1)) inner.push_back(e);
  r.checked_edges = static_cast<int>(inner.size());

  for (Eigen::Index j = 0; j < basis.cols(); ++j) {
    const auto z = basis.col(j);
    double worst = (aug.design(1) * z.head(d)).norm();
    r.max_root_residual = std::max(r.max_root_residual, worst);
    for (EdgeId e : inner) {
      const double res = (aug.design(g.child_of(e)) * z.segment(static_cast<Eigen::Index>(aug.edge_block(e)) * d, d)).norm();
      r.max_edge_residual = std::max(r.max_edge_residual, res);
      worst = std::max(worst, res);
    }
    if (worst > r.tolerance) ++r.violating_vectors;
  }
  r.passed = r.violating_vectors == 0;
  return r;
}

ShellingCheck shelling_check(const Vector& x, int k, double delta_k, double delta_2k) {
  if (k < 1 || k > x.size()) throw Error(ErrorKind::InvalidSize, "shelling_check needs 1 <= k <= d");
  if (!(delta_k < 1.0)) throw Error(ErrorKind::InvalidSize, "shelling bound needs delta_k < 1");
  std::vector<double> mags(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) mags[static_cast<std::size_t>(i)] = std::abs(x(i));
  std::partial_sort(mags.begin(), mags.begin() + k, mags.end(), std::greater<>());
  double sq = 0.0;
  for (int i = 0; i < k; ++i) sq += mags[static_cast<std::size_t>(i)] * mags[static_cast<std::size_t>(i)];
  ShellingCheck c;
  c.lhs = std::sqrt(sq);
  c.rhs = delta_2k / (1.0 - delta_k) * x.lpNorm<1>() / std::sqrt(static_cast<double>(k));
  c.holds = c.lhs <= c.rhs * (1.0 + 1e-12) + 1e-15;
  return c;
}

std::vector<ThresholdRow> theorem_thresholds(const Graph& g, int d, int s, int s_prime) {
  if (d < 1 || s < 0 || s_prime < 0) throw Error(ErrorKind::InvalidSize, "thresholds need d >= 1, s, s' >= 0");
  const auto m = graph_metrics(g);
  const double n = g.num_nodes();
  const double diam = m.diameter;
  const double deg1 = m.degree_of(1);
  const double degv = m.max_nonroot_degree;
  const double ld = std::log(static_cast<double>(d));
  const double S = s;
  const double Sp = s_prime;

  std::vector<ThresholdRow> rows;
  auto add = [&rows](const char* src, const char* qty, const char* method, const char* expr, double v) {
    rows.push_back({src, qty, method, expr, v});
  };
  add("Theorem 1", "N_root", "TVBP star", "max(s; n^2 Diam s') log d", std::max(S, n * n * diam * Sp) * ld);
  add("Theorem 1", "N_nonroot", "TVBP star", "n Diam s' log d", n * diam * Sp * ld);
  add("Theorem 2", "N_root", "TVBPD", "s log d", S * ld);
  add("Theorem 2", "N_nonroot", "TVBPD", "n^2 s' log d", n * n * Sp * ld);
  add("Theorem 3", "N_root", "TVBP tree", "max(s; n^2 s') log d", std::max(S, n * n * Sp) * ld);
  add("Theorem 3", "N_nonroot", "TVBP tree", "max(n; Deg(V\\1)^2 Diam^2) s' log d",
      std::max(n, degv * degv * diam * diam) * Sp * ld);
  add("Theorem 4", "N_root", "TVBP tree equal", "max(s; Deg(1)^2 s') log d", std::max(S, deg1 * deg1 * Sp) * ld);
  add("Theorem 4", "N_nonroot", "TVBP tree equal", "Deg(1)^2 s' log d", deg1 * deg1 * Sp * ld);
  add("Table 1", "N_total", "independent BP", "n s + Diam^2 s'", n * S + diam * diam * Sp);
  add("Table 1", "N_total", "stepwise BP", "s + n s'", S + n * Sp);
  add("Table 1", "N_total", "group lasso", "n s + Diam^2 s'", n * S + diam * diam * Sp);
  add("Table 1", "N_total", "TVBP", "s + n^2 Diam s'", S + n * n * diam * Sp);
  add("Table 2", "N_total", "TVBP", "s + n^2 Diam s'", S + n * n * diam * Sp);
  add("Table 2", "N_total", "TVBP tree", "s + max(n^2; n Deg(V\\1)^2 Diam^2) s'",
      S + std::max(n * n, n * degv * degv * diam * diam) * Sp);
  add("Table 2", "N_total", "TVBP tree equal", "s + n Deg(1)^2 s'", S + n * deg1 * deg1 * Sp);
  return rows;
}

void write_thresholds_csv(std::ostream& os, const std::vector<ThresholdRow>& rows, const std::string& meta_comment) {
  std::vector<std::string> comments{"order-only: constants set to 1, not sample-size predictions"};
  if (!meta_comment.empty()) comments.push_back(meta_comment);
  CsvWriter w(os, "thresholds", {"source", "quantity", "method", "expression", "value"}, comments);
  for (const auto& r : rows) w.row({r.source, r.quantity, r.method, r.expression, format_double(r.value)});
}

std::string summarize(const RipReport& r) {
  std::ostringstream os;
  os << "delta_" << r.k << " = " << format_double(r.delta_k) << " over " << r.supports << " supports, worst {"
     << join(r.worst_support) << "}";
  return os.str();
}

std::string summarize(const RnspReport& r) {
  std::ostringstream os;
  os << "RNSP on S={" << join(r.support) << "}: max_ratio = " << format_double(r.max_ratio) << " ("
     << (r.holds ? "holds" : r.boundary ? "boundary" : "fails") << ", " << r.linear_programs << " LPs)";
  return os.str();
}

std::string summarize(const KernelConditionReport& r) {
  std::ostringstream os;
  os << "kernel condition: " << r.basis_size << " basis vectors, " << r.checked_edges << " inner edges, max |A1 x1| "
     << format_double(r.max_root_residual) << ", max |A Delta| " << format_double(r.max_edge_residual) << ", tol "
     << format_double(r.tolerance) << ", " << r.violating_vectors << " violating ("
     << (r.shared_nonroot ? "shared" : "distinct") << " non-root designs)";
  return os.str();
}

}  // namespace tvp
