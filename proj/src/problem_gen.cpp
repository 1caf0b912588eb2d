#include "tvpursuit/problem_gen.hpp"

#include "tvpursuit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace tvp {

double Rng::normal() noexcept {
  // 1 - u keeps the logarithm finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

std::vector<int> permutation(int d, Rng& rng) {
  std::vector<int> perm(static_cast<std::size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = d - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

std::vector<int> sample_support(int d, int k, Rng& rng) {
  auto perm = permutation(d, rng);
  perm.resize(static_cast<std::size_t>(k));
  std::sort(perm.begin(), perm.end());
  return perm;
}

double random_sign(Rng& rng) { return (rng() >> 63) != 0U ? 1.0 : -1.0; }

}  // namespace

Vector SignalEnsemble::node_signal(const Graph& g, NodeId v) const {
  Vector x = root_signal;
  for (EdgeId e : path_to_root(g, v).edges) x += diff(e);
  return x;
}

std::vector<Vector> SignalEnsemble::node_signals(const Graph& g) const {
  std::vector<Vector> out(static_cast<std::size_t>(g.num_nodes()));
  out[0] = root_signal;
  for (NodeId v : g.bfs_order()) {
    if (v == 1) continue;
    out[static_cast<std::size_t>(v - 1)] =
        out[static_cast<std::size_t>(g.parent(v) - 1)] + diff(g.parent_edge(v));
  }
  return out;
}

int DesignSet::total_rows() const {
  int total = 0;
  for (NodeId v = 1; v <= num_nodes(); ++v) total += rows(v);
  return total;
}

DesignSet DesignSet::from_matrices(std::vector<Matrix> per_node) {
  DesignSet ds;
  if (per_node.empty()) throw Error(ErrorKind::InvalidSize, "design set needs at least one node");
  const auto d = per_node.front().cols();
  for (const auto& m : per_node)
    if (m.cols() != d) throw Error(ErrorKind::ShapeMismatch, "designs must share column count");
  ds.index.resize(per_node.size());
  std::iota(ds.index.begin(), ds.index.end(), 0);
  ds.unique = std::move(per_node);
  ds.scaled = false;
  return ds;
}

Matrix gen_design(int rows, int d, std::uint64_t seed) {
  if (rows < 1 || d < 1) throw Error(ErrorKind::InvalidSize, "design needs rows, d >= 1");
  Rng rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  Matrix a(rows, d);
  // Column-major fill order keeps a fixed entry <-> draw correspondence.
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i) a(i, j) = rng.normal() * scale;
  return a;
}

DesignSet gen_designs(int n, int d, int root_rows, int nonroot_rows, bool shared_nonroot,
                      std::uint64_t seed, bool shared_all) {
  if (n < 1) throw Error(ErrorKind::InvalidSize, "design set needs n >= 1");
  DesignSet ds;
  ds.seed = seed;
  ds.shared_nonroot = shared_nonroot || shared_all;
  const Rng base(seed);
  ds.index.resize(static_cast<std::size_t>(n));
  if (shared_all) {
    ds.unique.push_back(gen_design(root_rows, d, base.split(1)()));
    std::fill(ds.index.begin(), ds.index.end(), 0);
    return ds;
  }
  ds.unique.push_back(gen_design(root_rows, d, base.split(1)()));
  ds.index[0] = 0;
  if (n == 1) return ds;
  if (shared_nonroot) {
    ds.unique.push_back(gen_design(nonroot_rows, d, base.split(2)()));
    std::fill(ds.index.begin() + 1, ds.index.end(), 1);
    return ds;
  }
  for (NodeId v = 2; v <= n; ++v) {
    ds.index[static_cast<std::size_t>(v - 1)] = static_cast<int>(ds.unique.size());
    ds.unique.push_back(gen_design(nonroot_rows, d, base.split(static_cast<std::uint64_t>(v))()));
  }
  return ds;
}

SignalEnsemble gen_signals(const Graph& g, int d, int s, int s_prime, SignalScheme scheme,
                           std::uint64_t seed) {
  if (d < 1 || s < 0 || s_prime < 0 || s > d || s_prime > d)
    throw Error(ErrorKind::InvalidSize, "signal sizes out of range");
  const int edges = g.num_edges();
  SignalEnsemble ens;
  ens.d = d;
  ens.s = s;
  ens.s_prime = s_prime;
  ens.seed = seed;
  ens.root_signal = Vector::Zero(d);
  ens.diffs.assign(static_cast<std::size_t>(edges), Vector::Zero(d));
  ens.diff_supports.resize(static_cast<std::size_t>(edges));
  Rng rng(seed);

  if (scheme == SignalScheme::DisjointPm1) {
    if (static_cast<long long>(s) + static_cast<long long>(edges) * s_prime > d)
      throw Error(ErrorKind::DimensionExhausted,
                  "disjoint supports need s + (n-1) s' <= d");
    Rng perm_rng = rng.split("perm");
    Rng sign_rng = rng.split("sign");
    const auto perm = permutation(d, perm_rng);
    auto cursor = perm.begin();
    ens.root_support.assign(cursor, cursor + s);
    cursor += s;
    for (int e = 0; e < edges; ++e) {
      ens.diff_supports[static_cast<std::size_t>(e)].assign(cursor, cursor + s_prime);
      cursor += s_prime;
    }
    std::sort(ens.root_support.begin(), ens.root_support.end());
    for (int j : ens.root_support) ens.root_signal[j] = random_sign(sign_rng);
    for (int e = 0; e < edges; ++e) {
      auto& supp = ens.diff_supports[static_cast<std::size_t>(e)];
      std::sort(supp.begin(), supp.end());
      for (int j : supp) ens.diffs[static_cast<std::size_t>(e)][j] = random_sign(sign_rng);
    }
    return ens;
  }

  Rng root_rng = rng.split("root");
  ens.root_support = sample_support(d, s, root_rng);
  for (int j : ens.root_support) ens.root_signal[j] = random_sign(root_rng);
  for (int e = 0; e < edges; ++e) {
    Rng edge_rng = rng.split(static_cast<std::uint64_t>(e + 1));
    auto& supp = ens.diff_supports[static_cast<std::size_t>(e)];
    supp = sample_support(d, s_prime, edge_rng);
    for (int j : supp) {
      double value = 0.0;
      while (value == 0.0) value = edge_rng.normal();
      ens.diffs[static_cast<std::size_t>(e)][j] = value;
    }
  }
  return ens;
}

MeasurementSet measure(const Graph& g, const DesignSet& designs, const SignalEnsemble& ens,
                       double noise_sd, std::uint64_t seed, double eta_override) {
  if (designs.num_nodes() != g.num_nodes())
    throw Error(ErrorKind::ShapeMismatch, "design count does not match node count");
  if (designs.cols() != ens.d) throw Error(ErrorKind::ShapeMismatch, "design width != signal dim");
  if (noise_sd < 0.0) throw Error(ErrorKind::InvalidSize, "noise_sd must be >= 0");
  MeasurementSet m;
  m.seed = seed;
  const auto signals = ens.node_signals(g);
  const Rng base(seed);
  double total_rows = 0.0;
  for (NodeId v = 1; v <= g.num_nodes(); ++v) {
    const Matrix& a = designs.matrix(v);
    Vector eps = Vector::Zero(a.rows());
    if (noise_sd > 0.0) {
      Rng rng = base.split(static_cast<std::uint64_t>(v));
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = noise_sd * rng.normal();
    }
    m.responses.push_back(a * signals[static_cast<std::size_t>(v - 1)] + eps);
    m.noise.push_back(std::move(eps));
    total_rows += static_cast<double>(a.rows());
  }
  m.noise_budget = eta_override >= 0.0 ? eta_override : std::sqrt(total_rows) * noise_sd;
  return m;
}

int root_sample_size(int s, int d) {
  if (s < 1 || s > d) throw Error(ErrorKind::InvalidSize, "root_sample_size needs 1 <= s <= d");
  const double value = 2.0 * s * std::log(std::numbers::e * d / s);
  return static_cast<int>(std::floor(value + 1e-12));
}

}  // namespace tvp
