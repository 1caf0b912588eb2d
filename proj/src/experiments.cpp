#include "tvpursuit/experiments.hpp"

#include "tvpursuit/kernels.hpp"
#include "tvpursuit/reformulation.hpp"
#include "tvpursuit/rng.hpp"
#include "tvpursuit/verification.hpp"

#include <json.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <fstream>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace tvp {

namespace {

// Fixed per-family seed tags so reordering a config list never changes a cell's seed.
std::uint64_t family_tag(const std::string& family) {
  if (family == "path") return 1;
  if (family == "tree") return 2;
  throw Error(ErrorKind::Parse, "unknown topology '" + family + "' (expected path or tree)");
}

std::string str(std::uint64_t v) { return std::to_string(v); }
std::string str(int v) { return std::to_string(v); }
std::string str(bool v) { return v ? "1" : "0"; }
std::string str(double v) { return format_double(v); }

// Failure messages end up in CSV cells.
std::string sanitize(std::string s) {
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r'; }, ';');
  return s;
}

std::string seed_comment(std::uint64_t seed) { return "base_seed=" + str(seed); }

NodeId farthest_node(const Graph& g) {
  NodeId best = 1;
  for (NodeId v : g.bfs_order())
    if (g.depth(v) > g.depth(best)) best = v;
  return best;
}

struct Instance {
  Graph g;
  DesignSet designs;
  SignalEnsemble ens;
  MeasurementSet meas;
  std::vector<Vector> truth;
};

Instance make_instance(const Graph& g, int d, int s, int s_prime, int root_rows, int nonroot_rows, bool shared_nonroot,
                       bool shared_all, SignalScheme scheme, double noise_sd, std::uint64_t seed,
                       double eta_override = -1.0) {
  Instance in{g, gen_designs(g.num_nodes(), d, root_rows, nonroot_rows, shared_nonroot, Rng::derive(seed, 1), shared_all),
              gen_signals(g, d, s, s_prime, scheme, Rng::derive(seed, 2)), {}, {}};
  in.meas = measure(g, in.designs, in.ens, noise_sd, Rng::derive(seed, 3), eta_override);
  in.truth = in.ens.node_signals(g);
  return in;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Parse, what);
}

void require_positive(const std::vector<int>& v, const std::string& key) {
  require(!v.empty(), key + " must not be empty");
  for (int x : v) require(x > 0, key + " values must be positive");
}

SignalScheme parse_scheme(const std::string& name) {
  if (name == "disjoint_pm1") return SignalScheme::DisjointPm1;
  if (name == "gaussian_diffs") return SignalScheme::GaussianDiffs;
  throw Error(ErrorKind::Parse, "unknown scheme '" + name + "' (expected disjoint_pm1 or gaussian_diffs)");
}

std::uint64_t get_seed(const KeyValueConfig& kv, std::uint64_t fallback) {
  const long long s = kv.get_int("seed", static_cast<long long>(fallback));
  require(s >= 0, "seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

int get_int(const KeyValueConfig& kv, const std::string& key, int fallback) {
  const long long v = kv.get_int(key, fallback);
  require(v >= std::numeric_limits<int>::min() && v <= std::numeric_limits<int>::max(), key + " out of range");
  return static_cast<int>(v);
}

// The support-wise singular value recomputation of delta_k, independent of the
// eigenvalue scan used by rip_constant.
double rip_by_svd(const Matrix& a, int k) {
  const int d = static_cast<int>(a.cols());
  const std::uint64_t total = kernels::binomial(d, k);
  std::vector<int> idx(static_cast<std::size_t>(k));
  double worst = 0.0;
  for (std::uint64_t r = 0; r < total; ++r) {
    kernels::unrank_combination(r, d, k, idx);
    Matrix sub(a.rows(), k);
    for (int i = 0; i < k; ++i) sub.col(i) = a.col(idx[static_cast<std::size_t>(i)]);
    const Vector sv = Eigen::JacobiSVD<Matrix>(sub).singularValues();
    const double smin = sub.rows() >= k ? sv(k - 1) : 0.0;
    worst = std::max({worst, sv(0) * sv(0) - 1.0, 1.0 - smin * smin});
  }
  return worst;
}

}  // namespace

Graph make_topology(const std::string& family, int n) {
  family_tag(family);
  if (n < 1) throw Error(ErrorKind::InvalidSize, "graph size must be positive");
  if (family == "path") return make_path(n);
  int height = 0;
  while ((1 << (height + 1)) - 1 < n) ++height;
  if ((1 << (height + 1)) - 1 != n)
    throw Error(ErrorKind::InvalidSize, "balanced binary trees have 2^(h+1) - 1 nodes, not " + std::to_string(n));
  return make_balanced_tree(2, height);
}

Aggregate aggregate(const std::vector<double>& values) {
  Aggregate a;
  a.count = static_cast<int>(values.size());
  if (values.empty()) {
    a.mean = std::numeric_limits<double>::quiet_NaN();
    return a;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / a.count;
  if (a.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - a.mean) * (v - a.mean);
    a.std_error = std::sqrt(ss / (a.count - 1)) / std::sqrt(static_cast<double>(a.count));
  }
  return a;
}

std::string strip_timestamp(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::string out;
  while (std::getline(in, line))
    if (line.rfind("# generated_at=", 0) != 0) out += line + "\n";
  return out;
}

// --- phase transition --------------------------------------------------------

const PhaseCell& PhaseTransitionRun::cell(const std::string& method, int graph_size, int nonroot_rows) const {
  for (const auto& c : cells)
    if (c.method == method && c.graph_size == graph_size && c.nonroot_rows == nonroot_rows) return c;
  throw Error(ErrorKind::InvalidSize, "no phase-transition cell " + method + " n=" + std::to_string(graph_size) +
                                          " N_v=" + std::to_string(nonroot_rows));
}

PhaseTransitionRun run_phase_transition(const PhaseTransitionConfig& cfg) {
  const int root_rows = cfg.root_rows > 0 ? cfg.root_rows : root_sample_size(cfg.s, cfg.d);
  const std::uint64_t tag = family_tag(cfg.topology);
  for (const auto& m : cfg.methods)
    if (m != "tvbp" && m != "independent_bp" && m != "stepwise_bp")
      throw Error(ErrorKind::Parse, "unknown phase-transition method '" + m + "'");

  struct Task {
    int size, nv, rep;
  };
  std::vector<Task> tasks;
  for (int n : cfg.sizes)
    for (int nv : cfg.nonroot_rows)
      for (int rep = 0; rep < cfg.reps; ++rep) tasks.push_back({n, nv, rep});
  const std::size_t nm = cfg.methods.size();
  std::vector<PhaseRep> slots(nm * tasks.size());

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(tasks.size()); ++t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const std::uint64_t seed = Rng::derive(cfg.seed, tag, static_cast<std::uint64_t>(task.size),
                                           Rng::derive(static_cast<std::uint64_t>(task.nv), static_cast<std::uint64_t>(task.rep)));
    std::string setup_error;
    Instance in{make_path(1), {}, {}, {}, {}};
    try {
      in = make_instance(make_topology(cfg.topology, task.size), cfg.d, cfg.s, cfg.s_prime, root_rows, task.nv, false,
                         false, SignalScheme::DisjointPm1, 0.0, seed);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (std::size_t m = 0; m < nm; ++m) {
      PhaseRep& r = slots[m * tasks.size() + static_cast<std::size_t>(t)];
      r.method = cfg.methods[m];
      r.graph_size = task.size;
      r.nonroot_rows = task.nv;
      r.rep = task.rep;
      r.seed = seed;
      r.max_relative_error = std::numeric_limits<double>::quiet_NaN();
      if (!setup_error.empty()) {
        r.failure = setup_error;
        continue;
      }
      try {
        SolveResult res = r.method == "tvbp"             ? tvbp(in.g, in.designs, in.meas, cfg.backend)
                          : r.method == "independent_bp" ? independent_bp(in.designs, in.meas, cfg.backend)
                                                         : stepwise_bp(in.g, in.designs, in.meas, cfg.backend);
        evaluate_recovery(res, in.truth);
        r.recovered = res.all_recovered();
        r.farthest_recovered = res.recovered[static_cast<std::size_t>(farthest_node(in.g) - 1)];
        double worst = 0.0;
        for (std::size_t v = 0; v < in.truth.size(); ++v)
          worst = std::max(worst, relative_error(res.nodes[v], in.truth[v]));
        r.max_relative_error = worst;
      } catch (const std::exception& e) {
        r.failure = e.what();
      }
    }
  }

  PhaseTransitionRun run;
  run.reps = std::move(slots);
  for (const auto& m : cfg.methods)
    for (int n : cfg.sizes)
      for (int nv : cfg.nonroot_rows) {
        std::vector<double> all;
        std::vector<double> far;
        for (const auto& r : run.reps)
          if (r.method == m && r.graph_size == n && r.nonroot_rows == nv) {
            all.push_back(r.recovered ? 1.0 : 0.0);
            far.push_back(r.farthest_recovered ? 1.0 : 0.0);
          }
        run.cells.push_back({m, n, nv, aggregate(all), aggregate(far)});
      }
  return run;
}

void write_phase_transition_csv(std::ostream& os, const PhaseTransitionConfig& cfg, const PhaseTransitionRun& run) {
  const int root_rows = cfg.root_rows > 0 ? cfg.root_rows : root_sample_size(cfg.s, cfg.d);
  CsvWriter w(os, "phase_transition",
              {"method", "topology", "graph_size", "N_v", "recovery_probability", "stderr", "farthest_probability",
               "farthest_stderr", "reps", "seed"},
              {seed_comment(cfg.seed), "d=" + str(cfg.d) + " s=" + str(cfg.s) + " s_prime=" + str(cfg.s_prime) +
                                           " N_1=" + str(root_rows) + " backend=" + to_string(cfg.backend),
               "per-replication rows and cell seeds: matching .reps.csv"});
  for (const auto& c : run.cells)
    w.row({c.method, cfg.topology, str(c.graph_size), str(c.nonroot_rows), str(c.recovery.mean),
           str(c.recovery.std_error), str(c.farthest.mean), str(c.farthest.std_error), str(c.recovery.count),
           str(cfg.seed)});
}

void write_phase_transition_reps_csv(std::ostream& os, const PhaseTransitionConfig& cfg, const PhaseTransitionRun& run) {
  CsvWriter w(os, "phase_transition_reps",
              {"method", "topology", "graph_size", "N_v", "rep", "seed", "recovered", "farthest_recovered",
               "max_relative_error", "failure"},
              {seed_comment(cfg.seed)});
  for (const auto& r : run.reps)
    w.row({r.method, cfg.topology, str(r.graph_size), str(r.nonroot_rows), str(r.rep), str(r.seed), str(r.recovered),
           str(r.farthest_recovered), str(r.max_relative_error), sanitize(r.failure)});
}

// --- convergence -------------------------------------------------------------

const ConvergenceCell& ConvergenceRun::cell(const std::string& topology, int n, int rep) const {
  for (const auto& c : cells)
    if (c.topology == topology && c.n == n && c.rep == rep) return c;
  throw Error(ErrorKind::InvalidSize, "no convergence cell " + topology + " n=" + std::to_string(n));
}

ConvergenceRun run_convergence(const ConvergenceConfig& cfg) {
  const int s = cfg.s > 0 ? cfg.s : cfg.d / 10;
  const int root_rows = cfg.root_rows > 0 ? cfg.root_rows : root_sample_size(s, cfg.d);
  ConvergenceRun run;
  for (const auto& topo : cfg.topologies)
    for (int n : cfg.sizes)
      for (int rep = 0; rep < cfg.reps; ++rep) {
        ConvergenceCell c;
        c.topology = topo;
        c.n = n;
        c.rep = rep;
        c.seed = Rng::derive(cfg.seed, family_tag(topo), static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(rep));
        run.cells.push_back(std::move(c));
      }

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(run.cells.size()); ++i) {
    auto& c = run.cells[static_cast<std::size_t>(i)];
    try {
      const auto in = make_instance(make_topology(c.topology, c.n), cfg.d, s, cfg.s_prime, root_rows, cfg.nonroot_rows,
                                    false, false, SignalScheme::GaussianDiffs, 0.0, c.seed);
      const auto ref = tvbp(in.g, in.designs, in.meas, BpBackend::Admm);
      c.reference_certified = ref.certified;
      if (!ref.certified) {
        c.failure = "reference not certified (" + ref.info.status + ")";
        continue;
      }
      c.trace = run_admm(in.g, in.designs, in.meas, cfg.admm, ref.stacked).trace;
    } catch (const std::exception& e) {
      c.failure = e.what();
    }
  }
  return run;
}

void write_convergence_csv(std::ostream& os, const ConvergenceConfig& cfg, const ConvergenceRun& run) {
  const int s = cfg.s > 0 ? cfg.s : cfg.d / 10;
  const int root_rows = cfg.root_rows > 0 ? cfg.root_rows : root_sample_size(s, cfg.d);
  std::vector<std::string> comments{
      seed_comment(cfg.seed),
      "d=" + str(cfg.d) + " s=" + str(s) + " s_prime=" + str(cfg.s_prime) + " N_1=" + str(root_rows) +
          " N_v=" + str(cfg.nonroot_rows) + " rho=" + str(cfg.admm.rho) + " schedule=" + to_string(cfg.admm.schedule),
      "reference: centralized tvbp, admm backend with dual certificate"};
  for (const auto& c : run.cells)
    if (!c.failure.empty())
      comments.push_back("failed cell " + c.topology + " n=" + str(c.n) + " seed=" + str(c.seed) + ": " + c.failure);
  CsvWriter w(os, "convergence", {"topology", "n", "rep", "seed", "round", "sq_error", "primal_residual", "messages"},
              comments);
  for (const auto& c : run.cells)
    for (std::size_t r = 0; r < c.trace.size(); ++r)
      w.row({c.topology, str(c.n), str(c.rep), str(c.seed), str(c.trace.round[r]), str(c.trace.sq_error_to_reference[r]),
             str(c.trace.primal_residual[r]), std::to_string(c.trace.messages[r])});
}

// --- noisy comparison ----------------------------------------------------------

const NoisyCell& NoisyRun::cell(const std::string& method, const std::string& topology, int n) const {
  for (const auto& c : cells)
    if (c.method == method && c.topology == topology && c.n == n) return c;
  throw Error(ErrorKind::InvalidSize, "no noisy cell " + method + " " + topology + " n=" + std::to_string(n));
}

NoisyRun run_noisy_comparison(const NoisyConfig& cfg) {
  for (const auto& m : cfg.methods)
    if (m != "tvbpd" && m != "group_lasso") throw Error(ErrorKind::Parse, "unknown noisy method '" + m + "'");
  struct Task {
    std::string topology;
    int n, branch, rep;
  };
  std::vector<Task> tasks;
  for (int n : cfg.path_sizes)
    for (int rep = 0; rep < cfg.reps; ++rep) tasks.push_back({"path", n, 0, rep});
  for (int b : cfg.tree_branches)
    for (int rep = 0; rep < cfg.reps; ++rep) tasks.push_back({"tree", 1 + b + b * b, b, rep});
  const auto lambdas = log_grid(cfg.lambda_min, cfg.lambda_max, cfg.lambda_points);
  const std::size_t nm = cfg.methods.size();
  std::vector<NoisyRep> slots(nm * tasks.size());

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(tasks.size()); ++t) {
    const Task& task = tasks[static_cast<std::size_t>(t)];
    const std::uint64_t seed = Rng::derive(cfg.seed, family_tag(task.topology), static_cast<std::uint64_t>(task.n),
                                           static_cast<std::uint64_t>(task.rep));
    std::string setup_error;
    Instance in{make_path(1), {}, {}, {}, {}};
    try {
      const Graph g = task.topology == "path" ? make_path(task.n) : make_balanced_tree(task.branch, 2);
      in = make_instance(g, cfg.d, cfg.s, cfg.s_prime, cfg.rows, cfg.rows, true, true, SignalScheme::DisjointPm1,
                         cfg.noise_sd, seed, cfg.eta_override);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (std::size_t m = 0; m < nm; ++m) {
      NoisyRep& r = slots[m * tasks.size() + static_cast<std::size_t>(t)];
      r.method = cfg.methods[m];
      r.topology = task.topology;
      r.n = task.n;
      r.rep = task.rep;
      r.seed = seed;
      r.eta = in.meas.noise_budget;
      r.l1_error = std::numeric_limits<double>::quiet_NaN();
      r.lambda = std::numeric_limits<double>::quiet_NaN();
      if (!setup_error.empty()) {
        r.failure = setup_error;
        continue;
      }
      try {
        if (r.method == "tvbpd") {
          r.l1_error = l1_error(tvbpd(in.g, in.designs, in.meas, in.meas.noise_budget), in.truth);
        } else {
          const auto sweep = group_lasso_best(in.designs, in.meas, in.truth, lambdas);
          r.l1_error = l1_error(sweep.best, in.truth);
          r.lambda = sweep.best_lambda;
        }
      } catch (const std::exception& e) {
        r.failure = e.what();
      }
    }
  }

  NoisyRun run;
  run.reps = std::move(slots);
  std::vector<std::pair<std::string, int>> sizes;
  for (int n : cfg.path_sizes) sizes.emplace_back("path", n);
  for (int b : cfg.tree_branches) sizes.emplace_back("tree", 1 + b + b * b);
  for (const auto& m : cfg.methods)
    for (const auto& [topo, n] : sizes) {
      std::vector<double> errs;
      for (const auto& r : run.reps)
        if (r.method == m && r.topology == topo && r.n == n && r.failure.empty()) errs.push_back(r.l1_error);
      run.cells.push_back({m, topo, n, aggregate(errs)});
    }
  return run;
}

void write_noisy_csv(std::ostream& os, const NoisyConfig& cfg, const NoisyRun& run) {
  CsvWriter w(os, "noisy", {"method", "topology", "n", "l1_error", "stderr", "reps", "seed"},
              {seed_comment(cfg.seed),
               "d=" + str(cfg.d) + " s=" + str(cfg.s) + " s_prime=" + str(cfg.s_prime) + " N_v=" + str(cfg.rows) +
                   " noise_sd=" + str(cfg.noise_sd) + " eta=sqrt(N_v n) noise_sd" +
                   (cfg.eta_override >= 0 ? " overridden to " + str(cfg.eta_override) : std::string()),
               "group lasso: best l1 error over " + str(cfg.lambda_points) + " log-spaced lambdas in [" +
                   str(cfg.lambda_min) + " " + str(cfg.lambda_max) + "]"});
  for (const auto& c : run.cells)
    w.row({c.method, c.topology, str(c.n), str(c.l1.mean), str(c.l1.std_error), str(c.l1.count), str(cfg.seed)});
}

void write_noisy_reps_csv(std::ostream& os, const NoisyConfig& cfg, const NoisyRun& run) {
  CsvWriter w(os, "noisy_reps", {"method", "topology", "n", "rep", "seed", "eta", "lambda", "l1_error", "failure"},
              {seed_comment(cfg.seed)});
  for (const auto& r : run.reps)
    w.row({r.method, r.topology, str(r.n), str(r.rep), str(r.seed), str(r.eta), str(r.lambda), str(r.l1_error),
           sanitize(r.failure)});
}

// --- unmixing demo -------------------------------------------------------------

UnmixRun run_unmix(const UnmixConfig& cfg) {
  if (cfg.rows < 1 || cfg.cols < 1 || cfg.bands < 1 || cfg.library < 1)
    throw Error(ErrorKind::InvalidSize, "unmix grid, bands and library must be positive");
  const int n = cfg.rows * cfg.cols;
  auto id = [&](int r, int c) { return r * cfg.cols + c + 1; };
  std::vector<Edge> edges;
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c) {
      if (c > 0)
        edges.push_back({id(r, c - 1), id(r, c)});
      else if (r > 0)
        edges.push_back({id(r - 1, 0), id(r, 0)});
    }
  const Graph g = Graph::from_edges(n, std::move(edges));
  const Instance in = make_instance(g, cfg.library, cfg.s, cfg.s_prime, cfg.bands, cfg.bands, true, true,
                                    SignalScheme::GaussianDiffs, cfg.noise_sd, cfg.seed);
  UnmixRun run;
  run.truth = in.truth;
  run.grid.rows = cfg.rows;
  run.grid.cols = cfg.cols;
  run.grid.y = in.meas.responses;
  run.eta_tile = std::sqrt(4.0 * cfg.bands) * cfg.noise_sd;
  run.eta_pixel = std::sqrt(static_cast<double>(cfg.bands)) * cfg.noise_sd;
  run.tiled = tiled_tvbpd(run.grid, in.designs.matrix(1), run.eta_tile, cfg.admm);
  run.independent = independent_bpdn(in.designs, in.meas, run.eta_pixel, cfg.admm);
  for (int p = 0; p < n; ++p) {
    const auto& truth = run.truth[static_cast<std::size_t>(p)];
    run.tiled_l1.push_back((run.tiled.coefficients[static_cast<std::size_t>(p)] - truth).lpNorm<1>());
    run.independent_l1.push_back((run.independent.nodes[static_cast<std::size_t>(p)] - truth).lpNorm<1>());
  }
  return run;
}

void write_unmix_csv(std::ostream& os, const UnmixConfig& cfg, const UnmixRun& run) {
  std::vector<std::string> comments{
      seed_comment(cfg.seed),
      "grid=" + str(cfg.rows) + "x" + str(cfg.cols) + " bands=" + str(cfg.bands) + " library=" + str(cfg.library) +
          " s=" + str(cfg.s) + " s_prime=" + str(cfg.s_prime) + " noise_sd=" + str(cfg.noise_sd),
      "eta_tile=" + str(run.eta_tile) + " eta_pixel=" + str(run.eta_pixel)};
  for (const auto& e : run.tiled.tile_errors) comments.push_back("tile failure: " + sanitize(e));
  CsvWriter w(os, "unmix", {"method", "row", "col", "seed", "l1_error"}, comments);
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c)
      w.row({"tiled_tvbpd", str(r), str(c), str(cfg.seed), str(run.tiled_l1[static_cast<std::size_t>(r * cfg.cols + c)])});
  for (int r = 0; r < cfg.rows; ++r)
    for (int c = 0; c < cfg.cols; ++c)
      w.row({"independent_bpdn", str(r), str(c), str(cfg.seed),
             str(run.independent_l1[static_cast<std::size_t>(r * cfg.cols + c)])});
}

void write_unmix_maps_csv(std::ostream& os, const UnmixConfig& cfg, const UnmixRun& run) {
  CsvWriter w(os, "unmix_maps", {"method", "row", "col", "atom", "estimate", "truth", "seed"}, {seed_comment(cfg.seed)});
  const std::pair<const char*, const std::vector<Vector>*> methods[] = {{"tiled_tvbpd", &run.tiled.coefficients},
                                                                        {"independent_bpdn", &run.independent.nodes}};
  for (const auto& [name, est] : methods)
    for (int r = 0; r < cfg.rows; ++r)
      for (int c = 0; c < cfg.cols; ++c) {
        const auto p = static_cast<std::size_t>(r * cfg.cols + c);
        for (int a = 0; a < cfg.library; ++a)
          w.row({name, str(r), str(c), str(a), str((*est)[p](a)), str(run.truth[p](a)), str(cfg.seed)});
      }
}

// --- verification suite ----------------------------------------------------------

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::ExpectedFail: return "expected-fail";
    case Outcome::UnexpectedPass: return "unexpected-pass";
  }
  return "?";
}

bool VerifyRun::ok() const {
  return std::none_of(rows.begin(), rows.end(),
                      [](const VerifyRow& r) { return r.outcome == Outcome::Fail || r.outcome == Outcome::UnexpectedPass; });
}

VerifyRun run_verify_suite(const VerifyConfig& cfg) {
  VerifyRun run;
  auto add = [&run](std::string check, std::string fixture, std::uint64_t seed, double value, double threshold, bool pass) {
    run.rows.push_back({std::move(check), std::move(fixture), seed, value, threshold, pass ? Outcome::Pass : Outcome::Fail});
  };
  // Budgets are checked before any work so an oversized request fails cleanly.
  for (int k = 1; k <= cfg.rip_max_k; ++k)
    if (kernels::binomial(cfg.rip_d, k) > kRipSupportBudget)
      throw Error(ErrorKind::BudgetExceeded, "RIP audit needs C(" + std::to_string(cfg.rip_d) + "," +
                                                 std::to_string(k) + ") supports, over the brute-force budget");

  {
    const std::uint64_t seed = Rng::derive(cfg.seed, 10);
    const Matrix q =
        Eigen::HouseholderQR<Matrix>(gen_design(cfg.rip_rows, cfg.rip_d, seed)).householderQ() *
        Matrix::Identity(cfg.rip_rows, std::min(cfg.rip_rows, cfg.rip_d));
    double worst = 0.0;
    for (int k = 1; k <= std::min<int>(cfg.rip_max_k, static_cast<int>(q.cols())); ++k)
      worst = std::max(worst, rip_constant(q, k).delta_k);
    add("rip_orthonormal", "QR columns", seed, worst, 1e-12, worst <= 1e-12);
  }
  for (int i = 0; i < cfg.rip_matrices; ++i) {
    const std::uint64_t seed = Rng::derive(cfg.seed, 11, static_cast<std::uint64_t>(i));
    const Matrix a = gen_design(cfg.rip_rows, cfg.rip_d, seed);
    double drop = 0.0;
    double disagreement = 0.0;
    double prev = 0.0;
    for (int k = 1; k <= cfg.rip_max_k; ++k) {
      const double dk = rip_constant(a, k).delta_k;
      drop = std::max(drop, prev - dk);
      disagreement = std::max(disagreement, std::abs(dk - rip_by_svd(a, k)));
      prev = dk;
    }
    const std::string fixture = std::to_string(cfg.rip_rows) + "x" + std::to_string(cfg.rip_d) + " gaussian";
    add("rip_monotone", fixture, seed, drop, 1e-12, drop <= 1e-12);
    add("rip_svd_agreement", fixture, seed, disagreement, 1e-10, disagreement <= 1e-10);
  }

  int violations = 0;
  int strict = 0;
  for (int i = 0; i < cfg.rnsp_instances; ++i) {
    const std::uint64_t seed = Rng::derive(cfg.seed, 12, static_cast<std::uint64_t>(i));
    Rng rng(seed);
    const Matrix a = gen_design(6, 10, Rng::derive(seed, 1));
    Vector x = Vector::Zero(10);
    x(static_cast<Eigen::Index>(rng() % 10)) = rng.normal();
    const auto audit = recovery_iff_rnsp(a, x);
    const bool violated = audit.rnsp_holds && !audit.bp_recovers;
    strict += audit.rnsp_holds ? 1 : 0;
    violations += violated ? 1 : 0;
    add("rnsp_implies_recovery", "6x10 1-sparse", seed, audit.max_ratio, 0.5 - kRnspMargin, !violated);
  }
  add("rnsp_implies_recovery_total", "violations among " + std::to_string(strict) + " strict-RNSP instances",
      cfg.seed, violations, 0.0, violations == 0);

  const Graph path4 = make_path(4);
  for (int i = 0; i < cfg.kernel_fixtures; ++i) {
    const std::uint64_t seed = Rng::derive(cfg.seed, 13, static_cast<std::uint64_t>(i));
    const auto shared = gen_designs(4, 10, 6, 4, true, seed);
    const auto ok = kernel_condition_check(AugmentedSystem(path4, shared), path4, true);
    add("kernel_condition_shared", "path n=4 d=10 N_v=4", seed, std::max(ok.max_root_residual, ok.max_edge_residual),
        ok.tolerance, ok.passed);
    const std::uint64_t seed2 = Rng::derive(cfg.seed, 14, static_cast<std::uint64_t>(i));
    const auto distinct = gen_designs(4, 10, 6, 4, false, seed2);
    const auto bad = kernel_condition_check(AugmentedSystem(path4, distinct), path4, false);
    run.rows.push_back({"kernel_condition_distinct", "path n=4 d=10 N_v=4 distinct designs", seed2,
                        bad.max_edge_residual, bad.tolerance, bad.passed ? Outcome::UnexpectedPass : Outcome::ExpectedFail});
  }

  for (int i = 0; i < cfg.shelling_matrices; ++i) {
    const std::uint64_t seed = Rng::derive(cfg.seed, 15, static_cast<std::uint64_t>(i));
    const Matrix b = gen_design(14, 16, seed);
    const Matrix ker = null_space(b);
    Rng rng(Rng::derive(seed, 1));
    double worst = 0.0;
    for (int k = 1; k <= 2; ++k) {
      const double dk = rip_constant(b, k).delta_k;
      const double d2k = rip_constant(b, 2 * k).delta_k;
      if (dk >= 1.0) continue;
      for (int t = 0; t < 50; ++t) {
        Vector z(ker.cols());
        for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.normal();
        const auto c = shelling_check(ker * z, k, dk, d2k);
        worst = std::max(worst, c.rhs > 0 ? c.lhs / c.rhs : std::numeric_limits<double>::infinity());
      }
    }
    add("shelling_bound", "14x16 gaussian kernel vectors", seed, worst, 1.0, worst <= 1.0 + 1e-12);
  }
  return run;
}

void write_verify_csv(std::ostream& os, const VerifyConfig& cfg, const VerifyRun& run) {
  CsvWriter w(os, "verify", {"check", "fixture", "seed", "value", "threshold", "outcome"},
              {seed_comment(cfg.seed), std::string("suite ") + (run.ok() ? "passed" : "FAILED")});
  for (const auto& r : run.rows)
    w.row({r.check, sanitize(r.fixture), str(r.seed), str(r.value), str(r.threshold), to_string(r.outcome)});
}

// --- single solve --------------------------------------------------------------

SolveRun run_solve(const SolveConfig& cfg) {
  const int root_rows = cfg.root_rows > 0 ? cfg.root_rows : root_sample_size(cfg.s, cfg.d);
  Graph g = make_path(1);
  if (cfg.graph_file.empty()) {
    g = make_topology(cfg.topology, cfg.n);
  } else {
    std::ifstream f(cfg.graph_file);
    if (!f) throw Error(ErrorKind::Parse, "cannot open graph file " + cfg.graph_file);
    std::stringstream text;
    text << f.rdbuf();
    g = parse_edge_list(text.str());
  }
  const Instance in = make_instance(g, cfg.d, cfg.s, cfg.s_prime, root_rows,
                                    cfg.nonroot_rows, cfg.shared_nonroot, false, cfg.scheme, cfg.noise_sd, cfg.seed);
  SolveRun run;
  run.truth = in.truth;
  const auto& m = cfg.method;
  if (m == "tvbp") {
    run.result = tvbp(in.g, in.designs, in.meas, cfg.backend);
  } else if (m == "tvbpd") {
    run.result = tvbpd(in.g, in.designs, in.meas, in.meas.noise_budget);
  } else if (m == "independent_bp") {
    run.result = independent_bp(in.designs, in.meas, cfg.backend);
  } else if (m == "stepwise_bp") {
    run.result = stepwise_bp(in.g, in.designs, in.meas, cfg.backend);
  } else if (m == "group_lasso") {
    run.result = group_lasso(in.designs, in.meas, cfg.lambda);
  } else if (m == "admm") {
    auto admm = run_admm(in.g, in.designs, in.meas, DistributedConfig{});
    run.result = std::move(admm.result);
  } else {
    throw Error(ErrorKind::Parse, "unknown method '" + m + "'");
  }
  evaluate_recovery(run.result, run.truth);
  run.l1 = l1_error(run.result, run.truth);
  return run;
}

void write_solve_summary_csv(std::ostream& os, const SolveConfig& cfg, const SolveRun& run) {
  CsvWriter w(os, "solve", {"method", "n", "d", "s", "s_prime", "N_v", "seed", "recovered", "l1_error", "iters", "seconds"},
              {"topology=" + cfg.topology + " backend=" + to_string(cfg.backend) + " noise_sd=" + str(cfg.noise_sd)});
  w.row({cfg.method, str(static_cast<int>(run.truth.size())), str(cfg.d), str(cfg.s), str(cfg.s_prime), str(cfg.nonroot_rows), str(cfg.seed),
         str(run.result.all_recovered()), str(run.l1), str(run.result.iterations), str(run.result.seconds)});
}

Container to_container(const SolveConfig& cfg, const SolveRun& run) {
  nlohmann::json meta{{"method", cfg.method}, {"topology", cfg.topology}, {"n", run.truth.size()},      {"d", cfg.d},
                      {"s", cfg.s},           {"s_prime", cfg.s_prime},   {"N_v", cfg.nonroot_rows},
                      {"seed", cfg.seed},     {"noise_sd", cfg.noise_sd}, {"objective", run.result.objective},
                      {"residual", run.result.residual}, {"l1_error", run.l1}, {"status", run.result.info.status}};
  Container c;
  c.meta_json = meta.dump();
  const int n = static_cast<int>(run.truth.size());
  Matrix est(cfg.d, n);
  Matrix truth(cfg.d, n);
  for (int v = 0; v < n; ++v) {
    est.col(v) = run.result.nodes[static_cast<std::size_t>(v)];
    truth.col(v) = run.truth[static_cast<std::size_t>(v)];
  }
  c.arrays.push_back({"estimates", est});
  c.arrays.push_back({"truth", truth});
  if (run.result.stacked.size() > 0) c.arrays.push_back({"stacked", run.result.stacked});
  return c;
}

// --- config readers ------------------------------------------------------------

PhaseTransitionConfig phase_transition_config(const KeyValueConfig& kv) {
  PhaseTransitionConfig c;
  c.topology = kv.get("topology", c.topology);
  family_tag(c.topology);
  c.sizes = kv.get_int_list("sizes", c.sizes);
  c.nonroot_rows = kv.get_int_list("nv", c.nonroot_rows);
  c.d = get_int(kv, "d", c.d);
  c.s = get_int(kv, "s", c.s);
  c.s_prime = get_int(kv, "s_prime", c.s_prime);
  c.root_rows = get_int(kv, "root_rows", c.root_rows);
  c.reps = get_int(kv, "reps", c.reps);
  c.seed = get_seed(kv, c.seed);
  c.methods = kv.get_list("methods", c.methods);
  c.backend = parse_backend(kv.get("backend", to_string(c.backend)));
  require_positive(c.sizes, "sizes");
  require_positive(c.nonroot_rows, "nv");
  require(c.reps >= 1, "reps must be at least 1");
  require(!c.methods.empty(), "methods must not be empty");
  require(c.d >= 1 && c.s >= 0 && c.s_prime >= 0 && c.root_rows >= 0, "d, s, s_prime, root_rows out of range");
  return c;
}

ConvergenceConfig convergence_config(const KeyValueConfig& kv) {
  ConvergenceConfig c;
  c.topologies = kv.get_list("topologies", c.topologies);
  for (const auto& t : c.topologies) family_tag(t);
  c.sizes = kv.get_int_list("sizes", c.sizes);
  c.d = get_int(kv, "d", c.d);
  c.s = get_int(kv, "s", c.s);
  c.s_prime = get_int(kv, "s_prime", c.s_prime);
  c.root_rows = get_int(kv, "root_rows", c.root_rows);
  c.nonroot_rows = get_int(kv, "nv", c.nonroot_rows);
  c.reps = get_int(kv, "reps", c.reps);
  c.seed = get_seed(kv, c.seed);
  c.admm.rho = kv.get_double("rho", c.admm.rho);
  c.admm.rounds = get_int(kv, "rounds", c.admm.rounds);
  c.admm.schedule = parse_schedule(kv.get("schedule", to_string(c.admm.schedule)));
  c.admm.root.max_iters = get_int(kv, "root_iters", c.admm.root.max_iters);
  require(!c.topologies.empty(), "topologies must not be empty");
  require_positive(c.sizes, "sizes");
  require(c.reps >= 1 && c.admm.rounds >= 0 && c.admm.rho > 0 && c.nonroot_rows >= 1,
          "reps, rounds, rho, nv out of range");
  return c;
}

NoisyConfig noisy_config(const KeyValueConfig& kv) {
  NoisyConfig c;
  c.path_sizes = kv.get_int_list("path_sizes", c.path_sizes);
  c.tree_branches = kv.get_int_list("tree_branches", c.tree_branches);
  c.d = get_int(kv, "d", c.d);
  c.s = get_int(kv, "s", c.s);
  c.s_prime = get_int(kv, "s_prime", c.s_prime);
  c.rows = get_int(kv, "nv", c.rows);
  c.noise_sd = kv.get_double("noise_sd", c.noise_sd);
  c.eta_override = kv.get_double("eta", c.eta_override);
  c.reps = get_int(kv, "reps", c.reps);
  c.seed = get_seed(kv, c.seed);
  c.lambda_min = kv.get_double("lambda_min", c.lambda_min);
  c.lambda_max = kv.get_double("lambda_max", c.lambda_max);
  c.lambda_points = get_int(kv, "lambda_points", c.lambda_points);
  c.methods = kv.get_list("methods", c.methods);
  for (int n : c.path_sizes) require(n > 0, "path_sizes values must be positive");
  for (int b : c.tree_branches) require(b > 0, "tree_branches values must be positive");
  require(!c.path_sizes.empty() || !c.tree_branches.empty(), "no graph sizes configured");
  require(c.reps >= 1 && c.noise_sd >= 0 && c.rows >= 1, "reps, noise_sd, nv out of range");
  require(c.lambda_min > 0 && c.lambda_max >= c.lambda_min && c.lambda_points >= 1, "invalid lambda grid");
  require(!c.methods.empty(), "methods must not be empty");
  return c;
}

UnmixConfig unmix_config(const KeyValueConfig& kv) {
  UnmixConfig c;
  c.rows = get_int(kv, "rows", c.rows);
  c.cols = get_int(kv, "cols", c.cols);
  c.bands = get_int(kv, "bands", c.bands);
  c.library = get_int(kv, "library", c.library);
  c.s = get_int(kv, "s", c.s);
  c.s_prime = get_int(kv, "s_prime", c.s_prime);
  c.noise_sd = kv.get_double("noise_sd", c.noise_sd);
  c.seed = get_seed(kv, c.seed);
  c.admm.max_iters = get_int(kv, "max_iters", c.admm.max_iters);
  require(c.rows >= 1 && c.cols >= 1 && c.bands >= 1 && c.library >= 1 && c.noise_sd >= 0,
          "rows, cols, bands, library, noise_sd out of range");
  return c;
}

VerifyConfig verify_config(const KeyValueConfig& kv) {
  VerifyConfig c;
  c.seed = get_seed(kv, c.seed);
  c.rip_matrices = get_int(kv, "rip_matrices", c.rip_matrices);
  c.rip_rows = get_int(kv, "rip_rows", c.rip_rows);
  c.rip_d = get_int(kv, "rip_d", c.rip_d);
  c.rip_max_k = get_int(kv, "rip_max_k", c.rip_max_k);
  c.rnsp_instances = get_int(kv, "rnsp_instances", c.rnsp_instances);
  c.kernel_fixtures = get_int(kv, "kernel_fixtures", c.kernel_fixtures);
  c.shelling_matrices = get_int(kv, "shelling_matrices", c.shelling_matrices);
  require(c.rip_rows >= 1 && c.rip_d >= 1 && c.rip_max_k >= 1 && c.rip_max_k <= c.rip_d, "invalid RIP audit sizes");
  require(c.rip_matrices >= 0 && c.rnsp_instances >= 0 && c.kernel_fixtures >= 0 && c.shelling_matrices >= 0,
          "fixture counts must be non-negative");
  return c;
}

SolveConfig solve_config(const KeyValueConfig& kv) {
  SolveConfig c;
  c.method = kv.get("method", c.method);
  c.topology = kv.get("topology", c.topology);
  family_tag(c.topology);
  c.n = get_int(kv, "n", c.n);
  c.graph_file = kv.get("graph", c.graph_file);
  c.d = get_int(kv, "d", c.d);
  c.s = get_int(kv, "s", c.s);
  c.s_prime = get_int(kv, "s_prime", c.s_prime);
  c.root_rows = get_int(kv, "root_rows", c.root_rows);
  c.nonroot_rows = get_int(kv, "nv", c.nonroot_rows);
  c.noise_sd = kv.get_double("noise_sd", c.noise_sd);
  c.lambda = kv.get_double("lambda", c.lambda);
  c.shared_nonroot = kv.get_bool("shared_nonroot", c.shared_nonroot);
  c.scheme = parse_scheme(kv.get("scheme", "disjoint_pm1"));
  c.backend = parse_backend(kv.get("backend", to_string(c.backend)));
  c.seed = get_seed(kv, c.seed);
  require(c.n >= 1 && c.d >= 1 && c.nonroot_rows >= 1 && c.noise_sd >= 0 && c.lambda >= 0, "solve sizes out of range");
  return c;
}

}  // namespace tvp
