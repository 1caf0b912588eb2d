#pragma once

// Seeded batch experiments behind the command-line verbs. Every cell derives
// its own seed from the base seed and its coordinates, cells run in parallel,
// and rows are emitted in a fixed cell order so reruns are byte-identical apart
// from the generated_at comment.

#include "tvpursuit/common.hpp"
#include "tvpursuit/distributed.hpp"
#include "tvpursuit/graph.hpp"
#include "tvpursuit/io.hpp"
#include "tvpursuit/optim.hpp"
#include "tvpursuit/problem_gen.hpp"
#include "tvpursuit/solvers.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace tvp {

/// "path" (n nodes) or "tree" (balanced binary, n = 2^(h+1) - 1).
Graph make_topology(const std::string& family, int n);

struct Aggregate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(count); 0 for one sample
  int count = 0;
};
Aggregate aggregate(const std::vector<double>& values);

// ---------------------------------------------------------------------------

struct PhaseTransitionConfig {
  std::string topology = "path";
  std::vector<int> sizes{2, 4, 8};
  std::vector<int> nonroot_rows{8, 16, 24, 32, 40, 48, 56, 64};
  int d = 128;
  int s = 12;
  int s_prime = 4;
  int root_rows = 0;  // 0 selects root_sample_size(s, d)
  int reps = 20;
  std::uint64_t seed = 1;
  /// tvbp | independent_bp | stepwise_bp; all methods see the same instances.
  std::vector<std::string> methods{"tvbp", "independent_bp"};
  BpBackend backend = BpBackend::Lp;
};

struct PhaseRep {
  std::string method;
  int graph_size = 0;
  int nonroot_rows = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  bool recovered = false;           // every node within the recovery threshold
  bool farthest_recovered = false;  // the node farthest from the root
  double max_relative_error = 0.0;
  std::string failure;  // solver error, counted as non-recovery
};

struct PhaseCell {
  std::string method;
  int graph_size = 0;
  int nonroot_rows = 0;
  Aggregate recovery;
  Aggregate farthest;
};

struct PhaseTransitionRun {
  std::vector<PhaseRep> reps;  // method-major, then size, N_v, rep
  std::vector<PhaseCell> cells;

  const PhaseCell& cell(const std::string& method, int graph_size, int nonroot_rows) const;
};

PhaseTransitionRun run_phase_transition(const PhaseTransitionConfig& cfg);
/// Columns: method, topology, graph_size, N_v, recovery_probability, stderr,
/// farthest_probability, farthest_stderr, reps, seed.
void write_phase_transition_csv(std::ostream& os, const PhaseTransitionConfig& cfg, const PhaseTransitionRun& run);
/// One row per replication: method, topology, graph_size, N_v, rep, seed,
/// recovered, farthest_recovered, max_relative_error, failure.
void write_phase_transition_reps_csv(std::ostream& os, const PhaseTransitionConfig& cfg, const PhaseTransitionRun& run);

// ---------------------------------------------------------------------------

struct ConvergenceConfig {
  std::vector<std::string> topologies{"tree", "path"};
  std::vector<int> sizes{7, 15};
  int d = 512;
  int s = 0;          // 0 selects floor(0.1 d)
  int s_prime = 4;
  int root_rows = 0;  // 0 selects root_sample_size(s, d)
  int nonroot_rows = 150;
  int reps = 1;
  std::uint64_t seed = 1;
  DistributedConfig admm;  // rho 10, 500 rounds, colored schedule
};

struct ConvergenceCell {
  std::string topology;
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  RoundTrace trace;
  bool reference_certified = false;
  std::string failure;  // reference or run failure; the cell has no trace then
};

struct ConvergenceRun {
  std::vector<ConvergenceCell> cells;

  const ConvergenceCell& cell(const std::string& topology, int n, int rep = 0) const;
};

/// The reference is centralized TVBP by the ADMM backend, accepted only with a
/// dual certificate.
ConvergenceRun run_convergence(const ConvergenceConfig& cfg);
/// Columns: topology, n, rep, seed, round, sq_error, primal_residual, messages.
void write_convergence_csv(std::ostream& os, const ConvergenceConfig& cfg, const ConvergenceRun& run);

// ---------------------------------------------------------------------------

struct NoisyConfig {
  std::vector<int> path_sizes{2, 4, 8, 16};
  /// Balanced trees of height 2 with these branching rates (n = 1 + b + b^2).
  std::vector<int> tree_branches{2, 3};
  int d = 512;
  int s = 25;
  int s_prime = 4;
  int rows = 200;  // every node, root included
  double noise_sd = 0.1;
  /// eta = sqrt(rows * n) * noise_sd unless eta_override >= 0.
  double eta_override = -1.0;
  int reps = 5;
  std::uint64_t seed = 1;
  double lambda_min = 1e-6;
  double lambda_max = 1e-2;
  int lambda_points = 9;
  std::vector<std::string> methods{"tvbpd", "group_lasso"};
};

struct NoisyRep {
  std::string method;
  std::string topology;
  int n = 0;
  int rep = 0;
  std::uint64_t seed = 0;
  double eta = 0.0;
  double l1_error = 0.0;
  double lambda = 0.0;  // group lasso: best lambda on the grid
  std::string failure;
};

struct NoisyCell {
  std::string method;
  std::string topology;
  int n = 0;
  Aggregate l1;
};

struct NoisyRun {
  std::vector<NoisyRep> reps;
  std::vector<NoisyCell> cells;

  const NoisyCell& cell(const std::string& method, const std::string& topology, int n) const;
};

/// TVBPD against the best group lasso on the lambda grid, on one shared design
/// and disjoint +-1 signals.
NoisyRun run_noisy_comparison(const NoisyConfig& cfg);
/// Columns: method, topology, n, l1_error, stderr, reps, seed.
void write_noisy_csv(std::ostream& os, const NoisyConfig& cfg, const NoisyRun& run);
/// Columns: method, topology, n, rep, seed, eta, lambda, l1_error, failure.
void write_noisy_reps_csv(std::ostream& os, const NoisyConfig& cfg, const NoisyRun& run);

// ---------------------------------------------------------------------------

struct UnmixConfig {
  int rows = 8;     // pixel grid
  int cols = 8;
  int bands = 30;   // spectral measurements per pixel
  int library = 60; // dictionary atoms
  int s = 3;
  int s_prime = 1;
  double noise_sd = 0.01;
  std::uint64_t seed = 1;
  AdmmConfig admm;
};

struct UnmixRun {
  PixelGrid grid;
  std::vector<Vector> truth;  // row-major per pixel
  TiledResult tiled;
  SolveResult independent;
  std::vector<double> tiled_l1;        // per pixel
  std::vector<double> independent_l1;  // per pixel
  double eta_tile = 0.0;
  double eta_pixel = 0.0;
};

/// Synthetic abundances on a pixel grid: a (G, s, s')-sparse ensemble over the
/// comb tree (along each row from column 0, column 0 chained downwards),
/// observed through one shared library. Compares tiled TVBPD with per-pixel BPDN.
UnmixRun run_unmix(const UnmixConfig& cfg);
/// Columns: method, row, col, seed, l1_error.
void write_unmix_csv(std::ostream& os, const UnmixConfig& cfg, const UnmixRun& run);
/// Coefficient maps, columns: method, row, col, atom, estimate, truth, seed.
void write_unmix_maps_csv(std::ostream& os, const UnmixConfig& cfg, const UnmixRun& run);

// ---------------------------------------------------------------------------

struct VerifyConfig {
  std::uint64_t seed = 1;
  int rip_matrices = 20;
  int rip_rows = 12;
  int rip_d = 9;
  int rip_max_k = 4;
  int rnsp_instances = 100;  // 6 x 10, 1-sparse
  int kernel_fixtures = 20;  // path n = 4, d = 10, N_v = 4
  int shelling_matrices = 10;
};

enum class Outcome { Pass, Fail, ExpectedFail, UnexpectedPass };
const char* to_string(Outcome o);

struct VerifyRow {
  std::string check;
  std::string fixture;
  std::uint64_t seed = 0;
  double value = 0.0;
  double threshold = 0.0;
  Outcome outcome = Outcome::Pass;
};

struct VerifyRun {
  std::vector<VerifyRow> rows;
  bool ok() const;  // no Fail and no UnexpectedPass
};

/// RIP, RNSP, kernel-condition, shelling-bound and recovery audits over
/// seeded fixtures. Budget violations propagate as BudgetExceeded.
VerifyRun run_verify_suite(const VerifyConfig& cfg);
/// Columns: check, fixture, seed, value, threshold, outcome.
void write_verify_csv(std::ostream& os, const VerifyConfig& cfg, const VerifyRun& run);

// ---------------------------------------------------------------------------

struct SolveConfig {
  std::string method = "tvbp";  // tvbp | tvbpd | independent_bp | stepwise_bp | group_lasso | admm
  std::string topology = "path";
  int n = 4;
  /// Edge-list file ("n <count>" then "v w" lines); overrides topology and n.
  std::string graph_file;
  int d = 128;
  int s = 12;
  int s_prime = 4;
  int root_rows = 0;
  int nonroot_rows = 48;
  double noise_sd = 0.0;
  double lambda = 1e-3;  // group lasso
  bool shared_nonroot = false;
  SignalScheme scheme = SignalScheme::DisjointPm1;
  BpBackend backend = BpBackend::Lp;
  std::uint64_t seed = 1;
};

struct SolveRun {
  SolveResult result;
  std::vector<Vector> truth;
  double l1 = 0.0;
};

SolveRun run_solve(const SolveConfig& cfg);
/// One-line summary: method, n, d, s, s_prime, N_v, seed, recovered, l1_error, iters, seconds.
void write_solve_summary_csv(std::ostream& os, const SolveConfig& cfg, const SolveRun& run);
/// Arrays "estimates" (d x n), "stacked" and "truth" (d x n), with the
/// configuration in the metadata.
Container to_container(const SolveConfig& cfg, const SolveRun& run);

// ---------------------------------------------------------------------------

/// Config readers: every key is optional and falls back to the defaults above.
/// Throw Parse on malformed values.
PhaseTransitionConfig phase_transition_config(const KeyValueConfig& kv);
ConvergenceConfig convergence_config(const KeyValueConfig& kv);
NoisyConfig noisy_config(const KeyValueConfig& kv);
UnmixConfig unmix_config(const KeyValueConfig& kv);
VerifyConfig verify_config(const KeyValueConfig& kv);
SolveConfig solve_config(const KeyValueConfig& kv);

/// Drops comment lines starting with "# generated_at=" so CSV bodies can be
/// compared across reruns.
std::string strip_timestamp(const std::string& csv);

}  // namespace tvp
