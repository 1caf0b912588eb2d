// Command-line runner for the seeded experiments.
//
//   tvpursuit <verb> [--config file] [--set key=value]... [--out path]
//
// Exit codes: 0 success, 1 solver or experiment failure, 2 configuration
// error, 3 verification failure.

#include "tvpursuit/experiments.hpp"
#include "tvpursuit/verification.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitVerify = 3;

struct Options {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

// "-" or an empty path writes to stdout.
class Output {
 public:
  explicit Output(const std::string& path) : path_(path) {
    if (!to_stdout()) {
      file_.open(path);
      if (!file_) throw tvp::Error(tvp::ErrorKind::Parse, "cannot open output " + path);
    }
  }
  std::ostream& stream() { return to_stdout() ? std::cout : file_; }

  // Companion files sit next to the main output; none are written for stdout.
  std::string sibling(const std::string& suffix) const {
    if (to_stdout()) return {};
    const auto dot = path_.rfind(".csv");
    const std::string stem = dot == std::string::npos ? path_ : path_.substr(0, dot);
    return stem + suffix;
  }

 private:
  bool to_stdout() const { return path_.empty() || path_ == "-"; }
  std::string path_;
  std::ofstream file_;
};

template <class Cfg, class Run, class Writer>
void write_sibling(const Output& out, const std::string& suffix, const Cfg& cfg, const Run& run, Writer write) {
  const auto path = out.sibling(suffix);
  if (path.empty()) return;
  std::ofstream f(path);
  if (!f) throw tvp::Error(tvp::ErrorKind::Parse, "cannot open output " + path);
  write(f, cfg, run);
}

tvp::KeyValueConfig load_config(const Options& opt) {
  auto kv = opt.config.empty() ? tvp::KeyValueConfig{} : tvp::KeyValueConfig::load(opt.config);
  for (const auto& s : opt.sets) kv.set(s);
  return kv;
}

void reject_unused(const tvp::KeyValueConfig& kv) {
  const auto unused = kv.unused_keys();
  if (unused.empty()) return;
  std::string keys;
  for (const auto& k : unused) keys += (keys.empty() ? "" : ", ") + k;
  throw tvp::Error(tvp::ErrorKind::Parse, "unknown config keys: " + keys);
}

int report_failures(const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "tvpursuit: " << f << "\n";
  return failures.empty() ? 0 : kExitFailure;
}

int phase_transition(const Options& opt) {
  const auto kv = load_config(opt);
  const auto cfg = tvp::phase_transition_config(kv);
  reject_unused(kv);
  Output out(opt.out);
  const auto run = tvp::run_phase_transition(cfg);
  tvp::write_phase_transition_csv(out.stream(), cfg, run);
  write_sibling(out, ".reps.csv", cfg, run, tvp::write_phase_transition_reps_csv);
  // Solver failures count as non-recovery and are logged, not fatal.
  for (const auto& r : run.reps)
    if (!r.failure.empty())
      std::cerr << "tvpursuit: " << r.method << " n=" << r.graph_size << " N_v=" << r.nonroot_rows << " seed=" << r.seed
                << ": " << r.failure << "\n";
  return 0;
}

int convergence(const Options& opt) {
  const auto kv = load_config(opt);
  const auto cfg = tvp::convergence_config(kv);
  reject_unused(kv);
  Output out(opt.out);
  const auto run = tvp::run_convergence(cfg);
  tvp::write_convergence_csv(out.stream(), cfg, run);
  std::vector<std::string> failures;
  for (const auto& c : run.cells)
    if (!c.failure.empty())
      failures.push_back(c.topology + " n=" + std::to_string(c.n) + " seed=" + std::to_string(c.seed) + ": " + c.failure);
  return report_failures(failures);
}

int noisy(const Options& opt) {
  const auto kv = load_config(opt);
  const auto cfg = tvp::noisy_config(kv);
  reject_unused(kv);
  Output out(opt.out);
  const auto run = tvp::run_noisy_comparison(cfg);
  tvp::write_noisy_csv(out.stream(), cfg, run);
  write_sibling(out, ".reps.csv", cfg, run, tvp::write_noisy_reps_csv);
  for (const auto& r : run.reps)
    if (!r.failure.empty())
      std::cerr << "tvpursuit: " << r.method << " " << r.topology << " n=" << r.n << " seed=" << r.seed << ": "
                << r.failure << "\n";
  return 0;
}

int unmix(const Options& opt) {
  const auto kv = load_config(opt);
  const auto cfg = tvp::unmix_config(kv);
  reject_unused(kv);
  Output out(opt.out);
  const auto run = tvp::run_unmix(cfg);
  tvp::write_unmix_csv(out.stream(), cfg, run);
  write_sibling(out, ".maps.csv", cfg, run, tvp::write_unmix_maps_csv);
  return report_failures(run.tiled.tile_errors);
}

int verify(const Options& opt) {
  const auto kv = load_config(opt);
  const auto cfg = tvp::verify_config(kv);
  reject_unused(kv);
  Output out(opt.out);
  const auto run = tvp::run_verify_suite(cfg);
  tvp::write_verify_csv(out.stream(), cfg, run);
  for (const auto& r : run.rows)
    if (r.outcome == tvp::Outcome::Fail || r.outcome == tvp::Outcome::UnexpectedPass)
      std::cerr << "tvpursuit: " << r.check << " (" << r.fixture << ", seed " << r.seed << "): " << tvp::to_string(r.outcome)
                << "\n";
  return run.ok() ? 0 : kExitVerify;
}

int solve(const Options& opt, const std::string& container) {
  const auto kv = load_config(opt);
  const auto cfg = tvp::solve_config(kv);
  reject_unused(kv);
  Output out(opt.out);
  const auto run = tvp::run_solve(cfg);
  tvp::write_solve_summary_csv(out.stream(), cfg, run);
  if (!container.empty()) tvp::save_container(container, tvp::to_container(cfg, run));
  const auto thresholds = out.sibling(".thresholds.csv");
  if (!thresholds.empty() && cfg.graph_file.empty()) {
    std::ofstream f(thresholds);
    tvp::write_thresholds_csv(f, tvp::theorem_thresholds(tvp::make_topology(cfg.topology, cfg.n), cfg.d, cfg.s, cfg.s_prime),
                              "topology=" + cfg.topology + " n=" + std::to_string(cfg.n));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint sparse recovery over graphs: seeded experiments and audits"};
  app.require_subcommand(1);
  Options opt;
  std::string container;
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--config", opt.config, "key=value configuration file");
    sub->add_option("--set", opt.sets, "override one key, key=value (repeatable)");
    sub->add_option("--out", opt.out, "output CSV path (default stdout)");
  };
  auto* pt = app.add_subcommand("phase-transition", "recovery probability against non-root sample size");
  auto* cv = app.add_subcommand("convergence", "distributed ADMM error per round against a certified reference");
  auto* nz = app.add_subcommand("noisy", "TVBPD against the best group lasso under noise");
  auto* um = app.add_subcommand("unmix", "tiled TVBPD against per-pixel BPDN on a synthetic abundance grid");
  auto* vf = app.add_subcommand("verify", "RIP, RNSP, kernel-condition and shelling audits");
  auto* sv = app.add_subcommand("solve", "one seeded instance with one method");
  for (auto* sub : {pt, cv, nz, um, vf, sv}) add_common(sub);
  sv->add_option("--container", container, "also save estimates and truth as a binary container");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*pt) return phase_transition(opt);
    if (*cv) return convergence(opt);
    if (*nz) return noisy(opt);
    if (*um) return unmix(opt);
    if (*vf) return verify(opt);
    return solve(opt, container);
  } catch (const tvp::Error& e) {
    std::cerr << "tvpursuit: " << e.what() << "\n";
    const bool config = e.kind() == tvp::ErrorKind::Parse || e.kind() == tvp::ErrorKind::BudgetExceeded ||
                        e.kind() == tvp::ErrorKind::InvalidSize;
    return config ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "tvpursuit: " << e.what() << "\n";
    return kExitFailure;
  }
}
