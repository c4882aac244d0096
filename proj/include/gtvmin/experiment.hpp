#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gtvmin/analysis.hpp"
#include "gtvmin/data.hpp"
#include "gtvmin/solver.hpp"

namespace gtvmin {

enum class SolverKind { exact, iterative };

struct SolverSelection {
  SolverKind kind = SolverKind::exact;
  Index max_iter = 100000;
  double tol = 1e-12;
  /// Opt-in diagonal shift for the exact solver; 0 keeps the system untouched.
  double ridge = 0.0;

  void validate() const;
};

/// One JSON document drives every subcommand. Keys:
///   seed, cluster_sizes, d, m_per_node, noise_std, separation,
///   graph {p_in, p_out, w_in, w_out}, alpha_list, p_out_list,
///   solver ("exact" | "iterative"), max_iter, tol, ridge, out
struct ExperimentConfig {
  ScenarioParams scenario;
  std::vector<double> alpha_list{1.0};
  /// Optional sweep over the inter-cluster edge probability.
  std::vector<double> p_out_list;
  SolverSelection solver;
  std::filesystem::path out_dir{"out"};

  /// alpha_list non-empty and >= 0, solver parameters positive, scenario valid.
  void validate() const;
};

/// Missing keys take defaults; unknown keys are rejected.
ExperimentConfig parse_config(std::string_view json_text);
std::string config_to_json(const ExperimentConfig &config);

SolveResult run_solver(const GTVMinProblem &problem, const SolverSelection &solver);

/// Bound report plus proof-chain record for each selected cluster.
std::vector<ClusterAnalysis> analyze_clusters(const Scenario &scenario,
                                              const SolveResult &result,
                                              std::optional<Index> cluster_index);

// CSV: seed,n,d,alpha,lambda2,boundary,epsilon,R,lhs,rhs,slack,satisfied,degenerate
std::string bound_csv_header(bool with_p_out = false);
std::string bound_csv_row(const Scenario &scenario, const BoundReport &report,
                          std::optional<double> p_out = std::nullopt);

/// Writes the scenario directory to config.out_dir.
Scenario cmd_generate(const ExperimentConfig &config);

/// Solves the scenario in `scenario_dir`; writes the result JSON to `out_file`.
SolveResult cmd_solve(const std::filesystem::path &scenario_dir, double alpha,
                      const SolverSelection &solver,
                      const std::filesystem::path &out_file);

/// Writes report.json and report.csv into `out_dir`. `cluster_index`
/// selects one cluster; nullopt means all of them.
std::vector<ClusterAnalysis> cmd_analyze(const std::filesystem::path &scenario_dir,
                                         const std::filesystem::path &result_file,
                                         std::optional<Index> cluster_index,
                                         const std::filesystem::path &out_dir);

/// One CSV row per (p_out, alpha, cluster) in that order, written to
/// config.out_dir / "sweep.csv". Returns the CSV text.
std::string cmd_sweep(const ExperimentConfig &config);

/// Random scenario parameters for the property suites: n in [4, 40],
/// d in [1, 8], noise in {0, 0.1, 1}.
ScenarioParams random_property_scenario(std::mt19937_64 &rng);

struct SelftestSummary {
  Index bound_cases = 0;
  Index bound_degenerate = 0;
  Index bound_failures = 0;
  Index chain_failures = 0;
  Index tv_cases = 0;
  Index tv_failures = 0;
  double worst_bound_slack = 0.0; ///< min over non-degenerate (rhs - lhs)

  bool passed() const {
    return bound_failures == 0 && chain_failures == 0 && tv_failures == 0;
  }
};

/// Deviation-bound and spectral-TV property suites over `scenario_count`
/// random scenarios (three alpha values each) and `scenario_count` random
/// TV instances.
SelftestSummary run_selftest(std::uint64_t seed, Index scenario_count);

std::string describe(const SelftestSummary &summary);

} // namespace gtvmin
