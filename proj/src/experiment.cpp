#include "gtvmin/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "gtvmin/errors.hpp"
#include "gtvmin/format.hpp"

namespace gtvmin {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

constexpr double kSelftestAlphas[] = {0.1, 1.0, 10.0};

template <typename T> T get_as(const json &j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const json::exception &) {
    throw ValidationError("config key '" + std::string(key) + "' has the wrong type");
  }
}

double get_real(const json &j, std::string_view key) {
  if (!j.is_number())
    throw ValidationError("config key '" + std::string(key) + "' must be a number");
  return j.get<double>();
}

Index get_count(const json &j, std::string_view key) {
  if (!j.is_number_unsigned())
    throw ValidationError("config key '" + std::string(key) +
                          "' must be a non-negative integer");
  return j.get<Index>();
}

std::vector<double> get_reals(const json &j, std::string_view key) {
  if (!j.is_array())
    throw ValidationError("config key '" + std::string(key) + "' must be an array");
  std::vector<double> out;
  for (const auto &v : j)
    out.push_back(get_real(v, key));
  return out;
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out)
    throw IoError("failed writing " + path.string());
}

const char *flag(bool b) { return b ? "true" : "false"; }

} // namespace

void SolverSelection::validate() const {
  if (max_iter == 0)
    throw ValidationError("max_iter must be positive");
  if (!(tol > 0.0))
    throw ValidationError("tol must be positive");
  if (!(ridge >= 0.0))
    throw ValidationError("ridge must be non-negative");
}

void ExperimentConfig::validate() const {
  if (alpha_list.empty())
    throw ValidationError("alpha_list must not be empty");
  for (double a : alpha_list)
    if (!(a >= 0.0) || !std::isfinite(a))
      throw ValidationError("alpha values must be finite and non-negative");
  for (double p : p_out_list)
    if (!(p >= 0.0 && p <= scenario.graph.p_in))
      throw ValidationError("p_out_list entries must lie in [0, p_in]");
  solver.validate();
  scenario.validate();
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception &e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object())
    throw ValidationError("config must be a JSON object");

  ExperimentConfig cfg;
  cfg.scenario.cluster_sizes = {5, 5};
  cfg.scenario.dimension = 2;
  cfg.scenario.samples_per_node = 10;
  cfg.scenario.separation = 2.0;
  cfg.scenario.graph = {0.9, 0.1, 1.0, 0.1};

  for (const auto &[key, value] : doc.items()) {
    if (key == "seed")
      cfg.scenario.seed = get_as<std::uint64_t>(value, key);
    else if (key == "cluster_sizes")
      cfg.scenario.cluster_sizes = get_as<std::vector<Index>>(value, key);
    else if (key == "d")
      cfg.scenario.dimension = get_count(value, key);
    else if (key == "m_per_node")
      cfg.scenario.samples_per_node = get_count(value, key);
    else if (key == "noise_std")
      cfg.scenario.noise_std = get_real(value, key);
    else if (key == "separation")
      cfg.scenario.separation = get_real(value, key);
    else if (key == "graph") {
      if (!value.is_object())
        throw ValidationError("config key 'graph' must be an object");
      for (const auto &[gk, gv] : value.items()) {
        if (gk == "p_in")
          cfg.scenario.graph.p_in = get_real(gv, gk);
        else if (gk == "p_out")
          cfg.scenario.graph.p_out = get_real(gv, gk);
        else if (gk == "w_in")
          cfg.scenario.graph.w_in = get_real(gv, gk);
        else if (gk == "w_out")
          cfg.scenario.graph.w_out = get_real(gv, gk);
        else
          throw ValidationError("unknown config key 'graph." + gk + "'");
      }
    } else if (key == "alpha_list")
      cfg.alpha_list = get_reals(value, key);
    else if (key == "p_out_list")
      cfg.p_out_list = get_reals(value, key);
    else if (key == "solver") {
      const auto name = get_as<std::string>(value, key);
      if (name == "exact")
        cfg.solver.kind = SolverKind::exact;
      else if (name == "iterative")
        cfg.solver.kind = SolverKind::iterative;
      else
        throw ValidationError("solver must be 'exact' or 'iterative'");
    } else if (key == "max_iter")
      cfg.solver.max_iter = get_count(value, key);
    else if (key == "tol")
      cfg.solver.tol = get_real(value, key);
    else if (key == "ridge")
      cfg.solver.ridge = get_real(value, key);
    else if (key == "out")
      cfg.out_dir = get_as<std::string>(value, key);
    else
      throw ValidationError("unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

std::string config_to_json(const ExperimentConfig &config) {
  ordered_json j;
  j["seed"] = config.scenario.seed;
  j["cluster_sizes"] = config.scenario.cluster_sizes;
  j["d"] = config.scenario.dimension;
  j["m_per_node"] = config.scenario.samples_per_node;
  j["noise_std"] = config.scenario.noise_std;
  j["separation"] = config.scenario.separation;
  j["graph"] = {{"p_in", config.scenario.graph.p_in},
                {"p_out", config.scenario.graph.p_out},
                {"w_in", config.scenario.graph.w_in},
                {"w_out", config.scenario.graph.w_out}};
  j["alpha_list"] = config.alpha_list;
  j["p_out_list"] = config.p_out_list;
  j["solver"] = config.solver.kind == SolverKind::exact ? "exact" : "iterative";
  j["max_iter"] = config.solver.max_iter;
  j["tol"] = config.solver.tol;
  j["ridge"] = config.solver.ridge;
  j["out"] = config.out_dir.string();
  return j.dump(2);
}

SolveResult run_solver(const GTVMinProblem &problem, const SolverSelection &solver) {
  solver.validate();
  if (solver.kind == SolverKind::exact)
    return solve_exact(problem, solver.ridge);
  return solve_iterative(problem, {solver.max_iter, solver.tol});
}

std::vector<ClusterAnalysis> analyze_clusters(const Scenario &scenario,
                                              const SolveResult &result,
                                              std::optional<Index> cluster_index) {
  if (result.params.node_count() != scenario.node_count() ||
      result.params.dimension() != scenario.dimension)
    throw ValidationError("result is " + std::to_string(result.params.node_count()) +
                          "x" + std::to_string(result.params.dimension()) +
                          " but scenario is " + std::to_string(scenario.node_count()) +
                          "x" + std::to_string(scenario.dimension));
  if (cluster_index && *cluster_index >= scenario.clusters.size())
    throw ValidationError("cluster index " + std::to_string(*cluster_index) +
                          " out of range (" + std::to_string(scenario.clusters.size()) +
                          " clusters)");
  const GTVMinProblem problem = GTVMinProblem::from_scenario(scenario, result.alpha);
  std::vector<ClusterAnalysis> out;
  for (Index c = 0; c < scenario.clusters.size(); ++c) {
    if (cluster_index && c != *cluster_index)
      continue;
    const ClusterSpec &cluster = scenario.clusters[c];
    out.push_back({c, theorem1_report(problem, result, cluster),
                   proof_chain_check(problem, result, cluster)});
  }
  return out;
}

std::string bound_csv_header(bool with_p_out) {
  std::string h = "seed,n,d,alpha,lambda2,boundary,epsilon,R,lhs,rhs,slack,satisfied,degenerate";
  if (with_p_out)
    h += ",p_out";
  return h + "\n";
}

std::string bound_csv_row(const Scenario &scenario, const BoundReport &r,
                          std::optional<double> p_out) {
  std::string row = std::to_string(scenario.seed) + "," +
                    std::to_string(scenario.node_count()) + "," +
                    std::to_string(scenario.dimension);
  for (double v : {r.alpha, r.lambda2, r.boundary, r.epsilon, r.r_outside, r.lhs,
                   r.rhs, r.slack})
    row += "," + format_real(v);
  row += std::string(",") + flag(r.satisfied) + "," + flag(r.degenerate);
  if (p_out)
    row += "," + format_real(*p_out);
  return row + "\n";
}

Scenario cmd_generate(const ExperimentConfig &config) {
  config.validate();
  Scenario s = generate_scenario(config.scenario);
  write_scenario(config.out_dir, s);
  return s;
}

SolveResult cmd_solve(const std::filesystem::path &scenario_dir, double alpha,
                      const SolverSelection &solver,
                      const std::filesystem::path &out_file) {
  const Scenario s = read_scenario(scenario_dir);
  const GTVMinProblem problem = GTVMinProblem::from_scenario(s, alpha);
  SolveResult r = run_solver(problem, solver);
  write_result_json(out_file, r);
  return r;
}

std::vector<ClusterAnalysis> cmd_analyze(const std::filesystem::path &scenario_dir,
                                         const std::filesystem::path &result_file,
                                         std::optional<Index> cluster_index,
                                         const std::filesystem::path &out_dir) {
  const Scenario s = read_scenario(scenario_dir);
  const SolveResult r = read_result_json(result_file);
  std::vector<ClusterAnalysis> analyses = analyze_clusters(s, r, cluster_index);

  std::ostringstream js;
  write_analysis_json(js, analyses);
  write_text(out_dir / "report.json", js.str());
  std::string csv = bound_csv_header();
  for (const ClusterAnalysis &a : analyses)
    csv += bound_csv_row(s, a.bound);
  write_text(out_dir / "report.csv", csv);
  return analyses;
}

std::string cmd_sweep(const ExperimentConfig &config) {
  config.validate();
  for (double a : config.alpha_list)
    if (!(a > 0.0))
      throw ValidationError("sweep needs alpha > 0 to evaluate the deviation bound");

  const bool sweep_p_out = !config.p_out_list.empty();
  const std::vector<double> p_outs =
      sweep_p_out ? config.p_out_list : std::vector<double>{config.scenario.graph.p_out};

  std::string csv = bound_csv_header(sweep_p_out);
  for (double p_out : p_outs) {
    ScenarioParams params = config.scenario;
    params.graph.p_out = p_out;
    const Scenario s = generate_scenario(params);
    for (double alpha : config.alpha_list) {
      const GTVMinProblem problem = GTVMinProblem::from_scenario(s, alpha);
      const SolveResult r = run_solver(problem, config.solver);
      for (const ClusterSpec &cluster : s.clusters)
        csv += bound_csv_row(s, theorem1_report(problem, r, cluster),
                             sweep_p_out ? std::optional<double>(p_out) : std::nullopt);
    }
  }
  write_text(config.out_dir / "sweep.csv", csv);
  return csv;
}

ScenarioParams random_property_scenario(std::mt19937_64 &rng) {
  auto uniform_int = [&](Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(rng);
  };
  auto uniform_real = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  };
  ScenarioParams p;
  p.seed = rng();
  p.dimension = uniform_int(1, 8);
  // Random centres on a sphere can only be kept pairwise separated for a
  // limited number of clusters in low dimension.
  const Index max_clusters = p.dimension <= 2 ? 2 : (p.dimension == 3 ? 3 : 4);
  const Index k = uniform_int(1, max_clusters);
  const Index n = uniform_int(std::max<Index>(4, 2 * k), 40);
  p.cluster_sizes.assign(k, 2);
  for (Index extra = n - 2 * k; extra > 0; --extra)
    ++p.cluster_sizes[uniform_int(0, k - 1)];
  p.samples_per_node = p.dimension + uniform_int(1, 10);
  constexpr double noise_levels[] = {0.0, 0.1, 1.0};
  p.noise_std = noise_levels[uniform_int(0, 2)];
  p.separation = uniform_real(0.5, 3.0);
  p.graph.p_in = uniform_real(0.5, 1.0);
  p.graph.p_out = uniform_real(0.0, 0.2);
  p.graph.w_in = 1.0;
  p.graph.w_out = uniform_real(0.05, 0.5);
  return p;
}

SelftestSummary run_selftest(std::uint64_t seed, Index scenario_count) {
  SelftestSummary sum;
  sum.worst_bound_slack = std::numeric_limits<double>::infinity();
  std::mt19937_64 rng(seed);

  for (Index s = 0; s < scenario_count; ++s) {
    const Scenario scenario = generate_scenario(random_property_scenario(rng));
    for (double alpha : kSelftestAlphas) {
      const GTVMinProblem problem = GTVMinProblem::from_scenario(scenario, alpha);
      const SolveResult result = solve_exact(problem);
      for (const ClusterSpec &cluster : scenario.clusters) {
        const BoundReport r = theorem1_report(problem, result, cluster);
        ++sum.bound_cases;
        if (r.degenerate) {
          ++sum.bound_degenerate;
        } else {
          sum.worst_bound_slack = std::min(sum.worst_bound_slack, r.slack);
          if (!r.satisfied)
            ++sum.bound_failures;
        }
        if (!proof_chain_check(problem, result, cluster).all_hold())
          ++sum.chain_failures;
      }
    }
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index t = 0; t < scenario_count; ++t) {
    const Index n = std::uniform_int_distribution<Index>(3, 20)(rng);
    const Index d = std::uniform_int_distribution<Index>(1, 5)(rng);
    const Index k = std::uniform_int_distribution<Index>(2, n)(rng);
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    ClusterSpec cluster;
    cluster.members.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::uniform_real_distribution<double> weight(0.1, 2.0);
    std::bernoulli_distribution keep(0.3);
    std::vector<Edge> edges;
    for (Index i = 0; i < n; ++i)
      for (Index j = i + 1; j < n; ++j)
        if (keep(rng))
          edges.push_back({i, j, weight(rng)});
    // A path through the members keeps the cluster subgraph connected.
    for (Index m = 0; m + 1 < k; ++m) {
      const Index a = std::min(cluster.members[m], cluster.members[m + 1]);
      const Index b = std::max(cluster.members[m], cluster.members[m + 1]);
      if (std::none_of(edges.begin(), edges.end(),
                       [&](const Edge &e) { return e.u == a && e.v == b; }))
        edges.push_back({a, b, weight(rng)});
    }
    const SimilarityGraph graph(n, std::move(edges));
    StackedParams params(n, d);
    for (Eigen::Index q = 0; q < params.flat().size(); ++q)
      params.flat()[q] = normal(rng);
    ++sum.tv_cases;
    if (!tv_lower_bound_check(graph, cluster, params).holds)
      ++sum.tv_failures;
  }
  return sum;
}

std::string describe(const SelftestSummary &s) {
  std::ostringstream out;
  out << "deviation bound: " << s.bound_cases << " cluster reports, "
      << s.bound_degenerate << " degenerate, " << s.bound_failures << " violated";
  if (std::isfinite(s.worst_bound_slack))
    out << ", min slack " << format_real(s.worst_bound_slack);
  out << "\nproof chain: " << s.chain_failures << " violated\n"
      << "spectral TV bound: " << s.tv_cases << " instances, " << s.tv_failures
      << " violated\n"
      << (s.passed() ? "selftest PASSED" : "selftest FAILED") << "\n";
  return out.str();
}

} // namespace gtvmin
