#include "gtvmin/gtvmin.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "gtvmin/analysis.hpp"
#include "gtvmin/errors.hpp"
#include "gtvmin/experiment.hpp"

struct gtv_graph {
  gtvmin::SimilarityGraph graph;
};

struct gtv_scenario {
  gtvmin::Scenario scenario;
  gtv_graph graph_view;
};

struct gtv_result {
  gtvmin::SolveResult result;
};

namespace {

thread_local std::string last_error;

gtv_status fail(gtv_status status, const char *message) {
  last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename Body> gtv_status guarded(Body &&body) {
  try {
    body();
    return GTV_OK;
  } catch (const gtvmin::ValidationError &e) {
    return fail(GTV_ERR_VALIDATION, e.what());
  } catch (const gtvmin::NumericalError &e) {
    return fail(GTV_ERR_NUMERICAL, e.what());
  } catch (const gtvmin::IoError &e) {
    return fail(GTV_ERR_IO, e.what());
  } catch (const std::bad_alloc &) {
    return fail(GTV_ERR_INTERNAL, "out of memory");
  } catch (const std::exception &e) {
    return fail(GTV_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(GTV_ERR_INTERNAL, "unknown error");
  }
}

void require(const void *ptr, const char *name) {
  if (!ptr)
    throw gtvmin::ValidationError(std::string(name) + " must not be NULL");
}

char *duplicate(const std::string &s) {
  char *out = static_cast<char *>(std::malloc(s.size() + 1));
  if (!out)
    throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

gtvmin::SolverSelection to_selection(const gtv_solver_options *options) {
  gtvmin::SolverSelection sel;
  if (options) {
    if (options->kind != GTV_SOLVER_EXACT && options->kind != GTV_SOLVER_ITERATIVE)
      throw gtvmin::ValidationError("unknown solver kind");
    sel.kind = options->kind == GTV_SOLVER_EXACT ? gtvmin::SolverKind::exact
                                                 : gtvmin::SolverKind::iterative;
    sel.max_iter = options->max_iter;
    sel.tol = options->tol;
    sel.ridge = options->ridge;
  }
  return sel;
}

gtv_scenario *wrap(gtvmin::Scenario s) {
  auto *h = new gtv_scenario{std::move(s), {gtvmin::SimilarityGraph(1)}};
  h->graph_view.graph = h->scenario.graph;
  return h;
}

gtvmin::ExperimentConfig parse(const char *config_json) {
  require(config_json, "config_json");
  return gtvmin::parse_config(config_json);
}

} // namespace

extern "C" {

const char *gtv_last_error(void) { return last_error.c_str(); }

const char *gtv_version(void) { return "1.0.0"; }

void gtv_string_free(char *str) { std::free(str); }

void gtv_solver_options_init(gtv_solver_options *options) {
  if (!options)
    return;
  options->kind = GTV_SOLVER_EXACT;
  options->max_iter = 100000;
  options->tol = 1e-12;
  options->ridge = 0.0;
}

gtv_status gtv_graph_create(size_t node_count, const size_t *u, const size_t *v,
                            const double *weight, size_t edge_count, gtv_graph **out) {
  return guarded([&] {
    require(out, "out");
    if (edge_count > 0) {
      require(u, "u");
      require(v, "v");
      require(weight, "weight");
    }
    std::vector<gtvmin::Edge> edges;
    for (size_t k = 0; k < edge_count; ++k)
      edges.push_back({u[k], v[k], weight[k]});
    *out = new gtv_graph{gtvmin::SimilarityGraph(node_count, std::move(edges))};
  });
}

gtv_status gtv_graph_load(const char *path, gtv_graph **out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gtv_graph{gtvmin::read_graph(std::filesystem::path(path))};
  });
}

gtv_status gtv_graph_save(const gtv_graph *graph, const char *path) {
  return guarded([&] {
    require(graph, "graph");
    require(path, "path");
    gtvmin::write_graph(std::filesystem::path(path), graph->graph);
  });
}

void gtv_graph_destroy(gtv_graph *graph) { delete graph; }

size_t gtv_graph_node_count(const gtv_graph *graph) {
  return graph ? graph->graph.node_count() : 0;
}

size_t gtv_graph_edge_count(const gtv_graph *graph) {
  return graph ? graph->graph.edges().size() : 0;
}

gtv_status gtv_graph_lambda2(const gtv_graph *graph, double *out) {
  return guarded([&] {
    require(graph, "graph");
    require(out, "out");
    *out = gtvmin::lambda2(graph->graph);
  });
}

gtv_status gtv_graph_boundary(const gtv_graph *graph, const size_t *members,
                              size_t member_count, double *out) {
  return guarded([&] {
    require(graph, "graph");
    require(out, "out");
    if (member_count > 0)
      require(members, "members");
    gtvmin::ClusterSpec c;
    c.members.assign(members, members + member_count);
    *out = gtvmin::cluster_boundary(graph->graph, c);
  });
}

gtv_status gtv_graph_laplacian(const gtv_graph *graph, double *out, size_t capacity) {
  return guarded([&] {
    require(graph, "graph");
    require(out, "out");
    const size_t n = graph->graph.node_count();
    if (capacity < n * n)
      throw gtvmin::ValidationError("output buffer holds fewer than n*n values");
    const Eigen::MatrixXd L = gtvmin::laplacian(graph->graph);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        out[i * n + j] = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  });
}

gtv_status gtv_scenario_generate(const char *config_json, gtv_scenario **out) {
  return guarded([&] {
    require(out, "out");
    *out = wrap(gtvmin::generate_scenario(parse(config_json).scenario));
  });
}

gtv_status gtv_scenario_load(const char *dir, gtv_scenario **out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = wrap(gtvmin::read_scenario(dir));
  });
}

gtv_status gtv_scenario_save(const gtv_scenario *scenario, const char *dir) {
  return guarded([&] {
    require(scenario, "scenario");
    require(dir, "dir");
    gtvmin::write_scenario(dir, scenario->scenario);
  });
}

void gtv_scenario_destroy(gtv_scenario *scenario) { delete scenario; }

size_t gtv_scenario_node_count(const gtv_scenario *scenario) {
  return scenario ? scenario->scenario.node_count() : 0;
}

size_t gtv_scenario_dimension(const gtv_scenario *scenario) {
  return scenario ? scenario->scenario.dimension : 0;
}

size_t gtv_scenario_cluster_count(const gtv_scenario *scenario) {
  return scenario ? scenario->scenario.clusters.size() : 0;
}

const gtv_graph *gtv_scenario_graph(const gtv_scenario *scenario) {
  return scenario ? &scenario->graph_view : nullptr;
}

gtv_status gtv_solve(const gtv_scenario *scenario, double alpha,
                     const gtv_solver_options *options, gtv_result **out) {
  return guarded([&] {
    require(scenario, "scenario");
    require(out, "out");
    const auto problem = gtvmin::GTVMinProblem::from_scenario(scenario->scenario, alpha);
    *out = new gtv_result{gtvmin::run_solver(problem, to_selection(options))};
  });
}

gtv_status gtv_result_load(const char *path, gtv_result **out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gtv_result{gtvmin::read_result_json(path)};
  });
}

gtv_status gtv_result_save(const gtv_result *result, const char *path) {
  return guarded([&] {
    require(result, "result");
    require(path, "path");
    gtvmin::write_result_json(std::filesystem::path(path), result->result);
  });
}

void gtv_result_destroy(gtv_result *result) { delete result; }

gtv_status gtv_result_params(const gtv_result *result, const double **data,
                             size_t *length) {
  return guarded([&] {
    require(result, "result");
    require(data, "data");
    require(length, "length");
    *data = result->result.params.flat().data();
    *length = static_cast<size_t>(result->result.params.flat().size());
  });
}

double gtv_result_objective(const gtv_result *result) {
  return result ? result->result.objective_value : 0.0;
}

double gtv_result_residual(const gtv_result *result) {
  return result ? result->result.residual : 0.0;
}

uint64_t gtv_result_iterations(const gtv_result *result) {
  return result ? result->result.iterations : 0;
}

int gtv_result_converged(const gtv_result *result) {
  return result && result->result.converged ? 1 : 0;
}

gtv_status gtv_analyze_cluster(const gtv_scenario *scenario, const gtv_result *result,
                               size_t cluster, gtv_bound_report *report,
                               gtv_proof_chain *chain) {
  return guarded([&] {
    require(scenario, "scenario");
    require(result, "result");
    const auto analyses =
        gtvmin::analyze_clusters(scenario->scenario, result->result, cluster);
    const gtvmin::BoundReport &b = analyses.front().bound;
    const gtvmin::ProofChainRecord &c = analyses.front().chain;
    if (report)
      *report = {b.lhs,  b.lambda2, b.boundary, b.epsilon,     b.r_outside,
                 b.w_bar_norm_sq, b.alpha, b.rhs, b.slack, b.satisfied ? 1 : 0,
                 b.degenerate ? 1 : 0};
    if (chain)
      *chain = {c.candidate_value,
                c.candidate_bound,
                c.solution_value,
                c.solution_lower,
                c.deviation_sq,
                c.candidate_within_bound ? 1 : 0,
                c.solution_above_lower ? 1 : 0,
                c.solution_not_worse ? 1 : 0};
  });
}

gtv_status gtv_config_normalize(const char *config_json, char **out) {
  return guarded([&] {
    require(out, "out");
    *out = duplicate(gtvmin::config_to_json(parse(config_json)));
  });
}

gtv_status gtv_cmd_generate(const char *config_json) {
  return guarded([&] { gtvmin::cmd_generate(parse(config_json)); });
}

gtv_status gtv_cmd_solve(const char *config_json, const char *scenario_dir) {
  return guarded([&] {
    require(scenario_dir, "scenario_dir");
    const gtvmin::ExperimentConfig cfg = parse(config_json);
    gtvmin::cmd_solve(scenario_dir, cfg.alpha_list.front(), cfg.solver,
                      cfg.out_dir / "result.json");
  });
}

gtv_status gtv_cmd_analyze(const char *config_json, const char *scenario_dir,
                           const char *result_file, long long cluster, size_t *rows,
                           size_t *violations) {
  return guarded([&] {
    require(scenario_dir, "scenario_dir");
    require(result_file, "result_file");
    const gtvmin::ExperimentConfig cfg = parse(config_json);
    std::optional<gtvmin::Index> which;
    if (cluster >= 0)
      which = static_cast<gtvmin::Index>(cluster);
    const auto analyses = gtvmin::cmd_analyze(scenario_dir, result_file, which, cfg.out_dir);
    if (rows)
      *rows = analyses.size();
    if (violations) {
      *violations = 0;
      for (const auto &a : analyses)
        if (!a.bound.satisfied)
          ++*violations;
    }
  });
}

gtv_status gtv_cmd_sweep(const char *config_json, size_t *rows) {
  return guarded([&] {
    const std::string csv = gtvmin::cmd_sweep(parse(config_json));
    if (rows) {
      const auto lines = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
      *rows = lines > 0 ? lines - 1 : 0;
    }
  });
}

gtv_status gtv_selftest(uint64_t seed, size_t scenario_count, int *passed, char **summary) {
  return guarded([&] {
    require(passed, "passed");
    const gtvmin::SelftestSummary s = gtvmin::run_selftest(seed, scenario_count);
    *passed = s.passed() ? 1 : 0;
    if (summary)
      *summary = duplicate(gtvmin::describe(s));
  });
}

} // extern "C"
