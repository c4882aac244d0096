/*
 * C interface to the gtvmin library.
 *
 * Objects are opaque handles created by gtv_*_create/load/generate and
 * released with the matching gtv_*_destroy. Every fallible call returns a
 * gtv_status; on failure a human-readable message is available from
 * gtv_last_error() on the calling thread until the next failing call.
 */
#ifndef GTVMIN_H
#define GTVMIN_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GTVMIN_BUILDING)
#    define GTVMIN_API __declspec(dllexport)
#  else
#    define GTVMIN_API __declspec(dllimport)
#  endif
#else
#  define GTVMIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum gtv_status {
  GTV_OK = 0,
  GTV_ERR_VALIDATION = 1, /* bad arguments, config or file content */
  GTV_ERR_NUMERICAL = 2,  /* singular system, divergence */
  GTV_ERR_IO = 3,         /* missing or unwritable files */
  GTV_ERR_INTERNAL = 4
} gtv_status;

typedef struct gtv_graph gtv_graph;
typedef struct gtv_scenario gtv_scenario;
typedef struct gtv_result gtv_result;

typedef enum gtv_solver_kind { GTV_SOLVER_EXACT = 0, GTV_SOLVER_ITERATIVE = 1 } gtv_solver_kind;

typedef struct gtv_solver_options {
  gtv_solver_kind kind;
  uint64_t max_iter;
  double tol;
  double ridge;
} gtv_solver_options;

typedef struct gtv_bound_report {
  double lhs;
  double lambda2;
  double boundary;
  double epsilon;
  double r_outside;
  double w_bar_norm_sq;
  double alpha;
  double rhs; /* +inf when degenerate */
  double slack;
  int satisfied;
  int degenerate;
} gtv_bound_report;

typedef struct gtv_proof_chain {
  double candidate_value;
  double candidate_bound;
  double solution_value;
  double solution_lower;
  double deviation_sq;
  int candidate_within_bound;
  int solution_above_lower;
  int solution_not_worse;
} gtv_proof_chain;

GTVMIN_API const char *gtv_last_error(void);
GTVMIN_API const char *gtv_version(void);
GTVMIN_API void gtv_string_free(char *str);

/* exact solver, max_iter 1e5, tol 1e-12, ridge 0 */
GTVMIN_API void gtv_solver_options_init(gtv_solver_options *options);

/* --- graphs ------------------------------------------------------------ */

GTVMIN_API gtv_status gtv_graph_create(size_t node_count, const size_t *u,
                                       const size_t *v, const double *weight,
                                       size_t edge_count, gtv_graph **out);
GTVMIN_API gtv_status gtv_graph_load(const char *path, gtv_graph **out);
GTVMIN_API gtv_status gtv_graph_save(const gtv_graph *graph, const char *path);
GTVMIN_API void gtv_graph_destroy(gtv_graph *graph);

GTVMIN_API size_t gtv_graph_node_count(const gtv_graph *graph);
GTVMIN_API size_t gtv_graph_edge_count(const gtv_graph *graph);
GTVMIN_API gtv_status gtv_graph_lambda2(const gtv_graph *graph, double *out);
GTVMIN_API gtv_status gtv_graph_boundary(const gtv_graph *graph, const size_t *members,
                                         size_t member_count, double *out);
/* Writes the n*n Laplacian in row-major order; `capacity` counts doubles. */
GTVMIN_API gtv_status gtv_graph_laplacian(const gtv_graph *graph, double *out,
                                          size_t capacity);

/* --- scenarios --------------------------------------------------------- */

GTVMIN_API gtv_status gtv_scenario_generate(const char *config_json, gtv_scenario **out);
GTVMIN_API gtv_status gtv_scenario_load(const char *dir, gtv_scenario **out);
GTVMIN_API gtv_status gtv_scenario_save(const gtv_scenario *scenario, const char *dir);
GTVMIN_API void gtv_scenario_destroy(gtv_scenario *scenario);

GTVMIN_API size_t gtv_scenario_node_count(const gtv_scenario *scenario);
GTVMIN_API size_t gtv_scenario_dimension(const gtv_scenario *scenario);
GTVMIN_API size_t gtv_scenario_cluster_count(const gtv_scenario *scenario);
/* Borrowed view, valid while the scenario lives. */
GTVMIN_API const gtv_graph *gtv_scenario_graph(const gtv_scenario *scenario);

/* --- solving ----------------------------------------------------------- */

GTVMIN_API gtv_status gtv_solve(const gtv_scenario *scenario, double alpha,
                                const gtv_solver_options *options, gtv_result **out);
GTVMIN_API gtv_status gtv_result_load(const char *path, gtv_result **out);
GTVMIN_API gtv_status gtv_result_save(const gtv_result *result, const char *path);
GTVMIN_API void gtv_result_destroy(gtv_result *result);

/* Flattened node-major parameters, borrowed. */
GTVMIN_API gtv_status gtv_result_params(const gtv_result *result, const double **data,
                                        size_t *length);
GTVMIN_API double gtv_result_objective(const gtv_result *result);
GTVMIN_API double gtv_result_residual(const gtv_result *result);
GTVMIN_API uint64_t gtv_result_iterations(const gtv_result *result);
GTVMIN_API int gtv_result_converged(const gtv_result *result);

/* --- analysis ---------------------------------------------------------- */

/* Either output pointer may be NULL. */
GTVMIN_API gtv_status gtv_analyze_cluster(const gtv_scenario *scenario,
                                          const gtv_result *result, size_t cluster,
                                          gtv_bound_report *report,
                                          gtv_proof_chain *chain);

/* --- pipeline commands (JSON config documents) ------------------------- */

/* Validates a config and returns it with defaults filled in. */
GTVMIN_API gtv_status gtv_config_normalize(const char *config_json, char **out);

/* Writes graph.txt, meta.json and node_<i>.csv into the config's `out`. */
GTVMIN_API gtv_status gtv_cmd_generate(const char *config_json);

/* Solves with the config's solver settings at alpha_list[0]; writes
 * <out>/result.json. */
GTVMIN_API gtv_status gtv_cmd_solve(const char *config_json, const char *scenario_dir);

/* cluster < 0 analyzes every cluster. Writes <out>/report.json and
 * <out>/report.csv. `rows` and `violations` may be NULL. */
GTVMIN_API gtv_status gtv_cmd_analyze(const char *config_json, const char *scenario_dir,
                                      const char *result_file, long long cluster,
                                      size_t *rows, size_t *violations);

/* Writes <out>/sweep.csv. `rows` may be NULL. */
GTVMIN_API gtv_status gtv_cmd_sweep(const char *config_json, size_t *rows);

/* Runs the property suites. `passed` receives 1 when nothing was violated;
 * `summary` (may be NULL) receives a string to free with gtv_string_free. */
GTVMIN_API gtv_status gtv_selftest(uint64_t seed, size_t scenario_count, int *passed,
                                   char **summary);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* GTVMIN_H */
