#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gtvmin/graph.hpp"
#include "gtvmin/solver.hpp"

namespace gtvmin {

/// Hybrid tolerance tol * max(1, |scale|) used by every inequality check.
double hybrid_tolerance(double tol, double scale);

/// (1/|C|) sum_{i in C} w_i
Eigen::VectorXd cluster_average(const StackedParams &params, const ClusterSpec &cluster);

/// w_i - avg(C) for every member, in member order.
struct DeviationVector {
  std::vector<Index> members;
  std::vector<Eigen::VectorXd> per_node;

  /// sum_i |w~_i|^2
  double squared_norm() const;
};

DeviationVector deviations(const StackedParams &params, const ClusterSpec &cluster);

/// stack_{i in C} w_i, length d*|C|, in member order.
Eigen::VectorXd stack_cluster(const StackedParams &params, const ClusterSpec &cluster);

/// Projection onto block-constant vectors: every block becomes the block mean.
/// `delta` has length d*k; throws ValidationError otherwise.
Eigen::VectorXd project_S(const Eigen::VectorXd &delta, Index dimension);
/// delta - project_S(delta)
Eigen::VectorXd project_S_perp(const Eigen::VectorXd &delta, Index dimension);

struct TvLowerBound {
  double lhs_tv = 0.0; ///< TV over edges inside C
  double rhs = 0.0;    ///< lambda2(C) * sum_i |w_i - avg|^2
  bool holds = false;
};

/// Spectral lower bound on the intra-cluster total variation. |C| >= 2.
TvLowerBound tv_lower_bound_check(const SimilarityGraph &graph,
                                  const ClusterSpec &cluster,
                                  const StackedParams &params);

/// Every quantity in the cluster-wise deviation bound
///   sum |w~_i|^2 <= (eps + 2 alpha bd (|w_bar|^2 + R^2)) / (alpha lambda2).
struct BoundReport {
  double lhs = 0.0;
  double lambda2 = 0.0;
  double boundary = 0.0;
  double epsilon = 0.0;
  double r_outside = 0.0;
  double w_bar_norm_sq = 0.0;
  double alpha = 0.0;
  double rhs = 0.0; ///< +inf when degenerate
  bool satisfied = false;
  double slack = 0.0;
  /// lambda2 of the induced subgraph is (numerically) zero, or |C| = 1.
  bool degenerate = false;
};

double deviation_bound_rhs(double lambda2, double boundary, double epsilon,
                           double w_bar_norm_sq, double r_outside, double alpha);

/// Requires alpha > 0 and a cluster carrying w_bar and epsilon. R is measured
/// as max_{i not in C} |w_i| on the supplied solution (0 when C = V).
BoundReport theorem1_report(const GTVMinProblem &problem, const SolveResult &result,
                            const ClusterSpec &cluster);

/// The part of the objective that depends on cluster nodes: their local losses
/// plus alpha times the TV over every edge with at least one endpoint in C.
double cluster_objective(const GTVMinProblem &problem, const ClusterSpec &cluster,
                         const StackedParams &params);

/// Copy of `params` with every cluster node set to `value`.
StackedParams constant_on_cluster(const StackedParams &params,
                                  const ClusterSpec &cluster,
                                  const Eigen::VectorXd &value);

/// Numerical trace of the contradiction argument behind the deviation bound.
struct ProofChainRecord {
  double candidate_value = 0.0; ///< f'(w_bar on C, w_hat elsewhere)
  double candidate_bound = 0.0; ///< eps + 2 alpha bd (|w_bar|^2 + R^2)
  double solution_value = 0.0;  ///< f'(w_hat)
  double solution_lower = 0.0;  ///< alpha lambda2 sum |w~_i|^2
  double deviation_sq = 0.0;    ///< sum |w~_i|^2
  bool candidate_within_bound = false;
  bool solution_above_lower = false;
  bool solution_not_worse = false; ///< f'(w_hat) <= f'(candidate)
  bool degenerate = false;

  bool all_hold() const {
    return candidate_within_bound && solution_above_lower && solution_not_worse;
  }
};

ProofChainRecord proof_chain_check(const GTVMinProblem &problem,
                                   const SolveResult &result,
                                   const ClusterSpec &cluster);

struct ClusterAnalysis {
  Index cluster_index = 0;
  BoundReport bound;
  ProofChainRecord chain;
};

/// JSON array, one object per cluster. Infinite values are written as null.
void write_analysis_json(std::ostream &out, std::span<const ClusterAnalysis> analyses);

} // namespace gtvmin
