#include "gtvmin/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "gtvmin/errors.hpp"

namespace gtvmin {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kCheckTol = 1e-9;

void check_cluster_params(const StackedParams &params, const ClusterSpec &cluster) {
  cluster.validate(params.node_count());
}

std::vector<bool> membership(Index n, const ClusterSpec &cluster) {
  std::vector<bool> inside(n, false);
  for (Index m : cluster.members)
    inside[m] = true;
  return inside;
}

// lambda2 of the induced subgraph, or nullopt when the cluster subgraph is a
// single node or disconnected.
std::optional<double> cluster_lambda2(const SimilarityGraph &graph,
                                      const ClusterSpec &cluster) {
  if (cluster.members.size() < 2)
    return std::nullopt;
  const Connectivity c = algebraic_connectivity(induced_subgraph(graph, cluster));
  if (c.disconnected)
    return std::nullopt;
  return c.lambda2;
}

struct BoundInputs {
  Eigen::VectorXd w_bar;
  double epsilon = 0.0;
};

BoundInputs require_bound_inputs(const GTVMinProblem &problem,
                                 const SolveResult &result,
                                 const ClusterSpec &cluster) {
  if (!(problem.alpha > 0.0))
    throw ValidationError("the deviation bound needs alpha > 0");
  cluster.validate(problem.node_count());
  if (!cluster.reference_params || !cluster.epsilon)
    throw ValidationError("cluster lacks reference parameters or clustering error");
  if (static_cast<Index>(cluster.reference_params->size()) != problem.dimension())
    throw ValidationError("cluster reference parameters have wrong dimension");
  if (result.params.node_count() != problem.node_count() ||
      result.params.dimension() != problem.dimension())
    throw ValidationError("solution dimensions do not match the problem");
  return {*cluster.reference_params, *cluster.epsilon};
}

double outside_radius(const StackedParams &params, const ClusterSpec &cluster) {
  const auto inside = membership(params.node_count(), cluster);
  double r = 0.0;
  for (Index i = 0; i < params.node_count(); ++i)
    if (!inside[i])
      r = std::max(r, params.node(i).norm());
  return r;
}

ordered_json real_or_null(double v) {
  return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr);
}

} // namespace

double hybrid_tolerance(double tol, double scale) {
  return tol * std::max(1.0, std::abs(scale));
}

Eigen::VectorXd cluster_average(const StackedParams &params, const ClusterSpec &cluster) {
  check_cluster_params(params, cluster);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(params.dimension());
  for (Index i : cluster.members)
    sum += params.node(i);
  return sum / static_cast<double>(cluster.members.size());
}

double DeviationVector::squared_norm() const {
  double s = 0.0;
  for (const auto &v : per_node)
    s += v.squaredNorm();
  return s;
}

DeviationVector deviations(const StackedParams &params, const ClusterSpec &cluster) {
  const Eigen::VectorXd avg = cluster_average(params, cluster);
  DeviationVector dev;
  dev.members = cluster.members;
  for (Index i : cluster.members)
    dev.per_node.push_back(params.node(i) - avg);
  return dev;
}

Eigen::VectorXd stack_cluster(const StackedParams &params, const ClusterSpec &cluster) {
  check_cluster_params(params, cluster);
  const Index d = params.dimension();
  Eigen::VectorXd out(static_cast<Eigen::Index>(d * cluster.members.size()));
  for (Index k = 0; k < cluster.members.size(); ++k)
    out.segment(static_cast<Eigen::Index>(k * d), d) = params.node(cluster.members[k]);
  return out;
}

Eigen::VectorXd project_S(const Eigen::VectorXd &delta, Index dimension) {
  if (dimension == 0 || delta.size() == 0 ||
      static_cast<Index>(delta.size()) % dimension != 0)
    throw ValidationError("stacked vector length " + std::to_string(delta.size()) +
                          " is not a positive multiple of d = " +
                          std::to_string(dimension));
  const auto d = static_cast<Eigen::Index>(dimension);
  const Eigen::Index blocks = delta.size() / d;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index b = 0; b < blocks; ++b)
    mean += delta.segment(b * d, d);
  mean /= static_cast<double>(blocks);
  Eigen::VectorXd out(delta.size());
  for (Eigen::Index b = 0; b < blocks; ++b)
    out.segment(b * d, d) = mean;
  return out;
}

Eigen::VectorXd project_S_perp(const Eigen::VectorXd &delta, Index dimension) {
  return delta - project_S(delta, dimension);
}

TvLowerBound tv_lower_bound_check(const SimilarityGraph &graph,
                                  const ClusterSpec &cluster,
                                  const StackedParams &params) {
  cluster.validate(graph.node_count());
  if (cluster.members.size() < 2)
    throw ValidationError("the spectral TV bound needs a cluster with >= 2 nodes");
  if (params.node_count() != graph.node_count())
    throw ValidationError("parameter node count does not match graph");
  const auto inside = membership(graph.node_count(), cluster);
  TvLowerBound out;
  for (const Edge &e : graph.edges())
    if (inside[e.u] && inside[e.v])
      out.lhs_tv += e.weight * (params.node(e.u) - params.node(e.v)).squaredNorm();
  out.rhs = lambda2(induced_subgraph(graph, cluster)) *
            deviations(params, cluster).squared_norm();
  out.holds = out.lhs_tv >= out.rhs - hybrid_tolerance(kCheckTol, out.rhs);
  return out;
}

double deviation_bound_rhs(double lambda2, double boundary, double epsilon,
                           double w_bar_norm_sq, double r_outside, double alpha) {
  return (1.0 / (alpha * lambda2)) *
         (epsilon + alpha * boundary * 2.0 * (w_bar_norm_sq + r_outside * r_outside));
}

BoundReport theorem1_report(const GTVMinProblem &problem, const SolveResult &result,
                            const ClusterSpec &cluster) {
  const BoundInputs in = require_bound_inputs(problem, result, cluster);
  BoundReport r;
  r.alpha = problem.alpha;
  r.epsilon = in.epsilon;
  r.w_bar_norm_sq = in.w_bar.squaredNorm();
  r.boundary = cluster_boundary(problem.graph, cluster);
  r.r_outside = outside_radius(result.params, cluster);
  r.lhs = deviations(result.params, cluster).squared_norm();
  const auto l2 = cluster_lambda2(problem.graph, cluster);
  if (!l2) {
    r.degenerate = true;
    r.lambda2 = cluster.members.size() < 2
                    ? 0.0
                    : lambda2(induced_subgraph(problem.graph, cluster));
    r.rhs = std::numeric_limits<double>::infinity();
    r.slack = std::numeric_limits<double>::infinity();
    r.satisfied = true;
    return r;
  }
  r.lambda2 = *l2;
  r.rhs = deviation_bound_rhs(r.lambda2, r.boundary, r.epsilon, r.w_bar_norm_sq,
                              r.r_outside, r.alpha);
  r.slack = r.rhs - r.lhs;
  r.satisfied = r.lhs <= r.rhs + hybrid_tolerance(kCheckTol, r.rhs);
  return r;
}

double cluster_objective(const GTVMinProblem &problem, const ClusterSpec &cluster,
                         const StackedParams &params) {
  cluster.validate(problem.node_count());
  if (params.node_count() != problem.node_count() ||
      params.dimension() != problem.dimension())
    throw ValidationError("parameter dimensions do not match the problem");
  const auto inside = membership(problem.node_count(), cluster);
  double loss = 0.0;
  for (Index i : cluster.members)
    loss += problem.losses[i]->value(params.node(i));
  double tv = 0.0;
  for (const Edge &e : problem.graph.edges())
    if (inside[e.u] || inside[e.v])
      tv += e.weight * (params.node(e.u) - params.node(e.v)).squaredNorm();
  return loss + problem.alpha * tv;
}

StackedParams constant_on_cluster(const StackedParams &params,
                                  const ClusterSpec &cluster,
                                  const Eigen::VectorXd &value) {
  check_cluster_params(params, cluster);
  if (static_cast<Index>(value.size()) != params.dimension())
    throw ValidationError("replacement vector has wrong dimension");
  StackedParams out = params;
  for (Index i : cluster.members)
    out.node(i) = value;
  return out;
}

ProofChainRecord proof_chain_check(const GTVMinProblem &problem,
                                   const SolveResult &result,
                                   const ClusterSpec &cluster) {
  const BoundInputs in = require_bound_inputs(problem, result, cluster);
  const double boundary = cluster_boundary(problem.graph, cluster);
  const double r = outside_radius(result.params, cluster);
  const auto l2 = cluster_lambda2(problem.graph, cluster);

  ProofChainRecord rec;
  rec.degenerate = !l2.has_value();
  const StackedParams candidate = constant_on_cluster(result.params, cluster, in.w_bar);
  rec.candidate_value = cluster_objective(problem, cluster, candidate);
  rec.candidate_bound =
      in.epsilon + problem.alpha * boundary * 2.0 * (in.w_bar.squaredNorm() + r * r);
  rec.solution_value = cluster_objective(problem, cluster, result.params);
  rec.deviation_sq = deviations(result.params, cluster).squared_norm();
  rec.solution_lower = problem.alpha * l2.value_or(0.0) * rec.deviation_sq;

  rec.candidate_within_bound =
      rec.candidate_value <= rec.candidate_bound + hybrid_tolerance(kCheckTol, rec.candidate_bound);
  rec.solution_above_lower =
      rec.solution_value >= rec.solution_lower - hybrid_tolerance(kCheckTol, rec.solution_lower);
  rec.solution_not_worse =
      rec.solution_value <= rec.candidate_value + hybrid_tolerance(kCheckTol, rec.candidate_value);
  return rec;
}

void write_analysis_json(std::ostream &out, std::span<const ClusterAnalysis> analyses) {
  ordered_json arr = ordered_json::array();
  for (const ClusterAnalysis &a : analyses) {
    const BoundReport &b = a.bound;
    const ProofChainRecord &c = a.chain;
    ordered_json j;
    j["cluster"] = a.cluster_index;
    j["lhs"] = b.lhs;
    j["lambda2"] = b.lambda2;
    j["boundary"] = b.boundary;
    j["epsilon"] = b.epsilon;
    j["R"] = b.r_outside;
    j["w_bar_norm_sq"] = b.w_bar_norm_sq;
    j["alpha"] = b.alpha;
    j["rhs"] = real_or_null(b.rhs);
    j["slack"] = real_or_null(b.slack);
    j["satisfied"] = b.satisfied;
    j["degenerate"] = b.degenerate;
    ordered_json chain;
    chain["candidate_value"] = c.candidate_value;
    chain["candidate_bound"] = c.candidate_bound;
    chain["solution_value"] = c.solution_value;
    chain["solution_lower"] = c.solution_lower;
    chain["deviation_sq"] = c.deviation_sq;
    chain["candidate_within_bound"] = c.candidate_within_bound;
    chain["solution_above_lower"] = c.solution_above_lower;
    chain["solution_not_worse"] = c.solution_not_worse;
    j["proof_chain"] = std::move(chain);
    arr.push_back(std::move(j));
  }
  out << arr.dump(2) << '\n';
}

} // namespace gtvmin
