#include "gtvmin/solver.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "gtvmin/errors.hpp"
#include "gtvmin/format.hpp"

namespace gtvmin {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr double kMinReciprocalCondition = 1e-13;
constexpr double kResidualTol = 1e-8;

void check_params(const GTVMinProblem &problem, const StackedParams &params) {
  if (params.node_count() != problem.node_count() ||
      params.dimension() != problem.dimension())
    throw ValidationError("parameters are " + std::to_string(params.node_count()) +
                          "x" + std::to_string(params.dimension()) +
                          ", problem expects " + std::to_string(problem.node_count()) +
                          "x" + std::to_string(problem.dimension()));
}

// Connected components of the coupling structure: the graph when alpha > 0,
// isolated nodes otherwise.
std::vector<std::vector<Index>> coupled_components(const GTVMinProblem &problem) {
  const Index n = problem.node_count();
  std::vector<std::vector<Index>> components;
  if (problem.alpha == 0.0) {
    for (Index i = 0; i < n; ++i)
      components.push_back({i});
    return components;
  }
  std::vector<bool> seen(n, false);
  for (Index s = 0; s < n; ++s) {
    if (seen[s])
      continue;
    std::vector<Index> comp{s};
    seen[s] = true;
    for (Index k = 0; k < comp.size(); ++k)
      for (const Neighbor &nb : problem.graph.neighbors(comp[k]))
        if (!seen[nb.node]) {
          seen[nb.node] = true;
          comp.push_back(nb.node);
        }
    std::sort(comp.begin(), comp.end());
    components.push_back(std::move(comp));
  }
  return components;
}

std::string describe_singularity(const GTVMinProblem &problem,
                                 const std::vector<const QuadraticLoss *> &quad,
                                 double ridge, double rcond) {
  if (ridge > 0.0)
    return "GTVMin system is numerically singular (reciprocal condition " +
           format_real(rcond) + ")";
  const Index d = problem.dimension();
  for (const auto &comp : coupled_components(problem)) {
    Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(d, d);
    for (Index i : comp)
      pooled += quad[i]->gram();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled, Eigen::EigenvaluesOnly);
    const double top = std::max(1.0, eig.eigenvalues().maxCoeff());
    if (eig.eigenvalues().minCoeff() <= 1e-12 * top) {
      if (comp.size() == 1 && problem.alpha == 0.0)
        return "GTVMin system is singular: alpha = 0 and node " +
               std::to_string(comp.front()) +
               " has rank-deficient features (parameters not identifiable)";
      std::string nodes;
      for (Index k = 0; k < comp.size() && k < 8; ++k)
        nodes += (k ? "," : "") + std::to_string(comp[k]);
      if (comp.size() > 8)
        nodes += ",...";
      return "GTVMin system is singular: graph component {" + nodes +
             "} has rank-deficient pooled features (parameters not identifiable)";
    }
  }
  return "GTVMin system is numerically singular (reciprocal condition " +
         format_real(rcond) + ")";
}

} // namespace

QuadraticLoss::QuadraticLoss(LocalDataset data) : data_(std::move(data)) {
  data_.validate();
  const double m = static_cast<double>(data_.sample_count());
  gram_ = data_.features.transpose() * data_.features / m;
  moment_ = data_.features.transpose() * data_.labels / m;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram_, Eigen::EigenvaluesOnly);
  smoothness_ = 2.0 * std::max(0.0, eig.eigenvalues().maxCoeff());
}

double QuadraticLoss::value(const Eigen::VectorXd &w) const {
  return quadratic_loss(data_, w);
}

Eigen::VectorXd QuadraticLoss::gradient(const Eigen::VectorXd &w) const {
  return quadratic_loss_gradient(data_, w);
}

StackedParams::StackedParams(Index node_count, Index dimension)
    : StackedParams(node_count, dimension,
                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_count * dimension))) {}

StackedParams::StackedParams(Index node_count, Index dimension, Eigen::VectorXd flat)
    : n_(node_count), d_(dimension), flat_(std::move(flat)) {
  if (static_cast<Index>(flat_.size()) != n_ * d_)
    throw ValidationError("stacked parameter length " + std::to_string(flat_.size()) +
                          " != n*d = " + std::to_string(n_ * d_));
}

Eigen::Index StackedParams::offset(Index i) const {
  if (i >= n_)
    throw ValidationError("node index " + std::to_string(i) + " out of range");
  return static_cast<Eigen::Index>(i * d_);
}

GTVMinProblem::GTVMinProblem(SimilarityGraph g,
                             std::vector<std::shared_ptr<const LocalLoss>> l,
                             double a)
    : graph(std::move(g)), losses(std::move(l)), alpha(a) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha))
    throw ValidationError("alpha must be a finite non-negative number");
  if (losses.size() != graph.node_count())
    throw ValidationError("graph has " + std::to_string(graph.node_count()) +
                          " nodes but " + std::to_string(losses.size()) +
                          " losses were given");
  for (const auto &loss : losses) {
    if (!loss)
      throw ValidationError("null local loss");
    if (loss->dimension() != losses.front()->dimension())
      throw ValidationError("local losses differ in dimension");
  }
}

GTVMinProblem GTVMinProblem::from_scenario(const Scenario &scenario, double alpha) {
  std::vector<std::shared_ptr<const LocalLoss>> losses;
  losses.reserve(scenario.node_count());
  for (const LocalDataset &ds : scenario.datasets)
    losses.push_back(std::make_shared<QuadraticLoss>(ds));
  return GTVMinProblem(scenario.graph, std::move(losses), alpha);
}

double total_variation(const SimilarityGraph &graph, const StackedParams &params) {
  if (params.node_count() != graph.node_count())
    throw ValidationError("parameter node count does not match graph");
  double tv = 0.0;
  for (const Edge &e : graph.edges())
    tv += e.weight * (params.node(e.u) - params.node(e.v)).squaredNorm();
  return tv;
}

double objective(const GTVMinProblem &problem, const StackedParams &params) {
  check_params(problem, params);
  double loss = 0.0;
  for (Index i = 0; i < problem.node_count(); ++i)
    loss += problem.losses[i]->value(params.node(i));
  return loss + problem.alpha * total_variation(problem.graph, params);
}

Eigen::VectorXd objective_gradient(const GTVMinProblem &problem,
                                   const StackedParams &params) {
  check_params(problem, params);
  StackedParams grad(problem.node_count(), problem.dimension());
  for (Index i = 0; i < problem.node_count(); ++i) {
    Eigen::VectorXd g = problem.losses[i]->gradient(params.node(i));
    for (const Neighbor &nb : problem.graph.neighbors(i))
      g += 2.0 * problem.alpha * nb.weight * (params.node(i) - params.node(nb.node));
    grad.node(i) = g;
  }
  return grad.flat();
}

double descent_step_size(const GTVMinProblem &problem) {
  double smooth = 0.0;
  for (const auto &loss : problem.losses)
    smooth = std::max(smooth, loss->smoothness());
  const double lf = smooth + 2.0 * problem.alpha * lambda_max(problem.graph);
  if (!(lf > 0.0) || !std::isfinite(lf))
    throw NumericalError("objective has no positive smoothness constant");
  return 1.0 / lf;
}

StackedParams synchronous_step(const GTVMinProblem &problem,
                               const StackedParams &current, double step) {
  check_params(problem, current);
  StackedParams next(problem.node_count(), problem.dimension());
  // Rounds are independent across nodes: each writes only its own block of
  // `next` and reads only `current`.
  for (Index i = 0; i < problem.node_count(); ++i) {
    const auto wi = current.node(i);
    Eigen::VectorXd g = problem.losses[i]->gradient(wi);
    for (const Neighbor &nb : problem.graph.neighbors(i))
      g += 2.0 * problem.alpha * nb.weight * (wi - current.node(nb.node));
    next.node(i) = wi - step * g;
  }
  return next;
}

SolveResult solve_exact(const GTVMinProblem &problem, double ridge) {
  if (!(ridge >= 0.0) || !std::isfinite(ridge))
    throw ValidationError("ridge must be non-negative");
  const Index n = problem.node_count();
  const Index d = problem.dimension();
  std::vector<const QuadraticLoss *> quad;
  for (const auto &loss : problem.losses) {
    const auto *q = dynamic_cast<const QuadraticLoss *>(loss.get());
    if (!q)
      throw ValidationError("solve_exact requires quadratic local losses");
    quad.push_back(q);
  }

  const auto N = static_cast<Eigen::Index>(n * d);
  Eigen::MatrixXd system = Eigen::MatrixXd::Zero(N, N);
  Eigen::VectorXd rhs(N);
  for (Index i = 0; i < n; ++i) {
    const auto bi = static_cast<Eigen::Index>(i * d);
    system.block(bi, bi, d, d) = quad[i]->gram();
    rhs.segment(bi, d) = quad[i]->moment();
  }
  // alpha * (L kron I_d): the Hessian of the TV term is twice this and the
  // loss Hessian is 2 Q, so the factor 2 cancels in the stationarity system.
  for (const Edge &e : problem.graph.edges()) {
    const double a = problem.alpha * e.weight;
    const auto bu = static_cast<Eigen::Index>(e.u * d);
    const auto bv = static_cast<Eigen::Index>(e.v * d);
    for (Index k = 0; k < d; ++k) {
      system(bu + k, bu + k) += a;
      system(bv + k, bv + k) += a;
      system(bu + k, bv + k) -= a;
      system(bv + k, bu + k) -= a;
    }
  }
  system.diagonal().array() += ridge;

  Eigen::LLT<Eigen::MatrixXd> llt(system);
  const double rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
  if (llt.info() != Eigen::Success || !(rcond >= kMinReciprocalCondition))
    throw NumericalError(describe_singularity(problem, quad, ridge, rcond));

  Eigen::VectorXd w = llt.solve(rhs);
  const double residual = (system * w - rhs).norm();
  if (!w.allFinite() || residual > kResidualTol * std::max(rhs.norm(), DBL_MIN))
    throw NumericalError("GTVMin system is too ill-conditioned: residual " +
                         format_real(residual) + " exceeds tolerance");

  SolveResult result;
  result.params = StackedParams(n, d, std::move(w));
  result.objective_value = objective(problem, result.params);
  result.iterations = 0;
  result.converged = true;
  result.residual = residual;
  result.alpha = problem.alpha;
  result.solver = "exact";
  return result;
}

SolveResult solve_iterative(const GTVMinProblem &problem,
                            const IterativeOptions &options) {
  if (options.max_iter == 0)
    throw ValidationError("max_iter must be positive");
  if (!(options.tol > 0.0))
    throw ValidationError("tol must be positive");
  const double step = descent_step_size(problem);

  StackedParams w(problem.node_count(), problem.dimension());
  double f = objective(problem, w);
  SolveResult result;
  Index iter = 0;
  while (iter < options.max_iter) {
    StackedParams next = synchronous_step(problem, w, step);
    const double f_next = objective(problem, next);
    ++iter;
    if (!std::isfinite(f_next))
      throw NumericalError("gradient descent diverged at iteration " +
                           std::to_string(iter));
    // Hybrid scale: a noiseless problem has f* = 0, where a purely relative
    // decrease never drops below tol.
    const double decrease = (f - f_next) / std::max(1.0, std::abs(f));
    w = std::move(next);
    f = f_next;
    if (decrease < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.residual = objective_gradient(problem, w).norm();
  result.params = std::move(w);
  result.objective_value = f;
  result.iterations = iter;
  result.alpha = problem.alpha;
  result.solver = "iterative";
  return result;
}

void write_result_json(std::ostream &out, const SolveResult &result) {
  ordered_json j;
  j["solver"] = result.solver;
  j["alpha"] = result.alpha;
  j["n"] = result.params.node_count();
  j["d"] = result.params.dimension();
  j["objective"] = result.objective_value;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["residual"] = result.residual;
  ordered_json params = ordered_json::array();
  const Eigen::VectorXd &flat = result.params.flat();
  for (Eigen::Index k = 0; k < flat.size(); ++k)
    params.push_back(flat[k]);
  j["params"] = std::move(params);
  out << j.dump(2) << '\n';
}

void write_result_json(const std::filesystem::path &path, const SolveResult &result) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory " + path.parent_path().string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot open " + path.string() + " for writing");
  write_result_json(out, result);
  if (!out)
    throw IoError("failed writing " + path.string());
}

SolveResult read_result_json(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open result file " + path.string());
  try {
    const ordered_json j = ordered_json::parse(in);
    SolveResult r;
    r.solver = j.value("solver", std::string{});
    r.alpha = j.at("alpha").get<double>();
    const auto n = j.at("n").get<Index>();
    const auto d = j.at("d").get<Index>();
    r.objective_value = j.at("objective").get<double>();
    r.iterations = j.at("iterations").get<Index>();
    r.converged = j.at("converged").get<bool>();
    r.residual = j.at("residual").get<double>();
    const auto values = j.at("params").get<std::vector<double>>();
    Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(
        values.data(), static_cast<Eigen::Index>(values.size()));
    r.params = StackedParams(n, d, std::move(flat));
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

} // namespace gtvmin
