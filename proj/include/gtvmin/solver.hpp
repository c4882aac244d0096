#pragma once

#include <iosfwd>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gtvmin/data.hpp"
#include "gtvmin/graph.hpp"

namespace gtvmin {

/// Contract for a non-negative, differentiable local loss L_i with an
/// L-smooth gradient. Only the quadratic instance ships, but the solvers and
/// bound checks are written against this interface.
class LocalLoss {
public:
  virtual ~LocalLoss() = default;
  virtual Index dimension() const = 0;
  virtual double value(const Eigen::VectorXd &w) const = 0;
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd &w) const = 0;
  /// Lipschitz constant of the gradient.
  virtual double smoothness() const = 0;
};

/// L(w) = (1/m) |y - X w|^2
class QuadraticLoss final : public LocalLoss {
public:
  explicit QuadraticLoss(LocalDataset data);

  Index dimension() const override { return data_.dimension(); }
  double value(const Eigen::VectorXd &w) const override;
  Eigen::VectorXd gradient(const Eigen::VectorXd &w) const override;
  double smoothness() const override { return smoothness_; }

  /// (1/m) X^T X
  const Eigen::MatrixXd &gram() const { return gram_; }
  /// (1/m) X^T y
  const Eigen::VectorXd &moment() const { return moment_; }
  const LocalDataset &data() const { return data_; }

private:
  LocalDataset data_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd moment_;
  double smoothness_ = 0.0;
};

/// n parameter vectors of dimension d stored contiguously in node order.
class StackedParams {
public:
  StackedParams() = default;
  StackedParams(Index node_count, Index dimension);
  StackedParams(Index node_count, Index dimension, Eigen::VectorXd flat);

  Index node_count() const { return n_; }
  Index dimension() const { return d_; }

  auto node(Index i) const { return flat_.segment(offset(i), d_); }
  auto node(Index i) { return flat_.segment(offset(i), d_); }

  const Eigen::VectorXd &flat() const { return flat_; }
  Eigen::VectorXd &flat() { return flat_; }

private:
  Eigen::Index offset(Index i) const;

  Index n_ = 0;
  Index d_ = 0;
  Eigen::VectorXd flat_;
};

/// min_w  sum_i L_i(w_i) + alpha * sum_{edges} A_ij |w_i - w_j|^2
struct GTVMinProblem {
  SimilarityGraph graph{1};
  std::vector<std::shared_ptr<const LocalLoss>> losses;
  double alpha = 0.0;

  GTVMinProblem(SimilarityGraph graph,
                std::vector<std::shared_ptr<const LocalLoss>> losses,
                double alpha);

  /// Quadratic losses built from the scenario's datasets.
  static GTVMinProblem from_scenario(const Scenario &scenario, double alpha);

  Index node_count() const { return graph.node_count(); }
  Index dimension() const { return losses.front()->dimension(); }
};

struct SolveResult {
  StackedParams params;
  double objective_value = 0.0;
  Index iterations = 0;
  bool converged = false;
  /// Linear-system residual (exact) or final gradient norm (iterative).
  double residual = 0.0;
  double alpha = 0.0;
  std::string solver;
};

struct IterativeOptions {
  Index max_iter = 100000;
  double tol = 1e-12;
};

/// sum_{edges} A_ij |w_i - w_j|^2
double total_variation(const SimilarityGraph &graph, const StackedParams &params);

double objective(const GTVMinProblem &problem, const StackedParams &params);

/// Gradient of the full objective, flattened in node order.
Eigen::VectorXd objective_gradient(const GTVMinProblem &problem,
                                   const StackedParams &params);

/// Step size 1/L_f with L_f = max_i smoothness_i + 2 alpha lambda_max(L).
double descent_step_size(const GTVMinProblem &problem);

/// One synchronous (Jacobi) gradient round. Node i reads only its own loss
/// and the current parameters of its graph neighbours.
StackedParams synchronous_step(const GTVMinProblem &problem,
                               const StackedParams &current, double step);

/// Dense direct solve of (Q + alpha L (x) I + ridge I) w = q. Requires
/// QuadraticLoss instances. Throws NumericalError naming the cause when the
/// system is singular; there is no silent pseudo-inverse.
SolveResult solve_exact(const GTVMinProblem &problem, double ridge = 0.0);

/// Synchronous gradient descent from all-zero parameters with step 1/L_f,
/// stopping when (f_k - f_{k+1}) / max(1, |f_k|) drops below tol.
SolveResult solve_iterative(const GTVMinProblem &problem,
                            const IterativeOptions &options = {});

void write_result_json(std::ostream &out, const SolveResult &result);
void write_result_json(const std::filesystem::path &path, const SolveResult &result);
SolveResult read_result_json(const std::filesystem::path &path);

} // namespace gtvmin
