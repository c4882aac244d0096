#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "gtvmin/errors.hpp"
#include "gtvmin/solver.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace gtvmin;
using testing_support::to_eigen;
using testing_support::to_std;

namespace {

ScenarioParams params(std::uint64_t seed, std::vector<Index> sizes, Index d, double noise) {
  ScenarioParams p;
  p.seed = seed;
  p.cluster_sizes = std::move(sizes);
  p.dimension = d;
  p.samples_per_node = d + 4;
  p.noise_std = noise;
  p.separation = 2.0;
  p.graph = {0.9, 0.15, 1.0, 0.2};
  return p;
}

std::shared_ptr<const LocalLoss> quad(Eigen::MatrixXd x, Eigen::VectorXd y) {
  LocalDataset ds;
  ds.features = std::move(x);
  ds.labels = std::move(y);
  return std::make_shared<QuadraticLoss>(std::move(ds));
}

Eigen::VectorXd random_vector(std::mt19937_64 &rng, Index size, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Eigen::VectorXd v(size);
  for (auto &x : v)
    x = normal(rng);
  return v;
}

} // namespace

TEST(TotalVariation, HandComputedValues) {
  const SimilarityGraph g(2, {{0, 1, 2.0}});
  StackedParams w(2, 2);
  w.node(0) << 1, 0;
  w.node(1) << 4, 0;
  EXPECT_DOUBLE_EQ(total_variation(g, w), 18.0);
  w.node(1) << 1, 0;
  EXPECT_EQ(total_variation(g, w), 0.0);
}

TEST(TotalVariation, MatchesExplicitKroneckerForm) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 30; ++t) {
    const Index n = 2 + t % 9, d = 1 + t % 4;
    const SimilarityGraph g = testing_support::random_graph(rng, n, 0.5, false);
    const StackedParams w(n, d, random_vector(rng, n * d));
    const auto L = oracle::laplacian(n, testing_support::edges_of(g));
    const double ref = oracle::kron_quadratic_form(L, to_std(w.flat()), d);
    EXPECT_NEAR(total_variation(g, w), ref, 1e-9 * std::max(1.0, ref));
    EXPECT_GE(total_variation(g, w), 0.0);
  }
}

TEST(Objective, MatchesReferenceEvaluator) {
  std::mt19937_64 rng(6);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = generate_scenario(params(seed, {3, 4}, 3, 0.4));
    const double alpha = 0.3 + seed;
    const GTVMinProblem problem = GTVMinProblem::from_scenario(s, alpha);
    const StackedParams w(s.node_count(), 3, random_vector(rng, s.node_count() * 3));
    const double ref = oracle::gtv_objective(testing_support::datasets_of(s),
                                             testing_support::edges_of(s.graph), alpha,
                                             to_std(w.flat()), 3);
    EXPECT_NEAR(objective(problem, w), ref, 1e-10 * std::max(1.0, ref));
  }
}

TEST(ObjectiveGradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(7);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = generate_scenario(params(seed, {2, 3}, 2, 0.5));
    const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 1.5);
    const Index n = s.node_count();
    const Eigen::VectorXd w = random_vector(rng, n * 2);
    const auto fd = oracle::central_difference(
        [&](const oracle::Vector &x) {
          return objective(problem, StackedParams(n, 2, to_eigen(x)));
        },
        to_std(w), 1e-6);
    const Eigen::VectorXd g = objective_gradient(problem, StackedParams(n, 2, w));
    const double rel = (g - to_eigen(fd)).norm() / std::max(1.0, g.norm());
    EXPECT_LE(rel, 1e-5);
  }
}

TEST(GTVMinProblem, Validation) {
  const auto loss = quad(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1));
  EXPECT_THROW(GTVMinProblem(SimilarityGraph(2), {loss}, 1.0), ValidationError);
  EXPECT_THROW(GTVMinProblem(SimilarityGraph(1), {loss}, -1.0), ValidationError);
  EXPECT_THROW(GTVMinProblem(SimilarityGraph(1), {loss}, NAN), ValidationError);
  EXPECT_THROW(GTVMinProblem(SimilarityGraph(1), {nullptr}, 1.0), ValidationError);
  const auto other = quad(Eigen::MatrixXd::Identity(3, 3), Eigen::Vector3d(1, 1, 1));
  EXPECT_THROW(GTVMinProblem(SimilarityGraph(2), {loss, other}, 1.0), ValidationError);
  EXPECT_NO_THROW(GTVMinProblem(SimilarityGraph(1), {loss}, 0.0));
}

TEST(SolveExact, ZeroAlphaGivesLocalLeastSquares) {
  const Scenario s = generate_scenario(params(11, {3, 3}, 3, 0.7));
  const SolveResult r = solve_exact(GTVMinProblem::from_scenario(s, 0.0));
  const auto data = testing_support::datasets_of(s);
  for (Index i = 0; i < s.node_count(); ++i) {
    const auto ols = oracle::pooled_least_squares({data[i]}, 3);
    EXPECT_LE((r.params.node(i) - to_eigen(ols)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SolveExact, SingleNodeGivesLeastSquares) {
  const Scenario s = generate_scenario(params(12, {1}, 4, 1.0));
  for (double alpha : {0.0, 1.0, 100.0}) {
    const SolveResult r = solve_exact(GTVMinProblem::from_scenario(s, alpha));
    const auto ols = oracle::pooled_least_squares(testing_support::datasets_of(s), 4);
    EXPECT_LE((r.params.node(0) - to_eigen(ols)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(SolveExact, LargeAlphaApproachesPooledSolution) {
  ScenarioParams p = params(13, {6}, 3, 0.5);
  p.graph.p_in = 1.0;
  const Scenario s = generate_scenario(p);
  const SolveResult r = solve_exact(GTVMinProblem::from_scenario(s, 1e6));
  const Eigen::VectorXd pooled =
      to_eigen(oracle::pooled_least_squares(testing_support::datasets_of(s), 3));
  for (Index i = 0; i < s.node_count(); ++i)
    EXPECT_LE((r.params.node(i) - pooled).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(SolveExact, MatchesOracleLinearSolve) {
  const Scenario s = generate_scenario(params(14, {2, 3}, 2, 0.3));
  const double alpha = 2.5;
  const SolveResult r = solve_exact(GTVMinProblem::from_scenario(s, alpha));
  const Index n = s.node_count(), d = 2;
  const auto data = testing_support::datasets_of(s);
  const auto L = oracle::laplacian(n, testing_support::edges_of(s.graph));
  oracle::Matrix A = oracle::zeros(n * d, n * d);
  oracle::Vector b(n * d, 0.0);
  for (Index i = 0; i < n; ++i) {
    const double m = static_cast<double>(data[i].x.size());
    for (Index row = 0; row < data[i].x.size(); ++row)
      for (Index j = 0; j < d; ++j) {
        b[i * d + j] += data[i].x[row][j] * data[i].y[row] / m;
        for (Index k = 0; k < d; ++k)
          A[i * d + j][i * d + k] += data[i].x[row][j] * data[i].x[row][k] / m;
      }
    for (Index j = 0; j < n; ++j)
      for (Index k = 0; k < d; ++k)
        A[i * d + k][j * d + k] += alpha * L[i][j];
  }
  const Eigen::VectorXd ref = to_eigen(oracle::solve(A, b));
  EXPECT_LE((r.params.flat() - ref).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.solver, "exact");
  EXPECT_EQ(r.alpha, alpha);
}

TEST(SolveExact, GlobalMinimumAgainstPerturbations) {
  std::mt19937_64 rng(15);
  const Scenario s = generate_scenario(params(15, {3, 4}, 3, 0.5));
  const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 1.0);
  const SolveResult r = solve_exact(problem);
  const double f = r.objective_value;
  EXPECT_NEAR(f, objective(problem, r.params), 1e-12 * std::max(1.0, f));
  for (int t = 0; t < 100; ++t) {
    const double scale = std::pow(10.0, -3 + t % 4);
    StackedParams w = r.params;
    w.flat() += random_vector(rng, w.flat().size(), scale);
    EXPECT_GE(objective(problem, w), f - 1e-9 * std::max(1.0, f));
  }
}

TEST(SolveExact, StationaryPoint) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Scenario s = generate_scenario(params(seed, {3, 3}, 2, 1.0));
    const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 0.5 + seed);
    const SolveResult r = solve_exact(problem);
    Eigen::VectorXd q(s.node_count() * 2);
    for (Index i = 0; i < s.node_count(); ++i)
      q.segment(i * 2, 2) =
          static_cast<const QuadraticLoss &>(*problem.losses[i]).moment();
    EXPECT_LE(objective_gradient(problem, r.params).norm(), 1e-7 * (1.0 + q.norm()));
    EXPECT_LE(r.residual, 1e-8 * q.norm());
  }
}

TEST(SolveExact, TotalVariationDecreasesWithAlpha) {
  const Scenario s = generate_scenario(params(16, {4, 4}, 3, 0.5));
  double prev = std::numeric_limits<double>::infinity();
  for (double alpha : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    const SolveResult r = solve_exact(GTVMinProblem::from_scenario(s, alpha));
    const double tv = total_variation(s.graph, r.params);
    EXPECT_LE(tv, prev + 1e-9 * std::max(1.0, prev));
    prev = tv;
  }
}

TEST(SolveExact, RankDeficientNodeWithoutCouplingIsSingular) {
  Eigen::MatrixXd x(1, 2);
  x << 1, 1;
  const auto deficient = quad(x, Eigen::VectorXd::Ones(1));
  const GTVMinProblem problem(SimilarityGraph(1), {deficient}, 0.0);
  try {
    solve_exact(problem);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError &e) {
    EXPECT_NE(std::string(e.what()).find("rank"), std::string::npos);
  }
  // Ridge makes the system solvable.
  const SolveResult r = solve_exact(problem, 1e-3);
  EXPECT_TRUE(r.params.flat().allFinite());
}

TEST(SolveExact, CouplingRescuesRankDeficientNodes) {
  Eigen::MatrixXd a(1, 2), b(1, 2);
  a << 1, 0;
  b << 0, 1;
  const GTVMinProblem coupled(SimilarityGraph(2, {{0, 1, 1.0}}),
                              {quad(a, Eigen::VectorXd::Ones(1)), quad(b, Eigen::VectorXd::Ones(1))},
                              1.0);
  EXPECT_NO_THROW(solve_exact(coupled));
  const GTVMinProblem split(SimilarityGraph(2),
                            {quad(a, Eigen::VectorXd::Ones(1)), quad(b, Eigen::VectorXd::Ones(1))},
                            1.0);
  EXPECT_THROW(solve_exact(split), NumericalError);
}

TEST(SolveExact, NegativeRidgeRejected) {
  const GTVMinProblem problem(SimilarityGraph(1),
                              {quad(Eigen::MatrixXd::Identity(2, 2), Eigen::Vector2d(1, 1))}, 0.0);
  EXPECT_THROW(solve_exact(problem, -1.0), ValidationError);
}

TEST(SolveIterative, ObjectiveIsMonotone) {
  const Scenario s = generate_scenario(params(21, {3, 4}, 3, 0.5));
  const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 2.0);
  const double step = descent_step_size(problem);
  StackedParams w(s.node_count(), 3);
  double prev = objective(problem, w);
  for (int k = 0; k < 200; ++k) {
    w = synchronous_step(problem, w, step);
    const double f = objective(problem, w);
    EXPECT_LE(f, prev + 1e-12 * std::max(1.0, prev));
    prev = f;
  }
}

TEST(SolveIterative, ZeroAlphaMatchesLocalLeastSquares) {
  // The objective-decrease rule leaves a parameter error of order
  // sqrt(tol * f), so a 1e-6 match needs a tighter tol than the default.
  const Scenario s = generate_scenario(params(22, {2, 2}, 2, 0.5));
  const SolveResult r = solve_iterative(GTVMinProblem::from_scenario(s, 0.0), {100000, 1e-15});
  EXPECT_TRUE(r.converged);
  const auto data = testing_support::datasets_of(s);
  for (Index i = 0; i < s.node_count(); ++i) {
    const auto ols = oracle::pooled_least_squares({data[i]}, 2);
    EXPECT_LE((r.params.node(i) - to_eigen(ols)).norm(), 1e-6);
  }
}

TEST(SolveIterative, NoiselessProblemTerminates) {
  ScenarioParams p = params(25, {3, 3}, 2, 0.0);
  const Scenario s = generate_scenario(p);
  const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 1.0);
  const SolveResult r = solve_iterative(problem);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.iterations, 100000u);
  EXPECT_LE((r.params.flat() - solve_exact(problem).params.flat()).cwiseAbs().maxCoeff(),
            1e-5);
}

TEST(SolveIterative, AgreesWithExactSolve) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Scenario s = generate_scenario(params(seed, {3, 3}, 2, 0.5));
    const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 1.0);
    const SolveResult exact = solve_exact(problem);
    const SolveResult iter = solve_iterative(problem);
    EXPECT_TRUE(iter.converged);
    EXPECT_EQ(iter.solver, "iterative");
    EXPECT_LE((exact.params.flat() - iter.params.flat()).cwiseAbs().maxCoeff(), 1e-5);
  }
}

TEST(SolveIterative, IterationCapReportsNotConverged) {
  const Scenario s = generate_scenario(params(23, {3, 3}, 2, 0.5));
  const SolveResult r = solve_iterative(GTVMinProblem::from_scenario(s, 1.0), {3, 1e-12});
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.iterations, 3u);
}

TEST(SolveIterative, InvalidOptions) {
  const Scenario s = generate_scenario(params(24, {2}, 2, 0.5));
  const GTVMinProblem problem = GTVMinProblem::from_scenario(s, 1.0);
  EXPECT_THROW(solve_iterative(problem, {0, 1e-12}), ValidationError);
  EXPECT_THROW(solve_iterative(problem, {10, 0.0}), ValidationError);
}

TEST(SynchronousStep, UsesOnlyNeighbourParameters) {
  // Path 0-1-2-3: node 0's update must not depend on nodes 2 and 3.
  std::mt19937_64 rng(31);
  ScenarioParams p = params(31, {4}, 2, 0.5);
  const Scenario s = generate_scenario(p);
  const SimilarityGraph path(4, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 3, 2.0}});
  std::vector<std::shared_ptr<const LocalLoss>> losses;
  for (const auto &ds : s.datasets)
    losses.push_back(std::make_shared<QuadraticLoss>(ds));
  const GTVMinProblem problem(path, losses, 1.3);
  const StackedParams w(4, 2, random_vector(rng, 8));
  StackedParams changed = w;
  changed.node(2).setZero();
  changed.node(3) = random_vector(rng, 2);
  const double step = descent_step_size(problem);
  const StackedParams a = synchronous_step(problem, w, step);
  const StackedParams b = synchronous_step(problem, changed, step);
  EXPECT_EQ(Eigen::VectorXd(a.node(0)), Eigen::VectorXd(b.node(0)));
  EXPECT_NE(Eigen::VectorXd(a.node(1)), Eigen::VectorXd(b.node(1)));
}

TEST(StackedParams, Layout) {
  StackedParams w(3, 2);
  EXPECT_EQ(w.flat().size(), 6);
  w.node(1) << 5, 6;
  EXPECT_EQ(w.flat()[2], 5);
  EXPECT_EQ(w.flat()[3], 6);
  EXPECT_THROW(StackedParams(3, 2, Eigen::VectorXd::Zero(5)), ValidationError);
}

TEST(ResultJson, RoundTripIsExact) {
  const auto dir = testing_support::temp_dir("result_json");
  const Scenario s = generate_scenario(params(41, {3, 2}, 3, 0.9));
  const SolveResult r = solve_exact(GTVMinProblem::from_scenario(s, 0.7));
  write_result_json(dir / "r.json", r);
  const SolveResult back = read_result_json(dir / "r.json");
  EXPECT_EQ(back.params.flat(), r.params.flat());
  EXPECT_EQ(back.params.node_count(), r.params.node_count());
  EXPECT_EQ(back.objective_value, r.objective_value);
  EXPECT_EQ(back.alpha, r.alpha);
  EXPECT_EQ(back.residual, r.residual);
  EXPECT_EQ(back.converged, r.converged);
  EXPECT_EQ(back.solver, r.solver);
  EXPECT_THROW(read_result_json(dir / "missing.json"), IoError);
  std::ofstream(dir / "bad.json") << "{\"solver\": 1}";
  EXPECT_THROW(read_result_json(dir / "bad.json"), ValidationError);
}
