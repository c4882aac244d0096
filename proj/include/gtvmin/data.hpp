#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gtvmin/graph.hpp"

namespace gtvmin {

/// Local dataset of node i: m_i x d features and m_i labels.
struct LocalDataset {
  Eigen::MatrixXd features;
  Eigen::VectorXd labels;

  Index sample_count() const { return static_cast<Index>(features.rows()); }
  Index dimension() const { return static_cast<Index>(features.cols()); }

  /// m >= 1, d >= 1, finite entries, label count equals row count.
  void validate() const;
};

/// (1/m) |y - X w|^2
double quadratic_loss(const LocalDataset &ds, const Eigen::VectorXd &w);

/// (2/m) X^T (X w - y)
Eigen::VectorXd quadratic_loss_gradient(const LocalDataset &ds,
                                        const Eigen::VectorXd &w);

struct ScenarioParams {
  std::uint64_t seed = 0;
  std::vector<Index> cluster_sizes;
  Index dimension = 1;
  Index samples_per_node = 1;
  double noise_std = 0.0;
  double separation = 1.0;
  PlantedPartitionParams graph;

  void validate() const;
};

/// Synthetic clustered federated-learning instance. Node i of cluster C has
/// y = X w_bar(C) + noise, and each cluster records the exact clustering
/// error sum_i (1/m_i) |noise_i|^2.
struct Scenario {
  std::vector<LocalDataset> datasets;
  SimilarityGraph graph{1};
  std::vector<ClusterSpec> clusters;
  Index dimension = 0;
  std::uint64_t seed = 0;
  /// Present for generated scenarios; absent for user-supplied ones that
  /// lack a generator section.
  std::optional<ScenarioParams> params;

  Index node_count() const { return datasets.size(); }
  void validate() const;
};

/// Deterministic in all arguments. Throws ValidationError on invalid sizes or
/// if cluster centres cannot be separated within 1000 redraws.
Scenario generate_scenario(const ScenarioParams &params);

/// Sum over cluster members of the local loss at w_bar.
double clustering_error(const Scenario &scenario, const ClusterSpec &cluster,
                        const Eigen::VectorXd &w_bar);

// Directory layout: graph.txt, meta.json, node_<i>.csv.
void write_scenario(const std::filesystem::path &dir, const Scenario &scenario);
Scenario read_scenario(const std::filesystem::path &dir);

} // namespace gtvmin
