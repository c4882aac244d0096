#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace gtvmin {

using Index = std::size_t;

/// Undirected weighted edge stored canonically with u < v.
struct Edge {
  Index u = 0;
  Index v = 0;
  double weight = 0.0;

  friend bool operator==(const Edge &, const Edge &) = default;
};

struct Neighbor {
  Index node = 0;
  double weight = 0.0;
};

/// Undirected similarity graph over n nodes with strictly positive edge
/// weights. Immutable once constructed; safe to share across threads.
class SimilarityGraph {
public:
  explicit SimilarityGraph(Index n) : SimilarityGraph(n, {}) {}

  /// Canonicalizes (min, max) and sorts edges. Rejects self-loops, bad
  /// indices, non-positive or non-finite weights, and repeated pairs with
  /// different weights (an exact repeat is collapsed).
  SimilarityGraph(Index n, std::vector<Edge> edges);

  Index node_count() const { return n_; }
  std::span<const Edge> edges() const { return edges_; }
  std::span<const Neighbor> neighbors(Index i) const;
  double weighted_degree(Index i) const { return degree_.at(i); }
  double max_degree() const;
  double total_weight() const;

  friend bool operator==(const SimilarityGraph &a, const SimilarityGraph &b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_;
  }

private:
  Index n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<double> degree_;
};

/// A node subset C together with the optional cluster-wise reference
/// parameters and clustering error.
struct ClusterSpec {
  std::vector<Index> members;
  std::optional<Eigen::VectorXd> reference_params;
  std::optional<double> epsilon;

  /// Throws ValidationError on empty/duplicate/out-of-range members or a
  /// negative epsilon.
  void validate(Index node_count) const;
  bool contains(Index node) const;
};

/// One representation vector z^(i) per node.
struct Embedding {
  std::vector<Eigen::VectorXd> vectors;
};

/// L = D - A. Symmetric positive semidefinite with zero row sums.
Eigen::MatrixXd laplacian(const SimilarityGraph &graph);

/// Subgraph spanned by the cluster members, re-indexed 0..|C|-1 in member
/// order.
SimilarityGraph induced_subgraph(const SimilarityGraph &graph,
                                 const ClusterSpec &cluster);

/// Second-smallest Laplacian eigenvalue (dense symmetric eigensolver).
/// Requires at least two nodes.
double lambda2(const SimilarityGraph &graph);

/// Largest Laplacian eigenvalue, 0 for an edgeless graph.
double lambda_max(const SimilarityGraph &graph);

struct Connectivity {
  double lambda2 = 0.0;
  bool disconnected = false;
};

/// lambda2 plus the disconnection verdict: lambda2 <= 1e-9 * max degree.
Connectivity algebraic_connectivity(const SimilarityGraph &graph);

/// Total weight of edges with exactly one endpoint in the cluster.
double cluster_boundary(const SimilarityGraph &graph, const ClusterSpec &cluster);

/// Total weight of edges with both endpoints in the cluster.
double cluster_interior_weight(const SimilarityGraph &graph,
                               const ClusterSpec &cluster);

struct PlantedPartitionParams {
  double p_in = 1.0;
  double p_out = 0.0;
  double w_in = 1.0;
  double w_out = 1.0;

  void validate() const;
};

struct PlantedGraph {
  SimilarityGraph graph;
  std::vector<ClusterSpec> clusters;
};

/// Stochastic-block-model graph: clusters occupy consecutive node ranges in
/// the order of `cluster_sizes`. Deterministic in `seed`.
PlantedGraph generate_planted_clusters(std::uint64_t seed,
                                       std::span<const Index> cluster_sizes,
                                       const PlantedPartitionParams &params);

/// Symmetric k-nearest-neighbour graph (edge kept if either endpoint picks
/// the other) with Gaussian weights exp(-|z_i - z_j|^2 / sigma^2). Ties in
/// distance are broken by the lower node index.
SimilarityGraph graph_from_embedding(const Embedding &embedding, Index k,
                                     double sigma);

// Text format: first line `n`, then `i j weight` per edge.
void write_graph(std::ostream &out, const SimilarityGraph &graph);
void write_graph(const std::filesystem::path &path, const SimilarityGraph &graph);
SimilarityGraph read_graph(std::istream &in);
SimilarityGraph read_graph(const std::filesystem::path &path);

} // namespace gtvmin
